// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#include "snapq/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "snapq/common.hpp"

namespace snapq {

namespace {

void sort_and_clip(std::vector<SearchHit>& hits, std::size_t limit) {
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.distance_sq != b.distance_sq) return a.distance_sq < b.distance_sq;
    return a.id < b.id;
  });
  if (hits.size() > limit) hits.resize(limit);
}

bool relevant(int a, int b, bool multi_label) {
  if (multi_label) {
    return (static_cast<unsigned>(a) & static_cast<unsigned>(b)) != 0;
  }
  return a == b;
}

}  // namespace

SearchIndex build_index(const Codebook& cb, std::span<const float> vectors,
                        std::span<const int> labels) {
  if (vectors.size() % cb.dim() != 0) {
    throw InvalidArgument("build_index: vector data size is not a multiple of codebook dim");
  }
  const std::size_t n = vectors.size() / cb.dim();
  if (!labels.empty() && labels.size() != n) {
    throw InvalidArgument("build_index: label count does not match vector count");
  }
  SearchIndex index;
  index.cb = cb;
  index.codes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    index.codes.push_back(encode(cb, {vectors.data() + i * cb.dim(), cb.dim()}));
  }
  index.labels.assign(labels.begin(), labels.end());
  return index;
}

std::vector<SearchHit> search(const SearchIndex& index, std::span<const float> query,
                              std::size_t limit) {
  if (index.codes.empty()) throw InvalidArgument("search: empty index");
  if (limit < 1) throw InvalidArgument("search: limit must be >= 1");

  const DistanceTable table = build_distance_table(index.cb, query);
  std::vector<SearchHit> hits;
  hits.reserve(index.codes.size());
  for (std::size_t i = 0; i < index.codes.size(); ++i) {
    hits.push_back({i, adc_distance(table, index.codes[i])});
  }
  sort_and_clip(hits, limit);
  return hits;
}

std::vector<SearchHit> exhaustive_l2_search(std::span<const float> vectors, std::size_t dim,
                                            std::span<const float> query, std::size_t limit) {
  if (dim == 0 || vectors.size() % dim != 0) {
    throw InvalidArgument("exhaustive_l2_search: bad vector data size");
  }
  const std::size_t n = vectors.size() / dim;
  if (n == 0) throw InvalidArgument("exhaustive_l2_search: empty database");
  if (query.size() != dim) throw InvalidArgument("exhaustive_l2_search: query dim mismatch");
  if (limit < 1) throw InvalidArgument("exhaustive_l2_search: limit must be >= 1");

  std::vector<SearchHit> hits;
  hits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = vectors.data() + i * dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = static_cast<double>(query[j]) - static_cast<double>(row[j]);
      acc += d * d;
    }
    hits.push_back({i, acc});
  }
  sort_and_clip(hits, limit);
  return hits;
}

EvalReport mean_average_precision(const std::vector<std::vector<std::size_t>>& rankings,
                                  std::span<const int> query_labels, std::span<const int> db_labels,
                                  std::size_t cutoff, const std::vector<std::size_t>& precision_ks,
                                  bool multi_label) {
  if (rankings.size() != query_labels.size()) {
    throw InvalidArgument("mean_average_precision: ranking/label count mismatch");
  }

  EvalReport report;
  report.retrieval_cutoff = cutoff == 0 ? db_labels.size() : cutoff;

  std::vector<double> precision_sums(precision_ks.size(), 0.0);
  double ap_sum = 0.0;
  std::size_t counted = 0;

  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const int qlabel = query_labels[q];

    bool has_relevant = false;
    for (int dl : db_labels) {
      if (relevant(qlabel, dl, multi_label)) {
        has_relevant = true;
        break;
      }
    }
    if (!has_relevant) continue;  // undefined AP, excluded from the mean
    ++counted;

    const std::vector<std::size_t>& ranking = rankings[q];
    const std::size_t len = std::min<std::size_t>(ranking.size(), report.retrieval_cutoff);

    double precision_acc = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < len; ++r) {
      const std::size_t id = ranking[r];
      if (id >= db_labels.size()) {
        throw InvalidArgument("mean_average_precision: ranked id out of range");
      }
      if (relevant(qlabel, db_labels[id], multi_label)) {
        ++hits;
        precision_acc += static_cast<double>(hits) / static_cast<double>(r + 1);
      }
      for (std::size_t ki = 0; ki < precision_ks.size(); ++ki) {
        if (r + 1 == precision_ks[ki]) {
          precision_sums[ki] += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
      }
    }
    // ranking shorter than a requested k still counts its hits at that k
    for (std::size_t ki = 0; ki < precision_ks.size(); ++ki) {
      if (precision_ks[ki] > len) {
        precision_sums[ki] +=
            static_cast<double>(hits) / static_cast<double>(precision_ks[ki]);
      }
    }
    if (hits > 0) ap_sum += precision_acc / static_cast<double>(hits);
  }

  report.num_queries = counted;
  report.map = counted > 0 ? ap_sum / static_cast<double>(counted) : 0.0;
  for (std::size_t ki = 0; ki < precision_ks.size(); ++ki) {
    report.precision_at_k.emplace_back(
        precision_ks[ki], counted > 0 ? precision_sums[ki] / static_cast<double>(counted) : 0.0);
  }
  return report;
}

}  // namespace snapq
