// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "snapq/codebook.hpp"

namespace snapq {

// Encoded database pinned to one codebook snapshot. Labels are optional;
// when present they align 1:1 with the codes.
struct SearchIndex {
  Codebook cb;
  std::vector<PqCode> codes;
  std::vector<int> labels;

  std::size_t size() const { return codes.size(); }
};

struct SearchHit {
  std::size_t id = 0;
  double distance_sq = 0.0;
};

struct EvalReport {
  double map = 0.0;
  std::vector<std::pair<std::size_t, double>> precision_at_k;
  std::size_t num_queries = 0;       // queries contributing to the mean
  std::size_t retrieval_cutoff = 0;  // ranking length the metrics saw
};

// Encodes every vector against the codebook. labels may be empty.
SearchIndex build_index(const Codebook& cb, std::span<const float> vectors,
                        std::span<const int> labels = {});

// Exhaustive ADC scan: ids ordered by approximate squared distance
// ascending, ties by ascending id; exactly min(limit, N) results.
std::vector<SearchHit> search(const SearchIndex& index, std::span<const float> query,
                              std::size_t limit);

// Exact squared-euclidean scan with the same ordering rules; the
// uncompressed upper-bound baseline.
std::vector<SearchHit> exhaustive_l2_search(std::span<const float> vectors, std::size_t dim,
                                            std::span<const float> query, std::size_t limit);

// Mean average precision over ranked id lists truncated at `cutoff`
// (0 means full length). Relevance is label equality, or any shared bit
// when `multi_label` treats labels as bitmasks. AP uses the number of
// relevant items retrieved within the cutoff as denominator; at full-length
// rankings this coincides with the textbook definition. Queries with no
// relevant item anywhere in the database are excluded from the mean;
// queries whose relevant items were simply not retrieved score 0.
// precision@k is reported for each requested k.
EvalReport mean_average_precision(const std::vector<std::vector<std::size_t>>& rankings,
                                  std::span<const int> query_labels, std::span<const int> db_labels,
                                  std::size_t cutoff,
                                  const std::vector<std::size_t>& precision_ks = {},
                                  bool multi_label = false);

}  // namespace snapq
