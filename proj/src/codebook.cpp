// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#include "snapq/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "snapq/binary_io.hpp"
#include "snapq/common.hpp"
#include "snapq/rng.hpp"

namespace snapq {

namespace {

constexpr std::uint32_t kCodebookMagic = 0x42435153;  // "SQCB" little-endian
constexpr std::uint32_t kCodebookFormatVersion = 1;

double sq_dist(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    acc += d * d;
  }
  return acc;
}

double sq_dist_fd(const float* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = static_cast<double>(a[j]) - b[j];
    acc += d * d;
  }
  return acc;
}

// One subspace of the training set, gathered contiguously.
struct SubspaceView {
  std::vector<float> points;  // n * sub_dim
  std::size_t n = 0;
  std::size_t sub_dim = 0;
  const float* point(std::size_t i) const { return points.data() + i * sub_dim; }
};

// k-means++ seeding. First center uniform, following centers sampled with
// probability proportional to the squared distance to the nearest chosen
// center. Degenerate data (all remaining distances zero) falls back to a
// uniform pick so duplicated points still yield K centers.
std::vector<double> kmeans_pp_init(const SubspaceView& sub, std::size_t k, Rng& rng) {
  std::vector<double> centers(k * sub.sub_dim);
  std::vector<double> best_dist(sub.n, std::numeric_limits<double>::infinity());

  std::size_t first = rng.uniform_index(sub.n);
  for (std::size_t j = 0; j < sub.sub_dim; ++j) centers[j] = sub.point(first)[j];

  for (std::size_t c = 1; c < k; ++c) {
    const double* prev = centers.data() + (c - 1) * sub.sub_dim;
    double total = 0.0;
    for (std::size_t i = 0; i < sub.n; ++i) {
      best_dist[i] = std::min(best_dist[i], sq_dist_fd(sub.point(i), prev, sub.sub_dim));
      total += best_dist[i];
    }
    std::size_t chosen;
    if (total <= 0.0) {
      chosen = rng.uniform_index(sub.n);
    } else {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      chosen = sub.n - 1;
      for (std::size_t i = 0; i < sub.n; ++i) {
        acc += best_dist[i];
        if (acc > target) {
          chosen = i;
          break;
        }
      }
    }
    double* dst = centers.data() + c * sub.sub_dim;
    for (std::size_t j = 0; j < sub.sub_dim; ++j) dst[j] = sub.point(chosen)[j];
  }
  return centers;
}

// Nearest center per point, ties toward the smaller index. Returns the
// summed squared distance of the assignment.
double assign_points(const SubspaceView& sub, const std::vector<double>& centers, std::size_t k,
                     std::vector<std::size_t>& assign) {
  double cost = 0.0;
  for (std::size_t i = 0; i < sub.n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist_fd(sub.point(i), centers.data() + c * sub.sub_dim, sub.sub_dim);
      if (d < best) {
        best = d;
        best_k = c;
      }
    }
    assign[i] = best_k;
    cost += best;
  }
  return cost;
}

// Lloyd update: centers move to the mean of their cluster. Empty clusters
// steal the point currently farthest from its assigned center, one at a
// time, never draining a cluster below one point.
void update_centers(const SubspaceView& sub, std::size_t k, std::vector<std::size_t>& assign,
                    std::vector<double>& centers) {
  const std::size_t d = sub.sub_dim;
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < sub.n; ++i) counts[assign[i]]++;

  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    // Farthest point whose cluster keeps at least one member; ties toward
    // the smaller point index for determinism.
    double worst = -1.0;
    std::size_t steal = sub.n;
    for (std::size_t i = 0; i < sub.n; ++i) {
      if (counts[assign[i]] <= 1) continue;
      const double dist =
          sq_dist_fd(sub.point(i), centers.data() + assign[i] * d, d);
      if (dist > worst) {
        worst = dist;
        steal = i;
      }
    }
    if (steal == sub.n) continue;  // every cluster is a singleton already
    counts[assign[steal]]--;
    assign[steal] = c;
    counts[c] = 1;
  }

  std::fill(centers.begin(), centers.end(), 0.0);
  for (std::size_t i = 0; i < sub.n; ++i) {
    double* dst = centers.data() + assign[i] * d;
    const float* p = sub.point(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] += p[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    double* dst = centers.data() + c * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] /= static_cast<double>(counts[c]);
  }
}

}  // namespace

Codebook::Codebook(std::size_t subspace_count, std::size_t codeword_count, std::size_t sub_dim,
                   std::vector<float> data, std::uint64_t version)
    : subspace_count_(subspace_count),
      codeword_count_(codeword_count),
      sub_dim_(sub_dim),
      version_(version),
      data_(std::move(data)) {
  if (subspace_count_ == 0 || codeword_count_ == 0 || sub_dim_ == 0) {
    throw InvalidArgument("codebook dimensions must be positive");
  }
  if (data_.size() != subspace_count_ * codeword_count_ * sub_dim_) {
    throw InvalidArgument("codebook data size does not match M*K*sub_dim");
  }
  for (float f : data_) {
    if (!std::isfinite(f)) throw InvalidArgument("codebook contains non-finite codeword");
  }
}

Codebook train_codebook(std::span<const float> data, std::size_t dim, std::size_t subspace_count,
                        std::size_t codeword_count, std::size_t iters, std::uint64_t seed,
                        std::vector<double>* error_curve) {
  if (dim == 0 || data.size() % dim != 0) {
    throw InvalidArgument("training data size is not a multiple of dim");
  }
  if (subspace_count == 0 || dim % subspace_count != 0) {
    throw InvalidArgument("dim must be divisible by the subspace count");
  }
  if (iters < 1) throw InvalidArgument("iters must be >= 1");
  const std::size_t n = data.size() / dim;
  if (n < codeword_count) {
    throw InvalidArgument("need at least K training vectors, got " + std::to_string(n));
  }

  const std::size_t sub_dim = dim / subspace_count;

  std::vector<std::vector<double>> centers(subspace_count);
  std::vector<double> iter_cost(iters + 1, 0.0);

  for (std::size_t m = 0; m < subspace_count; ++m) {
    SubspaceView sub;
    sub.n = n;
    sub.sub_dim = sub_dim;
    sub.points.resize(n * sub_dim);
    for (std::size_t i = 0; i < n; ++i) {
      const float* src = data.data() + i * dim + m * sub_dim;
      std::copy(src, src + sub_dim, sub.points.begin() + i * sub_dim);
    }

    Rng rng(mix_seed(seed, m));
    std::vector<double> c = kmeans_pp_init(sub, codeword_count, rng);
    std::vector<std::size_t> assign(n);

    // Cost is measured at each assignment step, which makes the recorded
    // curve non-increasing: the mean update cannot raise the cost of a fixed
    // assignment, and a fresh assignment cannot raise it either.
    iter_cost[0] += assign_points(sub, c, codeword_count, assign);
    for (std::size_t it = 0; it < iters; ++it) {
      update_centers(sub, codeword_count, assign, c);
      iter_cost[it + 1] += assign_points(sub, c, codeword_count, assign);
    }
    centers[m] = std::move(c);
  }

  if (error_curve) {
    error_curve->clear();
    for (double cost : iter_cost) error_curve->push_back(cost / static_cast<double>(n));
  }

  std::vector<float> flat(subspace_count * codeword_count * sub_dim);
  for (std::size_t m = 0; m < subspace_count; ++m) {
    for (std::size_t i = 0; i < codeword_count * sub_dim; ++i) {
      flat[m * codeword_count * sub_dim + i] = static_cast<float>(centers[m][i]);
    }
  }
  return Codebook(subspace_count, codeword_count, sub_dim, std::move(flat), 0);
}

PqCode encode(const Codebook& cb, std::span<const float> vec) {
  if (vec.size() != cb.dim()) {
    throw InvalidArgument("encode: vector dim " + std::to_string(vec.size()) +
                          " does not match codebook dim " + std::to_string(cb.dim()));
  }
  PqCode code(cb.subspace_count());
  for (std::size_t m = 0; m < cb.subspace_count(); ++m) {
    const float* v = vec.data() + m * cb.sub_dim();
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_k = 0;
    for (std::size_t k = 0; k < cb.codeword_count(); ++k) {
      const double d = sq_dist(v, cb.codeword(m, k), cb.sub_dim());
      if (d < best) {
        best = d;
        best_k = static_cast<std::uint32_t>(k);
      }
    }
    code[m] = best_k;
  }
  return code;
}

std::vector<float> decode(const Codebook& cb, const PqCode& code) {
  if (code.size() != cb.subspace_count()) {
    throw InvalidArgument("decode: code length does not match subspace count");
  }
  std::vector<float> out(cb.dim());
  for (std::size_t m = 0; m < cb.subspace_count(); ++m) {
    if (code[m] >= cb.codeword_count()) {
      throw InvalidArgument("decode: codeword index out of range");
    }
    const float* c = cb.codeword(m, code[m]);
    std::copy(c, c + cb.sub_dim(), out.begin() + m * cb.sub_dim());
  }
  return out;
}

QuantStats quantization_error(const Codebook& cb, std::span<const float> data) {
  if (data.empty()) throw InvalidArgument("quantization_error: empty data");
  if (data.size() % cb.dim() != 0) {
    throw InvalidArgument("quantization_error: data size is not a multiple of codebook dim");
  }
  const std::size_t n = data.size() / cb.dim();

  QuantStats stats;
  stats.per_subspace_error.assign(cb.subspace_count(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = data.data() + i * cb.dim();
    for (std::size_t m = 0; m < cb.subspace_count(); ++m) {
      const float* v = row + m * cb.sub_dim();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < cb.codeword_count(); ++k) {
        best = std::min(best, sq_dist(v, cb.codeword(m, k), cb.sub_dim()));
      }
      stats.per_subspace_error[m] += best;
    }
  }
  for (double& e : stats.per_subspace_error) {
    e /= static_cast<double>(n);
    stats.mean_error += e;
  }
  return stats;
}

DistanceTable build_distance_table(const Codebook& cb, std::span<const float> query) {
  if (query.size() != cb.dim()) {
    throw InvalidArgument("build_distance_table: query dim does not match codebook dim");
  }
  DistanceTable table;
  table.subspace_count = cb.subspace_count();
  table.codeword_count = cb.codeword_count();
  table.entries.resize(cb.subspace_count() * cb.codeword_count());
  for (std::size_t m = 0; m < cb.subspace_count(); ++m) {
    const float* q = query.data() + m * cb.sub_dim();
    for (std::size_t k = 0; k < cb.codeword_count(); ++k) {
      table.entries[m * cb.codeword_count() + k] =
          static_cast<float>(sq_dist(q, cb.codeword(m, k), cb.sub_dim()));
    }
  }
  return table;
}

double adc_distance(const DistanceTable& table, const PqCode& code) {
  if (code.size() != table.subspace_count) {
    throw InvalidArgument("adc_distance: code length does not match table");
  }
  double acc = 0.0;
  for (std::size_t m = 0; m < table.subspace_count; ++m) {
    if (code[m] >= table.codeword_count) {
      throw InvalidArgument("adc_distance: codeword index out of range");
    }
    acc += static_cast<double>(table.entries[m * table.codeword_count + code[m]]);
  }
  return acc;
}

void save_codebook(const Codebook& cb, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open for writing: " + path);
  io::write_u32(os, kCodebookMagic);
  io::write_u32(os, kCodebookFormatVersion);
  io::write_u32(os, static_cast<std::uint32_t>(cb.subspace_count()));
  io::write_u32(os, static_cast<std::uint32_t>(cb.codeword_count()));
  io::write_u32(os, static_cast<std::uint32_t>(cb.sub_dim()));
  io::write_f32_block(os, cb.data());
  if (!os) throw ParseError("write failed: " + path);
}

Codebook load_codebook(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open: " + path);
  std::uint32_t magic = 0, format = 0, m = 0, k = 0, sub_dim = 0;
  if (!io::read_u32(is, magic) || magic != kCodebookMagic) {
    throw ParseError("not a codebook file (bad magic): " + path, 0);
  }
  if (!io::read_u32(is, format) || format != kCodebookFormatVersion) {
    throw ParseError("unsupported codebook format version in " + path, 4);
  }
  if (!io::read_u32(is, m) || !io::read_u32(is, k) || !io::read_u32(is, sub_dim)) {
    throw ParseError("truncated codebook header: " + path, 8);
  }
  std::vector<float> data(static_cast<std::size_t>(m) * k * sub_dim);
  if (!io::read_f32_block(is, data)) {
    throw ParseError("truncated codebook payload: " + path, 20);
  }
  return Codebook(m, k, sub_dim, std::move(data), 0);
}

std::string codebook_to_json(const Codebook& cb) {
  nlohmann::json j;
  j["subspace_count"] = cb.subspace_count();
  j["codeword_count"] = cb.codeword_count();
  j["sub_dim"] = cb.sub_dim();
  j["version"] = cb.version();
  auto books = nlohmann::json::array();
  for (std::size_t m = 0; m < cb.subspace_count(); ++m) {
    auto book = nlohmann::json::array();
    for (std::size_t k = 0; k < cb.codeword_count(); ++k) {
      const float* c = cb.codeword(m, k);
      book.push_back(std::vector<float>(c, c + cb.sub_dim()));
    }
    books.push_back(std::move(book));
  }
  j["codewords"] = std::move(books);
  return j.dump(2);
}

}  // namespace snapq
