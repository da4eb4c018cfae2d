// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace snapq {

// Per-subspace codeword indices encoding one vector. Length equals the
// codebook's subspace count, every index < codeword count.
using PqCode = std::vector<std::uint32_t>;

// Product-quantization codebook: one sub-codebook of `codeword_count`
// centroids per subspace, each centroid of length `sub_dim`. Immutable after
// construction; updates produce a new snapshot with a larger version, so
// query-side readers can share one snapshot freely across threads.
class Codebook {
 public:
  Codebook() = default;
  // `data` is flat, subspace-major: data[(m * K + k) * sub_dim + j].
  // Throws InvalidArgument on size mismatch or non-finite components.
  Codebook(std::size_t subspace_count, std::size_t codeword_count, std::size_t sub_dim,
           std::vector<float> data, std::uint64_t version = 0);

  std::size_t subspace_count() const { return subspace_count_; }  // M
  std::size_t codeword_count() const { return codeword_count_; }  // K
  std::size_t sub_dim() const { return sub_dim_; }
  std::size_t dim() const { return subspace_count_ * sub_dim_; }
  std::uint64_t version() const { return version_; }

  const float* codeword(std::size_t m, std::size_t k) const {
    return data_.data() + (m * codeword_count_ + k) * sub_dim_;
  }
  const std::vector<float>& data() const { return data_; }

 private:
  std::size_t subspace_count_ = 0;
  std::size_t codeword_count_ = 0;
  std::size_t sub_dim_ = 0;
  std::uint64_t version_ = 0;
  std::vector<float> data_;
};

// Squared distances from one query's sub-vectors to every codeword,
// entries[m * K + k] = ||q_m - c_m(k)||^2.
struct DistanceTable {
  std::size_t subspace_count = 0;
  std::size_t codeword_count = 0;
  std::vector<float> entries;

  float at(std::size_t m, std::size_t k) const { return entries[m * codeword_count + k]; }
};

// Mean squared quantization error over a dataset, total and per subspace.
// mean_error equals the sum of per_subspace_error up to float rounding.
struct QuantStats {
  double mean_error = 0.0;
  std::vector<double> per_subspace_error;
};

struct NeighborCodeword {
  PqCode code;
  double distance_sq = 0.0;
};

// Trains one codebook per subspace with k-means (k-means++ seeding, Lloyd
// iterations, empty clusters refilled with the point farthest from its
// centroid). Deterministic for a given seed; all reductions run in a fixed
// order. If `error_curve` is given it receives the mean quantization error
// after seeding and after each iteration, which is non-increasing.
//
// data is flat row-major, n = data.size() / dim rows. Requires n >= codeword
// count and dim divisible by subspace_count.
Codebook train_codebook(std::span<const float> data, std::size_t dim, std::size_t subspace_count,
                        std::size_t codeword_count, std::size_t iters, std::uint64_t seed,
                        std::vector<double>* error_curve = nullptr);

// Nearest codeword index per subspace, ties broken toward the smaller index.
PqCode encode(const Codebook& cb, std::span<const float> vec);

// Concatenation of the selected codewords.
std::vector<float> decode(const Codebook& cb, const PqCode& code);

// Mean over rows of ||x - decode(encode(x))||^2, accumulated in double.
QuantStats quantization_error(const Codebook& cb, std::span<const float> data);

DistanceTable build_distance_table(const Codebook& cb, std::span<const float> query);

// Sum of M table lookups. Equals ||q - decode(code)||^2 up to float rounding
// of the table entries.
double adc_distance(const DistanceTable& table, const PqCode& code);

// The `count` full codewords (one codeword per subspace) nearest to `vec` in
// squared euclidean distance, ascending, ties broken by lexicographic code
// order. Best-first traversal over the per-subspace sorted distance lists;
// never materializes the K^M candidate set. Requires 1 <= count <= K^M.
std::vector<NeighborCodeword> enumerate_neighbor_codewords(const Codebook& cb,
                                                           std::span<const float> vec,
                                                           std::size_t count);

// Binary container, little-endian: magic "SQCB", format version u32,
// M u32, K u32, sub_dim u32, then M*K*sub_dim f32 subspace-major.
void save_codebook(const Codebook& cb, const std::string& path);
Codebook load_codebook(const std::string& path);

// Human-readable JSON dump for debugging.
std::string codebook_to_json(const Codebook& cb);

}  // namespace snapq
