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

enum class SplitTag : std::uint8_t { database = 0, train = 1, query = 2 };

// Row-major float vectors with one label per row and one split tag per row.
// Rows carry the database tag until split_protocol assigns the others.
struct LabeledDataset {
  std::size_t dim = 0;
  std::vector<float> vectors;  // n x dim
  std::vector<int> labels;
  std::vector<SplitTag> tags;

  std::size_t size() const { return dim == 0 ? 0 : vectors.size() / dim; }
  const float* row(std::size_t i) const { return vectors.data() + i * dim; }

  std::vector<std::size_t> rows_with_tag(SplitTag tag) const;
  // Retrieval database rows: everything not tagged query, or only rows
  // tagged database when training rows are excluded.
  std::vector<std::size_t> database_rows(bool include_train) const;
};

// Isotropic gaussian clusters around random centers; class-balanced and
// deterministic per seed.
struct SyntheticSpec {
  std::size_t num_classes = 0;
  std::size_t per_class = 0;
  std::size_t dim = 0;
  double cluster_std = 1.0;
  std::uint64_t seed = 0;
};

LabeledDataset make_synthetic(const SyntheticSpec& spec);

// Per-class split: queries_per_class query rows and train_per_class training
// rows sampled without replacement (training clamped to what remains), every
// other row tagged database. Deterministic per seed. Throws when a class
// cannot spare queries_per_class rows while keeping one.
void split_protocol(LabeledDataset& ds, std::size_t queries_per_class,
                    std::size_t train_per_class, std::uint64_t seed);

// fvecs / ivecs: per record a little-endian i32 dimension header followed by
// that many f32 / i32 payload values. All records must agree on the
// dimension; an empty file is an empty dataset.
struct FloatMatrix {
  std::size_t dim = 0;
  std::vector<float> values;
  std::size_t rows() const { return dim == 0 ? 0 : values.size() / dim; }
};
struct IntMatrix {
  std::size_t dim = 0;
  std::vector<std::int32_t> values;
  std::size_t rows() const { return dim == 0 ? 0 : values.size() / dim; }
};

FloatMatrix load_fvecs(const std::string& path);
void save_fvecs(const std::string& path, std::span<const float> values, std::size_t dim);
IntMatrix load_ivecs(const std::string& path);
void save_ivecs(const std::string& path, std::span<const std::int32_t> values, std::size_t dim);

// CSV with a header row (x0,x1,...); labels as a single `label` column.
FloatMatrix load_csv_matrix(const std::string& path);
void save_csv_matrix(const std::string& path, std::span<const float> values, std::size_t dim);
std::vector<int> load_csv_labels(const std::string& path);
void save_csv_labels(const std::string& path, std::span<const int> labels);

// Labels from either container, by file extension (.ivecs or .csv).
std::vector<int> load_labels(const std::string& path);

}  // namespace snapq
