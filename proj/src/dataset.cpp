// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#include "snapq/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "snapq/binary_io.hpp"
#include "snapq/common.hpp"
#include "snapq/rng.hpp"

namespace snapq {

std::vector<std::size_t> LabeledDataset::rows_with_tag(SplitTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == tag) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::database_rows(bool include_train) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == SplitTag::database || (include_train && tags[i] == SplitTag::train)) {
      out.push_back(i);
    }
  }
  return out;
}

LabeledDataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes == 0 || spec.per_class == 0 || spec.dim == 0) {
    throw InvalidArgument("make_synthetic: num_classes, per_class and dim must be positive");
  }
  if (spec.cluster_std < 0.0) throw InvalidArgument("make_synthetic: negative cluster_std");

  Rng rng(mix_seed(spec.seed, 0x73796e));

  // Standard-normal centers; re-draw on an exact duplicate.
  std::vector<std::vector<double>> centers;
  centers.reserve(spec.num_classes);
  while (centers.size() < spec.num_classes) {
    std::vector<double> c(spec.dim);
    for (double& v : c) v = rng.normal();
    bool duplicate = false;
    for (const auto& prev : centers) duplicate = duplicate || prev == c;
    if (!duplicate) centers.push_back(std::move(c));
  }

  LabeledDataset ds;
  ds.dim = spec.dim;
  ds.vectors.reserve(spec.num_classes * spec.per_class * spec.dim);
  ds.labels.reserve(spec.num_classes * spec.per_class);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        ds.vectors.push_back(
            static_cast<float>(centers[c][j] + spec.cluster_std * rng.normal()));
      }
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  ds.tags.assign(ds.labels.size(), SplitTag::database);
  return ds;
}

void split_protocol(LabeledDataset& ds, std::size_t queries_per_class,
                    std::size_t train_per_class, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < ds.size(); ++i) by_label[ds.labels[i]].push_back(i);

  for (const auto& [label, members] : by_label) {
    if (members.size() < queries_per_class + 1) {
      throw InvalidArgument("split_protocol: class " + std::to_string(label) + " has only " +
                            std::to_string(members.size()) + " rows, needs " +
                            std::to_string(queries_per_class + 1));
    }
  }

  ds.tags.assign(ds.size(), SplitTag::database);
  Rng rng(mix_seed(seed, 0x73706c69));
  for (auto& [label, members] : by_label) {
    rng.shuffle(members);
    std::size_t pos = 0;
    for (std::size_t q = 0; q < queries_per_class; ++q) ds.tags[members[pos++]] = SplitTag::query;
    const std::size_t train_n = std::min(train_per_class, members.size() - pos);
    for (std::size_t t = 0; t < train_n; ++t) ds.tags[members[pos++]] = SplitTag::train;
  }
}

FloatMatrix load_fvecs(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open: " + path);
  FloatMatrix m;
  long long offset = 0;
  std::int32_t dim = 0;
  while (io::read_i32(is, dim)) {
    if (dim <= 0) throw ParseError("fvecs: non-positive record dim in " + path, offset);
    if (m.dim == 0) {
      m.dim = static_cast<std::size_t>(dim);
    } else if (m.dim != static_cast<std::size_t>(dim)) {
      throw ParseError("fvecs: record dim " + std::to_string(dim) + " differs from " +
                           std::to_string(m.dim) + " in " + path,
                       offset);
    }
    const std::size_t start = m.values.size();
    m.values.resize(start + m.dim);
    if (!io::read_f32_block(is, {m.values.data() + start, m.dim})) {
      throw ParseError("fvecs: truncated record in " + path, offset);
    }
    offset += 4 + 4 * static_cast<long long>(m.dim);
  }
  return m;
}

void save_fvecs(const std::string& path, std::span<const float> values, std::size_t dim) {
  if (dim == 0 || values.size() % dim != 0) {
    throw InvalidArgument("save_fvecs: value count is not a multiple of dim");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < values.size(); i += dim) {
    io::write_i32(os, static_cast<std::int32_t>(dim));
    io::write_f32_block(os, values.subspan(i, dim));
  }
  if (!os) throw ParseError("write failed: " + path);
}

IntMatrix load_ivecs(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open: " + path);
  IntMatrix m;
  long long offset = 0;
  std::int32_t dim = 0;
  while (io::read_i32(is, dim)) {
    if (dim <= 0) throw ParseError("ivecs: non-positive record dim in " + path, offset);
    if (m.dim == 0) {
      m.dim = static_cast<std::size_t>(dim);
    } else if (m.dim != static_cast<std::size_t>(dim)) {
      throw ParseError("ivecs: record dim " + std::to_string(dim) + " differs from " +
                           std::to_string(m.dim) + " in " + path,
                       offset);
    }
    for (std::size_t j = 0; j < m.dim; ++j) {
      std::int32_t v = 0;
      if (!io::read_i32(is, v)) throw ParseError("ivecs: truncated record in " + path, offset);
      m.values.push_back(v);
    }
    offset += 4 + 4 * static_cast<long long>(m.dim);
  }
  return m;
}

void save_ivecs(const std::string& path, std::span<const std::int32_t> values, std::size_t dim) {
  if (dim == 0 || values.size() % dim != 0) {
    throw InvalidArgument("save_ivecs: value count is not a multiple of dim");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < values.size(); i += dim) {
    io::write_i32(os, static_cast<std::int32_t>(dim));
    for (std::size_t j = 0; j < dim; ++j) io::write_i32(os, values[i + j]);
  }
  if (!os) throw ParseError("write failed: " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

FloatMatrix load_csv_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open: " + path);
  FloatMatrix m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {  // header
      m.dim = split_csv_line(line).size();
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != m.dim) {
      throw ParseError("csv: line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(m.dim) + " in " + path);
    }
    for (const std::string& f : fields) {
      try {
        m.values.push_back(std::stof(f));
      } catch (const std::exception&) {
        throw ParseError("csv: bad float '" + f + "' at line " + std::to_string(line_no) +
                         " in " + path);
      }
    }
  }
  return m;
}

void save_csv_matrix(const std::string& path, std::span<const float> values, std::size_t dim) {
  if (dim == 0 || values.size() % dim != 0) {
    throw InvalidArgument("save_csv_matrix: value count is not a multiple of dim");
  }
  std::ofstream os(path);
  if (!os) throw ParseError("cannot open for writing: " + path);
  for (std::size_t j = 0; j < dim; ++j) os << (j ? ",x" : "x") << j;
  os << "\n";
  char buf[48];
  for (std::size_t i = 0; i < values.size(); i += dim) {
    for (std::size_t j = 0; j < dim; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(values[i + j]));
      os << (j ? "," : "") << buf;
    }
    os << "\n";
  }
  if (!os) throw ParseError("write failed: " + path);
}

std::vector<int> load_csv_labels(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open: " + path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line_no == 1) continue;  // header
    try {
      labels.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw ParseError("csv: bad label '" + line + "' at line " + std::to_string(line_no) +
                       " in " + path);
    }
  }
  return labels;
}

void save_csv_labels(const std::string& path, std::span<const int> labels) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot open for writing: " + path);
  os << "label\n";
  for (int l : labels) os << l << "\n";
  if (!os) throw ParseError("write failed: " + path);
}

std::vector<int> load_labels(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    return load_csv_labels(path);
  }
  const IntMatrix m = load_ivecs(path);
  if (m.rows() > 0 && m.dim != 1) {
    throw ParseError("labels ivecs must have one value per record: " + path);
  }
  std::vector<int> labels;
  labels.reserve(m.values.size());
  for (std::int32_t v : m.values) labels.push_back(static_cast<int>(v));
  return labels;
}

}  // namespace snapq
