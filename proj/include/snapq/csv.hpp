// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#pragma once

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "snapq/common.hpp"

namespace snapq {

// Shortest round-trip decimal form; keeps metric files byte-stable across
// runs and exactly re-parseable.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Minimal CSV emitter: header row then value rows, no quoting (writers in
// this project never emit commas inside fields).
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : os_(path) {
    if (!os_) throw ParseError("cannot open for writing: " + path);
  }

  void header(std::initializer_list<std::string> names) { write_row_strings(names.begin(), names.end()); }

  CsvWriter& field(const std::string& s) {
    if (field_count_++ > 0) os_ << ',';
    os_ << s;
    return *this;
  }
  CsvWriter& field(double v) { return field(format_double(v)); }
  CsvWriter& field(std::size_t v) { return field(std::to_string(v)); }
  CsvWriter& field(long long v) { return field(std::to_string(v)); }
  CsvWriter& field(int v) { return field(std::to_string(v)); }
  CsvWriter& field(bool v) { return field(std::string(v ? "1" : "0")); }

  void end_row() {
    os_ << '\n';
    field_count_ = 0;
  }

  void flush() { os_.flush(); }

 private:
  template <typename It>
  void write_row_strings(It begin, It end) {
    bool first = true;
    for (It it = begin; it != end; ++it) {
      if (!first) os_ << ',';
      os_ << *it;
      first = false;
    }
    os_ << '\n';
  }

  std::ofstream os_;
  std::size_t field_count_ = 0;
};

// Reads a whole CSV back as strings, header included, for round-trip checks
// and small tooling.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace snapq
