// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snapq {

// Invalid argument / contract violation (dimension mismatch, bad config, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// I/O failure or malformed file. `offset` is the byte position of the first
// inconsistent record when known, -1 otherwise.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, long long offset = -1)
      : std::runtime_error(offset >= 0 ? msg + " (byte offset " + std::to_string(offset) + ")"
                                       : msg),
        offset_(offset) {}
  long long offset() const { return offset_; }

 private:
  long long offset_;
};

// Numerical failure (non-finite values where finite ones are required).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace snapq
