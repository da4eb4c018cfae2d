// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>

#include "snapq/common.hpp"

// Little-endian primitives for the binary containers. The codecs below are
// byte-explicit so the formats stay portable to big-endian hosts.

namespace snapq::io {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_i32(std::ostream& os, std::int32_t v) {
  write_u32(os, static_cast<std::uint32_t>(v));
}

inline void write_f32(std::ostream& os, float f) {
  std::uint32_t v = 0;
  std::memcpy(&v, &f, 4);
  write_u32(os, v);
}

inline void write_u8(std::ostream& os, std::uint8_t v) {
  os.put(static_cast<char>(v));
}

inline bool read_u32(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

inline bool read_i32(std::istream& is, std::int32_t& v) {
  std::uint32_t u = 0;
  if (!read_u32(is, u)) return false;
  v = static_cast<std::int32_t>(u);
  return true;
}

inline bool read_f32(std::istream& is, float& f) {
  std::uint32_t u = 0;
  if (!read_u32(is, u)) return false;
  std::memcpy(&f, &u, 4);
  return true;
}

inline bool read_u8(std::istream& is, std::uint8_t& v) {
  int c = is.get();
  if (c == std::char_traits<char>::eof()) return false;
  v = static_cast<std::uint8_t>(c);
  return true;
}

// Bulk f32 helpers; fast path on little-endian hosts.
inline void write_f32_block(std::ostream& os, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float f : values) write_f32(os, f);
  }
}

inline bool read_f32_block(std::istream& is, std::span<float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    return static_cast<bool>(is.read(reinterpret_cast<char*>(values.data()),
                                     static_cast<std::streamsize>(values.size() * sizeof(float))));
  } else {
    for (float& f : values) {
      if (!read_f32(is, f)) return false;
    }
    return true;
  }
}

}  // namespace snapq::io
