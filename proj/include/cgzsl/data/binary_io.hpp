#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>

#include "cgzsl/errors.hpp"

namespace cgzsl::data {

// Little-endian primitives, independent of host byte order.

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b, 4);
}

inline void write_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  out.write(b, 8);
}

inline void write_f64s(std::ostream& out, std::span<const double> values) {
  for (double v : values) write_f64(out, v);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated payload (u32)");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("truncated payload (f64)");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

inline void read_f64s(std::istream& in, std::span<double> out) {
  for (double& v : out) v = read_f64(in);
}

}  // namespace cgzsl::data
