#pragma once

// Little-endian binary stream helpers for the parameter dump and checkpoint
// formats. Reads throw IoError on truncation.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "slstm/errors.hpp"

namespace slstm::serial {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; add byte swapping for this platform");

inline void write_bytes(std::ostream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out) throw IoError("write failed");
}

inline void read_bytes(std::istream& in, void* p, size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) throw IoError("truncated file");
}

inline void write_u8(std::ostream& out, uint8_t v) { write_bytes(out, &v, 1); }
inline void write_u32(std::ostream& out, uint32_t v) { write_bytes(out, &v, 4); }
inline void write_u64(std::ostream& out, uint64_t v) { write_bytes(out, &v, 8); }
inline void write_f64(std::ostream& out, double v) { write_bytes(out, &v, 8); }

inline uint8_t read_u8(std::istream& in) {
  uint8_t v;
  read_bytes(in, &v, 1);
  return v;
}
inline uint32_t read_u32(std::istream& in) {
  uint32_t v;
  read_bytes(in, &v, 4);
  return v;
}
inline uint64_t read_u64(std::istream& in) {
  uint64_t v;
  read_bytes(in, &v, 8);
  return v;
}
inline double read_f64(std::istream& in) {
  double v;
  read_bytes(in, &v, 8);
  return v;
}

inline void write_f64_span(std::ostream& out, std::span<const double> xs) {
  write_bytes(out, xs.data(), xs.size() * sizeof(double));
}

inline void read_f64_span(std::istream& in, std::span<double> xs) {
  read_bytes(in, xs.data(), xs.size() * sizeof(double));
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  write_bytes(out, s.data(), s.size());
}

inline std::string read_string(std::istream& in, uint32_t max_len = 1u << 24) {
  const uint32_t n = read_u32(in);
  if (n > max_len) throw IoError("corrupt string length " + std::to_string(n));
  std::string s(n, '\0');
  if (n > 0) read_bytes(in, s.data(), n);
  return s;
}

inline void write_magic(std::ostream& out, const char (&magic)[9]) {
  write_bytes(out, magic, 8);
}

inline void expect_magic(std::istream& in, const char (&magic)[9], const char* what) {
  char buf[8];
  read_bytes(in, buf, 8);
  if (std::memcmp(buf, magic, 8) != 0) {
    throw IoError(std::string("bad magic: not a ") + what + " file");
  }
}

}  // namespace slstm::serial
