#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slstm {

// Dimension mismatch between tensors, or between a tensor and a named parameter.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed s-expression input. byte_offset points at the offending character
// within the parsed string; line (when set by the corpus loader) is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset, long line = -1)
      : std::runtime_error(what), byte_offset(byte_offset), line(line) {}
  std::size_t byte_offset;
  long line;
};

// File format or filesystem failure (checkpoints, parameter dumps, reports).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf detected during training; carries the epoch/batch it surfaced in.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, int epoch, int batch)
      : std::runtime_error(what), epoch(epoch), batch(batch) {}
  int epoch;
  int batch;
};

}  // namespace slstm
