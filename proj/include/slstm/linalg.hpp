#pragma once

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "slstm/errors.hpp"

namespace slstm {

// Dense column vector, 64-bit floats throughout.
class Vec {
 public:
  Vec() = default;
  explicit Vec(int len, double fill = 0.0) : d_(static_cast<size_t>(len), fill) {}
  Vec(std::initializer_list<double> xs) : d_(xs) {}

  int len() const { return static_cast<int>(d_.size()); }
  double operator[](int i) const {
    assert(i >= 0 && i < len());
    return d_[static_cast<size_t>(i)];
  }
  double& operator[](int i) {
    assert(i >= 0 && i < len());
    return d_[static_cast<size_t>(i)];
  }
  std::span<const double> data() const { return d_; }
  std::span<double> data() { return d_; }
  std::vector<double>& raw() { return d_; }
  const std::vector<double>& raw() const { return d_; }

  bool operator==(const Vec&) const = default;

 private:
  std::vector<double> d_;
};

// Dense row-major matrix.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), d_(static_cast<size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return d_[static_cast<size_t>(r) * cols_ + c];
  }
  double& operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return d_[static_cast<size_t>(r) * cols_ + c];
  }
  std::span<const double> row(int r) const {
    return {d_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }
  std::span<double> row(int r) {
    return {d_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }
  std::vector<double>& raw() { return d_; }
  const std::vector<double>& raw() const { return d_; }

  bool operator==(const Mat&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> d_;
};

// y = m * v
Vec matvec(const Mat& m, const Vec& v);
// y = m^T * v
Vec matvec_transpose(const Mat& m, const Vec& v);
// out += m^T * v
void matvec_transpose_add(const Mat& m, const Vec& v, Vec& out);
// m += scale * u * v^T
void outer_add(Mat& m, const Vec& u, const Vec& v, double scale = 1.0);

Vec hadamard(const Vec& a, const Vec& b);
Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
void add_inplace(Vec& a, const Vec& b);
// y += s * x
void axpy(Vec& y, double s, const Vec& x);
Vec scaled(const Vec& a, double s);
double dot(const Vec& a, const Vec& b);

// Element-wise logistic, clamped to the open interval (0, 1). Large negative
// inputs must not overflow exp, so the implementation branches on sign.
Vec sigmoid(const Vec& v);
// sigma'(x) computed from the activation a = sigma(x): a * (1 - a).
Vec sigmoid_deriv_from_act(const Vec& a);
// Element-wise tanh, clamped to the open interval (-1, 1).
Vec tanh_vec(const Vec& v);
// tanh'(x) from the activation a = tanh(x): 1 - a^2.
Vec tanh_deriv_from_act(const Vec& a);

bool all_finite(std::span<const double> xs);

// Deterministic PRNG. Doubles are derived from the raw 64-bit stream rather
// than std::uniform_real_distribution so that identical seeds give identical
// parameter bytes on any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed);
  uint64_t next_u64();
  // uniform in [0, 1)
  double next_double();
  // uniform in [lo, hi)
  double uniform(double lo, double hi);
  // uniform integer in [0, n)
  int below(int n);

 private:
  uint64_t s_[4];
};

}  // namespace slstm
