#include "slstm/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace slstm {

namespace {

std::string dims(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_len(const Vec& a, const Vec& b, const char* op) {
  if (a.len() != b.len()) {
    throw ShapeError(std::string(op) + ": length mismatch " + std::to_string(a.len()) +
                     " vs " + std::to_string(b.len()));
  }
}

}  // namespace

Vec matvec(const Mat& m, const Vec& v) {
  if (m.cols() != v.len()) {
    throw ShapeError("matvec: " + dims(m) + " * vec[" + std::to_string(v.len()) + "]");
  }
  Vec out(m.rows());
  for (int r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    auto row = m.row(r);
    for (int c = 0; c < m.cols(); ++c) acc += row[static_cast<size_t>(c)] * v[c];
    out[r] = acc;
  }
  return out;
}

Vec matvec_transpose(const Mat& m, const Vec& v) {
  Vec out(m.cols());
  matvec_transpose_add(m, v, out);
  return out;
}

void matvec_transpose_add(const Mat& m, const Vec& v, Vec& out) {
  if (m.rows() != v.len() || m.cols() != out.len()) {
    throw ShapeError("matvec_transpose: " + dims(m) + "^T * vec[" + std::to_string(v.len()) +
                     "] -> vec[" + std::to_string(out.len()) + "]");
  }
  for (int r = 0; r < m.rows(); ++r) {
    const double s = v[r];
    if (s == 0.0) continue;
    auto row = m.row(r);
    for (int c = 0; c < m.cols(); ++c) out[c] += row[static_cast<size_t>(c)] * s;
  }
}

void outer_add(Mat& m, const Vec& u, const Vec& v, double scale) {
  if (m.rows() != u.len() || m.cols() != v.len()) {
    throw ShapeError("outer_add: " + dims(m) + " += vec[" + std::to_string(u.len()) +
                     "] * vec[" + std::to_string(v.len()) + "]^T");
  }
  for (int r = 0; r < m.rows(); ++r) {
    const double s = scale * u[r];
    if (s == 0.0) continue;
    auto row = m.row(r);
    for (int c = 0; c < m.cols(); ++c) row[static_cast<size_t>(c)] += s * v[c];
  }
}

Vec hadamard(const Vec& a, const Vec& b) {
  require_same_len(a, b, "hadamard");
  Vec out(a.len());
  for (int i = 0; i < a.len(); ++i) out[i] = a[i] * b[i];
  return out;
}

Vec add(const Vec& a, const Vec& b) {
  require_same_len(a, b, "add");
  Vec out(a.len());
  for (int i = 0; i < a.len(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec sub(const Vec& a, const Vec& b) {
  require_same_len(a, b, "sub");
  Vec out(a.len());
  for (int i = 0; i < a.len(); ++i) out[i] = a[i] - b[i];
  return out;
}

void add_inplace(Vec& a, const Vec& b) {
  require_same_len(a, b, "add_inplace");
  for (int i = 0; i < a.len(); ++i) a[i] += b[i];
}

void axpy(Vec& y, double s, const Vec& x) {
  require_same_len(y, x, "axpy");
  for (int i = 0; i < y.len(); ++i) y[i] += s * x[i];
}

Vec scaled(const Vec& a, double s) {
  Vec out(a.len());
  for (int i = 0; i < a.len(); ++i) out[i] = a[i] * s;
  return out;
}

double dot(const Vec& a, const Vec& b) {
  require_same_len(a, b, "dot");
  double acc = 0.0;
  for (int i = 0; i < a.len(); ++i) acc += a[i] * b[i];
  return acc;
}

namespace {
// Open-interval clamps: exp underflow at extreme inputs would otherwise yield
// exactly 0 or 1 and break the strict (0,1) / (-1,1) range contracts.
constexpr double kOneMinusUlp = 1.0 - 2.220446049250313e-16 / 2.0;  // nextafter(1,0)
const double kTiny = std::numeric_limits<double>::denorm_min();

double sigmoid_scalar(double z) {
  double a;
  if (z >= 0.0) {
    a = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    a = e / (1.0 + e);
  }
  if (a < kTiny) a = kTiny;
  if (a > kOneMinusUlp) a = kOneMinusUlp;
  return a;
}

double tanh_scalar(double z) {
  double a = std::tanh(z);
  if (a >= 1.0) a = kOneMinusUlp;
  if (a <= -1.0) a = -kOneMinusUlp;
  return a;
}
}  // namespace

Vec sigmoid(const Vec& v) {
  Vec out(v.len());
  for (int i = 0; i < v.len(); ++i) out[i] = sigmoid_scalar(v[i]);
  return out;
}

Vec sigmoid_deriv_from_act(const Vec& a) {
  Vec out(a.len());
  for (int i = 0; i < a.len(); ++i) out[i] = a[i] * (1.0 - a[i]);
  return out;
}

Vec tanh_vec(const Vec& v) {
  Vec out(v.len());
  for (int i = 0; i < v.len(); ++i) out[i] = tanh_scalar(v[i]);
  return out;
}

Vec tanh_deriv_from_act(const Vec& a) {
  Vec out(a.len());
  for (int i = 0; i < a.len(); ++i) out[i] = 1.0 - a[i] * a[i];
  return out;
}

bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// xoshiro256** seeded through splitmix64.
namespace {
uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Rng::Rng(uint64_t seed) {
  uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

uint64_t Rng::next_u64() {
  const uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

int Rng::below(int n) {
  assert(n > 0);
  return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
}

}  // namespace slstm
