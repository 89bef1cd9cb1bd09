#include "slstm/params.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "serial.hpp"

namespace slstm {

Mat& TensorMap::add_mat(std::string name, int rows, int cols) {
  index_[name] = entries_.size();
  entries_.push_back({std::move(name), Mat(rows, cols)});
  return std::get<Mat>(entries_.back().value);
}

Vec& TensorMap::add_vec(std::string name, int len) {
  index_[name] = entries_.size();
  entries_.push_back({std::move(name), Vec(len)});
  return std::get<Vec>(entries_.back().value);
}

bool TensorMap::has(std::string_view name) const {
  return index_.find(std::string(name)) != index_.end();
}

size_t TensorMap::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw ShapeError("unknown parameter name: " + std::string(name));
  }
  return it->second;
}

Mat& TensorMap::mat(std::string_view name) {
  auto& e = entries_[index_of(name)];
  if (!std::holds_alternative<Mat>(e.value)) {
    throw ShapeError("parameter " + std::string(name) + " is a vector, not a matrix");
  }
  return std::get<Mat>(e.value);
}

const Mat& TensorMap::mat(std::string_view name) const {
  return const_cast<TensorMap*>(this)->mat(name);
}

Vec& TensorMap::vec(std::string_view name) {
  auto& e = entries_[index_of(name)];
  if (!std::holds_alternative<Vec>(e.value)) {
    throw ShapeError("parameter " + std::string(name) + " is a matrix, not a vector");
  }
  return std::get<Vec>(e.value);
}

const Vec& TensorMap::vec(std::string_view name) const {
  return const_cast<TensorMap*>(this)->vec(name);
}

std::span<double> TensorMap::flat(size_t i) {
  auto& e = entries_[i];
  if (auto* m = std::get_if<Mat>(&e.value)) return m->raw();
  return std::get<Vec>(e.value).raw();
}

std::span<const double> TensorMap::flat(size_t i) const {
  return const_cast<TensorMap*>(this)->flat(i);
}

void TensorMap::zero() {
  for (size_t i = 0; i < entries_.size(); ++i) {
    for (double& x : flat(i)) x = 0.0;
  }
}

void TensorMap::scale(double s) {
  for (size_t i = 0; i < entries_.size(); ++i) {
    for (double& x : flat(i)) x *= s;
  }
}

void TensorMap::add_scaled(const TensorMap& other, double s) {
  if (other.entries_.size() != entries_.size()) {
    throw ShapeError("add_scaled: entry count mismatch");
  }
  for (size_t i = 0; i < entries_.size(); ++i) {
    auto dst = flat(i);
    auto src = other.flat(i);
    if (dst.size() != src.size() || entries_[i].name != other.entries_[i].name) {
      throw ShapeError("add_scaled: mismatched entry " + entries_[i].name);
    }
    for (size_t k = 0; k < dst.size(); ++k) dst[k] += s * src[k];
  }
}

double TensorMap::squared_norm() const {
  double acc = 0.0;
  for (size_t i = 0; i < entries_.size(); ++i) {
    for (double x : flat(i)) acc += x * x;
  }
  return acc;
}

bool TensorMap::finite() const {
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (!all_finite(flat(i))) return false;
  }
  return true;
}

TensorMap TensorMap::zeros_like(const TensorMap& other) {
  TensorMap tm;
  for (const auto& e : other.entries_) {
    if (const auto* m = std::get_if<Mat>(&e.value)) {
      tm.add_mat(e.name, m->rows(), m->cols());
    } else {
      tm.add_vec(e.name, std::get<Vec>(e.value).len());
    }
  }
  return tm;
}

bool TensorMap::operator==(const TensorMap& other) const {
  return entries_.size() == other.entries_.size() &&
         [&] {
           for (size_t i = 0; i < entries_.size(); ++i) {
             if (entries_[i].name != other.entries_[i].name ||
                 entries_[i].value != other.entries_[i].value) {
               return false;
             }
           }
           return true;
         }();
}

namespace {

struct BlockEntrySpec {
  const char* name;
  bool is_bias;
};

// Eq-order listing of the composition block's parameters.
constexpr BlockEntrySpec kBlockEntries[] = {
    {"W_hi_L", false},   {"W_hi_R", false},   {"W_ci_L", false},   {"W_ci_R", false},
    {"b_i", true},       {"W_hf_l_L", false}, {"W_hf_l_R", false}, {"W_cf_l_L", false},
    {"W_cf_l_R", false}, {"b_fl", true},      {"W_hf_r_L", false}, {"W_hf_r_R", false},
    {"W_cf_r_L", false}, {"W_cf_r_R", false}, {"b_fr", true},      {"W_hx_L", false},
    {"W_hx_R", false},   {"b_x", true},       {"W_ho_L", false},   {"W_ho_R", false},
    {"W_co", false},     {"b_o", true},
};

}  // namespace

void ParamSet::build_entries() {
  const int d = hidden_dim_;
  for (const auto& spec : kBlockEntries) {
    if (spec.is_bias) {
      tensors_.add_vec(spec.name, d);
    } else {
      tensors_.add_mat(spec.name, d, d);
    }
  }
  tensors_.add_mat("embed", vocab_size_, embed_dim_);
  tensors_.add_mat("W_s", num_classes_, d);
  tensors_.add_vec("b_s", num_classes_);
}

void ParamSet::validate() const {
  const int d = hidden_dim_;
  if (d <= 0 || embed_dim_ <= 0 || vocab_size_ <= 0 || num_classes_ <= 0) {
    throw ShapeError("ParamSet: non-positive dimension");
  }
  if (embed_dim_ != d) {
    // Leaf hidden vectors are embedding rows, so the two dims must agree.
    throw ShapeError("ParamSet: embed_dim must equal hidden_dim");
  }
  auto expect_mat = [&](std::string_view name, int rows, int cols) {
    const Mat& m = tensors_.mat(name);
    if (m.rows() != rows || m.cols() != cols) {
      throw ShapeError("ParamSet: " + std::string(name) + " has shape " +
                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                       ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  };
  auto expect_vec = [&](std::string_view name, int len) {
    const Vec& v = tensors_.vec(name);
    if (v.len() != len) {
      throw ShapeError("ParamSet: " + std::string(name) + " has length " +
                       std::to_string(v.len()) + ", expected " + std::to_string(len));
    }
  };
  for (const auto& spec : kBlockEntries) {
    if (spec.is_bias) {
      expect_vec(spec.name, d);
    } else {
      expect_mat(spec.name, d, d);
    }
  }
  expect_mat("embed", vocab_size_, embed_dim_);
  expect_mat("W_s", num_classes_, d);
  expect_vec("b_s", num_classes_);
}

ParamSet make_param_skeleton(int hidden_dim, int embed_dim, int vocab_size, int num_classes) {
  ParamSet p;
  p.hidden_dim_ = hidden_dim;
  p.embed_dim_ = embed_dim;
  p.vocab_size_ = vocab_size;
  p.num_classes_ = num_classes;
  p.build_entries();
  p.validate();
  return p;
}

ParamSet init_params(int hidden_dim, int vocab_size, int num_classes, uint64_t seed) {
  ParamSet p = make_param_skeleton(hidden_dim, hidden_dim, vocab_size, num_classes);
  Rng rng(seed);
  for (auto& e : p.tensors_.entries()) {
    if (auto* m = std::get_if<Mat>(&e.value)) {
      const double r =
          e.name == "embed" ? 0.1 : 1.0 / std::sqrt(static_cast<double>(m->cols()));
      for (double& x : m->raw()) x = rng.uniform(-r, r);
    }
    // biases stay zero
  }
  return p;
}

ParamSet random_params(int hidden_dim, int vocab_size, int num_classes, uint64_t seed,
                       double scale) {
  ParamSet p = make_param_skeleton(hidden_dim, hidden_dim, vocab_size, num_classes);
  Rng rng(seed);
  for (auto& e : p.tensors().entries()) {
    if (auto* m = std::get_if<Mat>(&e.value)) {
      for (double& x : m->raw()) x = rng.uniform(-scale, scale);
    } else {
      for (double& x : std::get<Vec>(e.value).raw()) x = rng.uniform(-scale, scale);
    }
  }
  return p;
}

void axpy_accumulate(GradSet& grads, std::string_view name, const Mat& delta, double scale) {
  Mat& g = grads.mat(name);
  if (g.rows() != delta.rows() || g.cols() != delta.cols()) {
    throw ShapeError("axpy_accumulate: shape mismatch for " + std::string(name));
  }
  auto& dst = g.raw();
  const auto& src = delta.raw();
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

void axpy_accumulate(GradSet& grads, std::string_view name, const Vec& delta, double scale) {
  Vec& g = grads.vec(name);
  if (g.len() != delta.len()) {
    throw ShapeError("axpy_accumulate: shape mismatch for " + std::string(name));
  }
  for (int i = 0; i < g.len(); ++i) g[i] += scale * delta[i];
}

namespace {
constexpr char kParamsMagic[9] = "SLSTMPRM";
constexpr uint32_t kParamsVersion = 1;
constexpr uint8_t kKindMat = 0;
constexpr uint8_t kKindVec = 1;
}  // namespace

void write_tensor_map(std::ostream& out, const TensorMap& tm) {
  serial::write_u32(out, static_cast<uint32_t>(tm.size()));
  for (size_t i = 0; i < tm.size(); ++i) {
    const auto& e = tm.at(i);
    serial::write_string(out, e.name);
    if (const auto* m = std::get_if<Mat>(&e.value)) {
      serial::write_u8(out, kKindMat);
      serial::write_u32(out, static_cast<uint32_t>(m->rows()));
      serial::write_u32(out, static_cast<uint32_t>(m->cols()));
      serial::write_f64_span(out, m->raw());
    } else {
      const Vec& v = std::get<Vec>(e.value);
      serial::write_u8(out, kKindVec);
      serial::write_u32(out, static_cast<uint32_t>(v.len()));
      serial::write_u32(out, 1);
      serial::write_f64_span(out, v.raw());
    }
  }
}

TensorMap read_tensor_map(std::istream& in) {
  TensorMap tm;
  const uint32_t n = serial::read_u32(in);
  if (n > 1u << 16) throw IoError("corrupt entry count");
  for (uint32_t i = 0; i < n; ++i) {
    const std::string name = serial::read_string(in, 1024);
    const uint8_t kind = serial::read_u8(in);
    const uint32_t rows = serial::read_u32(in);
    const uint32_t cols = serial::read_u32(in);
    if (static_cast<uint64_t>(rows) * cols > (1ull << 32)) throw IoError("corrupt shape");
    if (kind == kKindMat) {
      Mat& m = tm.add_mat(name, static_cast<int>(rows), static_cast<int>(cols));
      serial::read_f64_span(in, m.raw());
    } else if (kind == kKindVec) {
      if (cols != 1) throw IoError("corrupt vector shape");
      Vec& v = tm.add_vec(name, static_cast<int>(rows));
      serial::read_f64_span(in, v.raw());
    } else {
      throw IoError("unknown tensor kind " + std::to_string(kind));
    }
  }
  return tm;
}

void save_params(std::ostream& out, const ParamSet& params) {
  serial::write_magic(out, kParamsMagic);
  serial::write_u32(out, kParamsVersion);
  serial::write_u32(out, static_cast<uint32_t>(params.hidden_dim()));
  serial::write_u32(out, static_cast<uint32_t>(params.embed_dim()));
  serial::write_u32(out, static_cast<uint32_t>(params.vocab_size()));
  serial::write_u32(out, static_cast<uint32_t>(params.num_classes()));
  write_tensor_map(out, params.tensors());
}

void load_params(std::istream& in, ParamSet& params) {
  serial::expect_magic(in, kParamsMagic, "parameter dump");
  const uint32_t version = serial::read_u32(in);
  if (version != kParamsVersion) {
    throw IoError("unsupported parameter dump version " + std::to_string(version));
  }
  params.hidden_dim_ = static_cast<int>(serial::read_u32(in));
  params.embed_dim_ = static_cast<int>(serial::read_u32(in));
  params.vocab_size_ = static_cast<int>(serial::read_u32(in));
  params.num_classes_ = static_cast<int>(serial::read_u32(in));
  params.tensors_ = read_tensor_map(in);
  params.validate();
}

void save_params_file(const std::string& path, const ParamSet& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  save_params(out, params);
}

ParamSet load_params_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  ParamSet p;
  load_params(in, p);
  return p;
}

}  // namespace slstm
