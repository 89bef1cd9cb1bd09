#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "slstm/linalg.hpp"

namespace slstm {

// Ordered name -> tensor registry. Insertion order is the iteration order,
// which makes parameter dumps, optimizer walks, and gradient merges
// deterministic.
class TensorMap {
 public:
  struct Entry {
    std::string name;
    std::variant<Mat, Vec> value;
  };

  Mat& add_mat(std::string name, int rows, int cols);
  Vec& add_vec(std::string name, int len);

  bool has(std::string_view name) const;
  Mat& mat(std::string_view name);
  const Mat& mat(std::string_view name) const;
  Vec& vec(std::string_view name);
  const Vec& vec(std::string_view name) const;

  size_t size() const { return entries_.size(); }
  Entry& at(size_t i) { return entries_[i]; }
  const Entry& at(size_t i) const { return entries_[i]; }
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  // Flat view of one entry's elements, row-major for matrices.
  std::span<double> flat(size_t i);
  std::span<const double> flat(size_t i) const;

  void zero();
  void scale(double s);
  // this += s * other; shapes and names must mirror exactly.
  void add_scaled(const TensorMap& other, double s);
  double squared_norm() const;
  bool finite() const;

  // Same names and shapes, all elements zero.
  static TensorMap zeros_like(const TensorMap& other);

  bool operator==(const TensorMap&) const;

 private:
  size_t index_of(std::string_view name) const;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

// All trainable parameters of the model: the tree-composition block weights,
// the word embedding table, and the shared softmax classifier.
//
// Block entries, in fixed order:
//   W_hi_L W_hi_R W_ci_L W_ci_R b_i            input gate
//   W_hf_l_L W_hf_l_R W_cf_l_L W_cf_l_R b_fl   left forget gate
//   W_hf_r_L W_hf_r_R W_cf_r_L W_cf_r_R b_fr   right forget gate
//   W_hx_L W_hx_R b_x                          cell input
//   W_ho_L W_ho_R W_co b_o                     output gate (W_co peeps at the
//                                              updated cell)
// followed by: embed (vocab x embed_dim), W_s (classes x hidden), b_s.
class ParamSet {
 public:
  ParamSet() = default;

  int hidden_dim() const { return hidden_dim_; }
  int embed_dim() const { return embed_dim_; }
  int vocab_size() const { return vocab_size_; }
  int num_classes() const { return num_classes_; }

  TensorMap& tensors() { return tensors_; }
  const TensorMap& tensors() const { return tensors_; }

  const Mat& mat(std::string_view name) const { return tensors_.mat(name); }
  Mat& mat(std::string_view name) { return tensors_.mat(name); }
  const Vec& vec(std::string_view name) const { return tensors_.vec(name); }
  Vec& vec(std::string_view name) { return tensors_.vec(name); }

  const Mat& embedding() const { return tensors_.mat("embed"); }
  Mat& embedding() { return tensors_.mat("embed"); }
  const Mat& classifier_w() const { return tensors_.mat("W_s"); }
  const Vec& classifier_b() const { return tensors_.vec("b_s"); }

  // Throws ShapeError if any entry disagrees with the declared dimensions.
  void validate() const;

  bool operator==(const ParamSet&) const = default;

  friend ParamSet init_params(int, int, int, uint64_t);
  friend ParamSet make_param_skeleton(int, int, int, int);
  friend void load_params(std::istream&, ParamSet&);

 private:
  void build_entries();
  int hidden_dim_ = 0;
  int embed_dim_ = 0;
  int vocab_size_ = 0;
  int num_classes_ = 0;
  TensorMap tensors_;
};

// Weight matrices uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero,
// embeddings uniform in [-0.1, 0.1]. Same seed, same bytes.
ParamSet init_params(int hidden_dim, int vocab_size, int num_classes, uint64_t seed);

// Every entry (biases included) uniform in [-scale, scale]: a generic point in
// parameter space, which is what gradient checking wants — the training init
// sits close to zero where many gradients are degenerately small.
ParamSet random_params(int hidden_dim, int vocab_size, int num_classes, uint64_t seed,
                       double scale);

// All-zero parameters with the right shapes (tests, load target).
ParamSet make_param_skeleton(int hidden_dim, int embed_dim, int vocab_size, int num_classes);

// Structure-identical gradient mirror of a ParamSet.
class GradSet {
 public:
  GradSet() = default;
  explicit GradSet(const ParamSet& params)
      : tensors_(TensorMap::zeros_like(params.tensors())) {}

  TensorMap& tensors() { return tensors_; }
  const TensorMap& tensors() const { return tensors_; }
  Mat& mat(std::string_view name) { return tensors_.mat(name); }
  const Mat& mat(std::string_view name) const { return tensors_.mat(name); }
  Vec& vec(std::string_view name) { return tensors_.vec(name); }
  const Vec& vec(std::string_view name) const { return tensors_.vec(name); }

  void zero() { tensors_.zero(); }
  // this += s * other (deterministic worker merge).
  void merge(const GradSet& other, double s = 1.0) { tensors_.add_scaled(other.tensors_, s); }

 private:
  TensorMap tensors_;
};

// grads[name] += scale * delta. Unknown names and shape mismatches are fatal.
void axpy_accumulate(GradSet& grads, std::string_view name, const Mat& delta, double scale);
void axpy_accumulate(GradSet& grads, std::string_view name, const Vec& delta, double scale);

// Versioned binary parameter container. Round-trips bit-exactly.
void save_params(std::ostream& out, const ParamSet& params);
void load_params(std::istream& in, ParamSet& params);
void save_params_file(const std::string& path, const ParamSet& params);
ParamSet load_params_file(const std::string& path);

// Raw TensorMap block, shared by the parameter container and checkpoints.
void write_tensor_map(std::ostream& out, const TensorMap& tm);
TensorMap read_tensor_map(std::istream& in);

}  // namespace slstm
