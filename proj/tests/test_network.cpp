#include <doctest.h>

#include <cmath>

#include "slstm/gradcheck.hpp"
#include "slstm/network.hpp"
#include "slstm/treebank.hpp"

using namespace slstm;

namespace {

// two-word vocab corpus for hand-built trees
Corpus tiny_corpus(const std::vector<std::string>& lines, int classes = 5) {
  Corpus c;
  c.num_classes = classes;
  for (const auto& line : lines) {
    Tree t = parse_sexpr(line);
    for (TreeNode& n : t.nodes) {
      if (n.token) n.token_id = c.vocab.add(*n.token);
    }
    c.trees.push_back(std::move(t));
  }
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("network");

TEST_CASE("softmax is stable, positive, sums to one") {
  const Vec p = softmax(Vec{1000.0, 1000.0, 999.0});
  double sum = 0.0;
  for (int i = 0; i < p.len(); ++i) {
    CHECK(p[i] > 0.0);
    sum += p[i];
  }
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  CHECK(p[0] == p[1]);
  CHECK(p[2] < p[0]);

  // shift invariance of the argmax
  const Vec q = softmax(Vec{1.0, 3.0, 2.0});
  const Vec r = softmax(Vec{101.0, 103.0, 102.0});
  CHECK(argmax_class(q) == argmax_class(r));
}

TEST_CASE("single leaf: hidden is the embedding row") {
  Corpus c = tiny_corpus({"(1 ok)"});
  const ParamSet p = init_params(3, c.vocab.size(), 5, 42);
  const TreeStates s = tree_forward(p, c.trees[0]);
  const int id = c.trees[0].nodes[0].token_id;
  for (int j = 0; j < 3; ++j) CHECK(s.hidden(0)[j] == p.embedding()(id, j));
  CHECK(s.cell(0) == s.hidden(0));  // copy_h default

  Vec logits = matvec(p.classifier_w(), s.hidden(0));
  add_inplace(logits, p.classifier_b());
  CHECK(s.probs(0) == softmax(logits));
}

TEST_CASE("leaf cell modes") {
  Corpus c = tiny_corpus({"(1 ok)"});
  const ParamSet p = init_params(3, c.vocab.size(), 5, 42);
  const TreeStates zero = tree_forward(p, c.trees[0], LeafCellMode::zero);
  CHECK(zero.cell(0) == Vec(3));
  const TreeStates th = tree_forward(p, c.trees[0], LeafCellMode::tanh_h);
  CHECK(th.cell(0) == tanh_vec(th.hidden(0)));
}

TEST_CASE("zero parameters give uniform distributions everywhere") {
  Corpus c = tiny_corpus({"(3 (2 good) (2 (2 bad) (2 movie)))"});
  const ParamSet p = make_param_skeleton(4, 4, c.vocab.size(), 5);
  const TreeStates s = tree_forward(p, c.trees[0]);
  for (const NodeState& ns : s.nodes) {
    for (int j = 0; j < 5; ++j) CHECK(ns.probs[j] == doctest::Approx(0.2).epsilon(1e-14));
  }
}

TEST_CASE("two-leaf d=1 composition matches the scalar equations") {
  Corpus c = tiny_corpus({"(3 (2 good) (2 movie))"});
  ParamSet p = make_param_skeleton(1, 1, c.vocab.size(), 5);
  // hand-set: distinct embeddings, one nonzero path per gate family
  p.embedding()(c.vocab.lookup("good"), 0) = 0.4;
  p.embedding()(c.vocab.lookup("movie"), 0) = -0.3;
  p.mat("W_hi_L")(0, 0) = 0.7;
  p.mat("W_ci_R")(0, 0) = -0.5;
  p.vec("b_fl")[0] = 0.2;
  p.mat("W_hx_R")(0, 0) = 1.1;
  p.mat("W_ho_L")(0, 0) = -0.9;
  p.mat("W_co")(0, 0) = 0.6;

  const TreeStates s = tree_forward(p, c.trees[0]);

  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double h_l = 0.4, h_r = -0.3, c_l = 0.4, c_r = -0.3;  // copy_h leaves
  const double i = sig(0.7 * h_l + (-0.5) * c_r);
  const double f_l = sig(0.2);
  const double f_r = sig(0.0);
  const double x = 1.1 * h_r;
  const double cc = f_l * c_l + f_r * c_r + i * std::tanh(x);
  const double o = sig(-0.9 * h_l + 0.6 * cc);
  const double h = o * std::tanh(cc);

  const int32_t root = c.trees[0].root_id;
  CHECK(s.hidden(root)[0] == doctest::Approx(h).epsilon(1e-14));
  CHECK(s.cell(root)[0] == doctest::Approx(cc).epsilon(1e-14));
}

TEST_CASE("tree_loss values") {
  Corpus c = tiny_corpus({"(3 (2 good) (2 movie))"});
  const Tree& t = c.trees[0];
  const ParamSet p = make_param_skeleton(4, 4, c.vocab.size(), 5);
  const TreeStates s = tree_forward(p, t);

  // uniform predictions, root-only supervision
  const LossReport root_only = tree_loss(s, t, LabelMask::root_only, p, 0.0);
  CHECK(root_only.num_supervised_nodes == 1);
  CHECK(root_only.data_loss == doctest::Approx(1.6094379124341003).epsilon(1e-12));
  CHECK(root_only.total_loss == root_only.data_loss);  // lambda = 0

  const LossReport all = tree_loss(s, t, LabelMask::all_nodes, p, 0.0);
  CHECK(all.num_supervised_nodes == 3);
  CHECK(all.data_loss == doctest::Approx(3 * 1.6094379124341003).epsilon(1e-12));

  const LossReport leaves = tree_loss(s, t, LabelMask::root_and_leaves, p, 0.0);
  CHECK(leaves.num_supervised_nodes == 3);  // root + 2 leaves

  // lambda adds the squared norm once
  ParamSet q = p;
  q.vec("b_i")[0] = 2.0;
  const TreeStates sq = tree_forward(q, t);
  const LossReport reg = tree_loss(sq, t, LabelMask::root_only, q, 0.5);
  CHECK(reg.total_loss == doctest::Approx(reg.data_loss + 0.5 * 4.0).epsilon(1e-12));
}

TEST_CASE("near-one-hot predictions drive the loss to zero") {
  Corpus c = tiny_corpus({"(3 (2 good) (2 movie))"});
  const Tree& t = c.trees[0];
  ParamSet p = make_param_skeleton(2, 2, c.vocab.size(), 5);
  // a huge class-3 bias makes every node predict 3; the root's gold is 3
  p.vec("b_s")[3] = 200.0;
  const TreeStates s = tree_forward(p, t);
  const LossReport r = tree_loss(s, t, LabelMask::root_only, p, 0.0);
  CHECK(r.data_loss >= 0.0);
  CHECK(r.data_loss <= 1e-9);
}

TEST_CASE("unlabeled nodes are excluded, never errors") {
  Corpus c = tiny_corpus({"(3 (-1 (2 a) (2 b)) (2 movie))"});
  const Tree& t = c.trees[0];
  const ParamSet p = make_param_skeleton(2, 2, c.vocab.size(), 5);
  const TreeStates s = tree_forward(p, t);
  const LossReport all = tree_loss(s, t, LabelMask::all_nodes, p, 0.0);
  CHECK(all.num_supervised_nodes == 4);  // 5 nodes, one unlabeled
}

TEST_CASE("exact prediction means zero data gradient") {
  Corpus c = tiny_corpus({"(3 (2 good) (2 movie))"});
  const Tree& t = c.trees[0];
  ParamSet p = init_params(3, c.vocab.size(), 5, 77);
  p.vec("b_s")[3] = 500.0;  // softmax saturates at the gold class
  const TreeStates s = tree_forward(p, t);
  GradSet g(p);
  tree_backward(p, t, s, LabelMask::root_only, g, 0.0);
  // residual is ~exp(-500); everything it touches stays numerically zero
  CHECK(std::sqrt(g.tensors().squared_norm()) <= 1e-12);
}

TEST_CASE("gradients are additive over identical trees") {
  Corpus c = tiny_corpus({"(3 (2 good) (2 (1 bad) (2 movie)))"});
  const Tree& t = c.trees[0];
  const ParamSet p = init_params(3, c.vocab.size(), 5, 11);
  const TreeStates s = tree_forward(p, t);

  GradSet once(p), twice(p);
  tree_backward(p, t, s, LabelMask::all_nodes, once, 0.0);
  tree_backward(p, t, s, LabelMask::all_nodes, twice, 0.0);
  tree_backward(p, t, s, LabelMask::all_nodes, twice, 0.0);

  const auto& t1 = once.tensors();
  const auto& t2 = twice.tensors();
  for (size_t e = 0; e < t1.size(); ++e) {
    auto a = t1.flat(e);
    auto b = t2.flat(e);
    for (size_t k = 0; k < a.size(); ++k) {
      CHECK(b[k] == doctest::Approx(2.0 * a[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("root-only gradients ignore internal labels") {
  Corpus c1 = tiny_corpus({"(3 (2 good) (1 (1 bad) (0 movie)))"});
  Corpus c2 = tiny_corpus({"(3 (0 good) (4 (3 bad) (2 movie)))"});  // relabeled inside
  const ParamSet p = init_params(3, c1.vocab.size(), 5, 13);

  GradSet g1(p), g2(p);
  const TreeStates s1 = tree_forward(p, c1.trees[0]);
  const TreeStates s2 = tree_forward(p, c2.trees[0]);
  tree_backward(p, c1.trees[0], s1, LabelMask::root_only, g1, 0.0);
  tree_backward(p, c2.trees[0], s2, LabelMask::root_only, g2, 0.0);

  for (size_t e = 0; e < g1.tensors().size(); ++e) {
    auto a = g1.tensors().flat(e);
    auto b = g2.tensors().flat(e);
    for (size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
  }
}

TEST_CASE("argmax tie-breaking is lowest class") {
  CHECK(argmax_class(Vec{0.1, 0.7, 0.2, 0.0, 0.0}) == 1);
  CHECK(argmax_class(Vec{0.2, 0.2, 0.2, 0.2, 0.2}) == 0);
  CHECK(argmax_class(Vec{0.3, 0.4, 0.4}) == 1);
}

TEST_CASE("predict_node_classes is deterministic") {
  Corpus c = tiny_corpus({"(3 (2 good) (2 movie))"});
  const ParamSet p = init_params(4, c.vocab.size(), 5, 2);
  const TreeStates s1 = tree_forward(p, c.trees[0]);
  const TreeStates s2 = tree_forward(p, c.trees[0]);
  CHECK(predict_node_classes(s1) == predict_node_classes(s2));
}

TEST_SUITE_END();
