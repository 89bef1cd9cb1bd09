#include <doctest.h>

#include <cmath>

#include "slstm/gradcheck.hpp"

using namespace slstm;

TEST_SUITE_BEGIN("gradcheck");

TEST_CASE("no trees is a vacuous pass") {
  const ParamSet p = init_params(3, 11, 5, 7);
  const GradCheckReport r = check(p, {}, LabelMask::all_nodes, 1e-4);
  CHECK(r.pass);
  CHECK(r.max_rel_error.empty());
}

TEST_CASE("analytic gradients agree with central differences") {
  // generic-point parameters: the near-zero training init leaves too many
  // gradients at the finite-difference noise floor to check against
  const Corpus corpus = random_corpus(10, 7, 4, 5);
  const ParamSet p = random_params(3, corpus.vocab.size(), 5, 7, 0.5);
  for (LabelMask mask :
       {LabelMask::all_nodes, LabelMask::root_only, LabelMask::root_and_leaves}) {
    const GradCheckReport r = check(p, corpus.trees, mask, 1e-4, 1e-4);
    INFO("mask ", to_string(mask), "\n", r.table());
    CHECK(r.pass);
  }
}

TEST_CASE("every leaf cell mode is gradient-exact") {
  const Corpus corpus = random_corpus(6, 21, 4, 5);
  const ParamSet p = random_params(3, corpus.vocab.size(), 5, 21, 0.5);
  for (LeafCellMode mode : {LeafCellMode::copy_h, LeafCellMode::zero, LeafCellMode::tanh_h}) {
    const GradCheckReport r =
        check(p, corpus.trees, LabelMask::all_nodes, 1e-4, 1e-4, 1e-4, mode);
    INFO("leaf cell ", to_string(mode), "\n", r.table());
    CHECK(r.pass);
  }
}

TEST_CASE("a corrupted W_co gradient is caught and named") {
  const Corpus corpus = random_corpus(5, 9, 4, 5);
  const ParamSet p = random_params(3, corpus.vocab.size(), 5, 9, 0.5);
  GradSet analytic =
      analytic_corpus_grads(p, corpus.trees, LabelMask::all_nodes, LeafCellMode::copy_h, 1e-4);
  for (double& x : analytic.mat("W_co").raw()) x *= 2.0;
  const GradCheckReport r = compare_with_numeric(
      p, corpus.trees, LabelMask::all_nodes, LeafCellMode::copy_h, 1e-4, analytic, 1e-4);
  CHECK(!r.pass);
  CHECK(r.worst.name == "W_co");
}

TEST_CASE("check leaves the parameters untouched") {
  const Corpus corpus = random_corpus(3, 4, 3, 5);
  const ParamSet p = random_params(3, corpus.vocab.size(), 5, 4, 0.5);
  const ParamSet before = p;
  (void)check(p, corpus.trees, LabelMask::all_nodes, 1e-4);
  CHECK(p == before);
}

TEST_CASE("central differencing improves as epsilon shrinks") {
  const Corpus corpus = random_corpus(5, 15, 4, 5);
  const ParamSet p = random_params(3, corpus.vocab.size(), 5, 15, 0.5);
  const GradCheckReport coarse =
      check(p, corpus.trees, LabelMask::all_nodes, 0.0, 1e-4);
  const GradCheckReport fine = check(p, corpus.trees, LabelMask::all_nodes, 0.0, 1e-5);
  // allow a 10x noise floor: at these scales cancellation can mask the O(eps^2) law
  CHECK(coarse.worst.rel_error >= fine.worst.rel_error / 10.0);
}

TEST_CASE("a two-leaf d=3 block passes a tight tolerance") {
  Corpus corpus = random_corpus(60, 1, 1, 5);
  // keep only trees that actually composed two leaves
  std::vector<Tree> two_leaf;
  for (Tree& t : corpus.trees) {
    if (t.num_nodes() == 3) two_leaf.push_back(std::move(t));
    if (two_leaf.size() == 3) break;
  }
  REQUIRE(!two_leaf.empty());
  const ParamSet p = random_params(3, corpus.vocab.size(), 5, 1, 0.5);
  const GradCheckReport r = check(p, two_leaf, LabelMask::all_nodes, 0.0, 1e-5, 1e-6);
  INFO(r.table());
  CHECK(r.pass);
}

TEST_CASE("random trees respect the depth bound and are labeled") {
  Rng rng(77);
  for (int i = 0; i < 50; ++i) {
    const Tree t = random_tree(rng, 4, 5);
    CHECK(t.root().depth <= 4);
    for (const TreeNode& n : t.nodes) CHECK(n.label.has_value());
  }
}

TEST_SUITE_END();
