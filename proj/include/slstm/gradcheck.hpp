#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "slstm/network.hpp"
#include "slstm/params.hpp"
#include "slstm/treebank.hpp"

namespace slstm {

struct GradCheckReport {
  struct Offender {
    std::string name;
    size_t flat_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
  };
  std::map<std::string, double> max_rel_error;  // per parameter name
  Offender worst;
  double tolerance = 1e-4;
  bool pass = false;

  std::string table() const;   // aligned text table
  std::string to_json() const;
};

// The objective the numeric and analytic sides must agree on: the masked
// negative log-likelihood summed over the trees plus lambda * ||theta||^2
// (regularizer counted once per evaluation).
double corpus_objective(const ParamSet& params, const std::vector<Tree>& trees,
                        LabelMask mask, LeafCellMode leaf_cell_mode, double lambda);

// Analytic gradient of corpus_objective.
GradSet analytic_corpus_grads(const ParamSet& params, const std::vector<Tree>& trees,
                              LabelMask mask, LeafCellMode leaf_cell_mode, double lambda);

// Central finite differences against the supplied analytic gradients.
// Perturbation works on a copy of each scalar and restores it bit-exactly;
// embedding rows not touched by any tree are skipped.
GradCheckReport compare_with_numeric(const ParamSet& params, const std::vector<Tree>& trees,
                                     LabelMask mask, LeafCellMode leaf_cell_mode,
                                     double lambda, const GradSet& analytic,
                                     double epsilon = 1e-5, double tol = 1e-4);

// analytic_corpus_grads + compare_with_numeric in one call.
GradCheckReport check(const ParamSet& params, const std::vector<Tree>& trees, LabelMask mask,
                      double lambda, double epsilon = 1e-5, double tol = 1e-4,
                      LeafCellMode leaf_cell_mode = LeafCellMode::copy_h);

// Seeded random labeled binary tree over a toy vocabulary ("w0".."w9" by
// default): every node splits with probability 0.5 until max_depth, and every
// node gets a random label in [0, num_classes).
Tree random_tree(Rng& rng, int max_depth, int num_classes, int vocab_words = 10);

// Bundle of random trees plus the matching toy vocab, ready for the model.
Corpus random_corpus(int num_trees, uint64_t seed, int max_depth, int num_classes,
                     int vocab_words = 10);

}  // namespace slstm
