#include "slstm/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

namespace slstm {

double corpus_objective(const ParamSet& params, const std::vector<Tree>& trees,
                        LabelMask mask, LeafCellMode leaf_cell_mode, double lambda) {
  double data = 0.0;
  for (const Tree& t : trees) {
    const TreeStates states = tree_forward(params, t, leaf_cell_mode);
    data += tree_loss(states, t, mask, params, 0.0).data_loss;
  }
  return data + lambda * params.tensors().squared_norm();
}

GradSet analytic_corpus_grads(const ParamSet& params, const std::vector<Tree>& trees,
                              LabelMask mask, LeafCellMode leaf_cell_mode, double lambda) {
  GradSet grads(params);
  for (const Tree& t : trees) {
    const TreeStates states = tree_forward(params, t, leaf_cell_mode);
    tree_backward(params, t, states, mask, grads, 0.0);
  }
  accumulate_l2_grad(grads, params, 2.0 * lambda);
  return grads;
}

namespace {

double rel_error(double ga, double gn) {
  return std::abs(ga - gn) / std::max(1e-8, std::abs(ga) + std::abs(gn));
}

double tree_data_loss(const ParamSet& params, const Tree& t, LabelMask mask,
                      LeafCellMode leaf_cell_mode) {
  const TreeStates states = tree_forward(params, t, leaf_cell_mode);
  return tree_loss(states, t, mask, params, 0.0).data_loss;
}

}  // namespace

GradCheckReport compare_with_numeric(const ParamSet& params, const std::vector<Tree>& trees,
                                     LabelMask mask, LeafCellMode leaf_cell_mode,
                                     double lambda, const GradSet& analytic, double epsilon,
                                     double tol) {
  // Perturb a private copy; the caller's params stay untouched.
  ParamSet work = params;

  std::set<int32_t> touched_rows;
  for (const Tree& t : trees) {
    for (const TreeNode& n : t.nodes) {
      if (n.token) touched_rows.insert(n.token_id);
    }
  }

  GradCheckReport report;
  report.tolerance = tol;
  report.worst.rel_error = -1.0;

  TensorMap& tensors = work.tensors();
  for (size_t ei = 0; ei < tensors.size(); ++ei) {
    const std::string& name = tensors.at(ei).name;
    auto values = tensors.flat(ei);
    auto grads = analytic.tensors().flat(ei);

    const bool is_embedding = name == "embed";
    const int embed_cols = is_embedding ? work.embedding().cols() : 0;

    double max_err = 0.0;
    for (size_t k = 0; k < values.size(); ++k) {
      if (is_embedding) {
        const int32_t row = static_cast<int32_t>(k) / embed_cols;
        if (!touched_rows.count(row)) continue;
      }
      const double saved = values[k];
      // Central difference of the data term, accumulated tree by tree so the
      // rounding of one tree's loss never contaminates another's difference.
      // The L2 term is quadratic, so its central difference is exactly
      // 2*lambda*theta_k and is added in closed form.
      long double diff = 0.0L;
      for (const Tree& t : trees) {
        values[k] = saved + epsilon;
        const double up = tree_data_loss(work, t, mask, leaf_cell_mode);
        values[k] = saved - epsilon;
        const double down = tree_data_loss(work, t, mask, leaf_cell_mode);
        diff += static_cast<long double>(up) - static_cast<long double>(down);
      }
      values[k] = saved;

      const double gn =
          static_cast<double>(diff / (2.0L * epsilon)) + 2.0 * lambda * saved;
      const double err = rel_error(grads[k], gn);
      max_err = std::max(max_err, err);
      if (err > report.worst.rel_error) {
        report.worst = {name, k, grads[k], gn, err};
      }
    }
    report.max_rel_error[name] = max_err;
  }

  report.pass = true;
  for (const auto& [name, err] : report.max_rel_error) {
    if (err > tol) report.pass = false;
  }
  return report;
}

GradCheckReport check(const ParamSet& params, const std::vector<Tree>& trees, LabelMask mask,
                      double lambda, double epsilon, double tol, LeafCellMode leaf_cell_mode) {
  if (trees.empty()) {
    GradCheckReport vacuous;
    vacuous.tolerance = tol;
    vacuous.pass = true;
    return vacuous;
  }
  const GradSet analytic = analytic_corpus_grads(params, trees, mask, leaf_cell_mode, lambda);
  return compare_with_numeric(params, trees, mask, leaf_cell_mode, lambda, analytic, epsilon,
                              tol);
}

std::string GradCheckReport::table() const {
  std::ostringstream out;
  out << std::left << std::setw(12) << "param" << std::right << std::setw(14)
      << "max_rel_err" << "  status\n";
  for (const auto& [name, err] : max_rel_error) {
    out << std::left << std::setw(12) << name << std::right << std::setw(14)
        << std::scientific << std::setprecision(3) << err
        << (err <= tolerance ? "  ok" : "  FAIL") << '\n';
  }
  out << (pass ? "PASS" : "FAIL") << " (tolerance " << std::scientific
      << std::setprecision(1) << tolerance << ")";
  if (worst.rel_error >= 0.0) {
    out << "; worst: " << worst.name << "[" << worst.flat_index << "] analytic "
        << std::setprecision(6) << worst.analytic << " numeric " << worst.numeric
        << " rel_err " << std::setprecision(3) << worst.rel_error;
  }
  out << '\n';
  return out.str();
}

std::string GradCheckReport::to_json() const {
  nlohmann::json j;
  j["pass"] = pass;
  j["tolerance"] = tolerance;
  j["max_rel_error"] = max_rel_error;
  j["worst"] = {{"name", worst.name},
                {"flat_index", worst.flat_index},
                {"analytic", worst.analytic},
                {"numeric", worst.numeric},
                {"rel_error", worst.rel_error}};
  return j.dump(2);
}

namespace {
int32_t build_random_node(Rng& rng, int depth_left, int num_classes, int vocab_words,
                          std::vector<TreeNode>& nodes) {
  const bool split = depth_left > 0 && rng.next_double() < 0.5;
  TreeNode n;
  n.label = rng.below(num_classes);
  if (split) {
    n.left = build_random_node(rng, depth_left - 1, num_classes, vocab_words, nodes);
    n.right = build_random_node(rng, depth_left - 1, num_classes, vocab_words, nodes);
    const TreeNode& l = nodes[static_cast<size_t>(n.left)];
    const TreeNode& r = nodes[static_cast<size_t>(n.right)];
    n.depth = 1 + std::max(l.depth, r.depth);
    n.span_length = l.span_length + r.span_length;
  } else {
    n.token = "w" + std::to_string(rng.below(vocab_words));
    n.depth = 0;
    n.span_length = 1;
  }
  nodes.push_back(std::move(n));
  return static_cast<int32_t>(nodes.size()) - 1;
}
}  // namespace

Tree random_tree(Rng& rng, int max_depth, int num_classes, int vocab_words) {
  Tree t;
  t.root_id = build_random_node(rng, max_depth, num_classes, vocab_words, t.nodes);
  t.validate();
  return t;
}

Corpus random_corpus(int num_trees, uint64_t seed, int max_depth, int num_classes,
                     int vocab_words) {
  Corpus c;
  c.num_classes = num_classes;
  c.split_name = "random";
  for (int w = 0; w < vocab_words; ++w) c.vocab.add("w" + std::to_string(w));
  Rng rng(seed);
  for (int i = 0; i < num_trees; ++i) {
    Tree t = random_tree(rng, max_depth, num_classes, vocab_words);
    assign_token_ids(t, c.vocab);
    c.trees.push_back(std::move(t));
  }
  return c;
}

}  // namespace slstm
