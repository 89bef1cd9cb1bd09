#pragma once

#include <string>
#include <utility>
#include <vector>

#include "slstm/block.hpp"
#include "slstm/params.hpp"
#include "slstm/treebank.hpp"

namespace slstm {

// Which nodes' gold labels contribute to the objective. A node contributes
// iff the mask admits its role AND its label is present.
enum class LabelMask { all_nodes, root_only, root_and_leaves };

// How a leaf's cell vector is derived from its embedding h.
enum class LeafCellMode { copy_h, zero, tanh_h };

LabelMask parse_label_mask(const std::string& s);        // "all" | "root" | "root_leaf"
LeafCellMode parse_leaf_cell_mode(const std::string& s); // "copy_h" | "zero" | "tanh_h"
std::string to_string(LabelMask m);
std::string to_string(LeafCellMode m);

// Numerically stable softmax (max-subtracted); strictly positive outputs
// summing to 1.
Vec softmax(const Vec& logits);

// Per-node forward state for one tree.
struct NodeState {
  Vec h, c;              // filled for every node
  BlockActivations act;  // internal nodes only
  Vec probs;             // class distribution
};

struct TreeStates {
  std::vector<NodeState> nodes;
  LeafCellMode leaf_cell_mode = LeafCellMode::copy_h;

  const Vec& hidden(int32_t id) const { return nodes[static_cast<size_t>(id)].h; }
  const Vec& cell(int32_t id) const { return nodes[static_cast<size_t>(id)].c; }
  const Vec& probs(int32_t id) const { return nodes[static_cast<size_t>(id)].probs; }
};

struct LossReport {
  double total_loss = 0.0;  // data term + lambda * ||theta||^2
  double data_loss = 0.0;
  int num_supervised_nodes = 0;
};

bool node_supervised(const Tree& t, int32_t id, LabelMask mask);

// Bottom-up pass: leaves take their embedding row as h (cell per
// leaf_cell_mode), internal nodes run the memory block over their children,
// and every node gets softmax(W_s h + b_s).
TreeStates tree_forward(const ParamSet& params, const Tree& t,
                        LeafCellMode leaf_cell_mode = LeafCellMode::copy_h);

// Masked negative log-likelihood over the tree plus lambda * ||theta||^2.
// Probabilities are clamped at 1e-12 before the log.
LossReport tree_loss(const TreeStates& states, const Tree& t, LabelMask mask,
                     const ParamSet& params, double lambda);

// Top-down pass. Each node's hidden error is its classification residual
// pushed through the classifier plus the error handed down by its parent;
// internal nodes run the block backward, leaves route their error into the
// embedding row. When lambda is nonzero, 2*lambda*theta is added once for
// every parameter. Accumulates into grads without zeroing it.
void tree_backward(const ParamSet& params, const Tree& t, const TreeStates& states,
                   LabelMask mask, GradSet& grads, double lambda);

// grads += coeff * params  (the L2 term's gradient; coeff = 2 * lambda * scale).
void accumulate_l2_grad(GradSet& grads, const ParamSet& params, double coeff);

// Argmax class per node; ties break toward the lowest class index.
std::vector<std::pair<int32_t, int>> predict_node_classes(const TreeStates& states);
int argmax_class(const Vec& probs);

}  // namespace slstm
