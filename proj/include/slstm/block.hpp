#pragma once

#include "slstm/linalg.hpp"
#include "slstm/params.hpp"

namespace slstm {

// Children's states entering a memory block.
struct BlockInput {
  Vec h_left, h_right;  // hidden vectors
  Vec c_left, c_right;  // cell vectors
};

// Everything the forward pass computes at one node, cached for backward.
// Gates live strictly inside (0,1); x is the pre-squash cell input.
struct BlockActivations {
  Vec i;       // input gate
  Vec f_left;  // forget gate over the left child's cell
  Vec f_right; // forget gate over the right child's cell
  Vec o;       // output gate
  Vec x;       // cell input before tanh
  Vec c;       // cell
  Vec h;       // hidden = o (*) tanh(c)
};

enum class ChildSide { root, left, right };

// What a parent block hands down to a child so the child can assemble its own
// cell error: the parent's cell error, the forget-gate activation on this
// child's side, and the parent's gate deltas (they reach the child's cell
// through the peephole matrices). All zeros at the root.
struct ParentFeedback {
  Vec eps_c;
  Vec f_gate;
  Vec d_i, d_fl, d_fr;
  ChildSide side = ChildSide::root;

  static ParentFeedback root(int dim);
};

// Backward-pass outputs of one block.
struct BlockErrors {
  Vec eps_c;                        // cell error of this node
  Vec d_o, d_fl, d_fr, d_i;         // gate deltas (pre-activation)
  Vec d_x;                          // delta at the cell input branch
  Vec child_eps_h_left;             // hidden error handed to the left child
  Vec child_eps_h_right;            // hidden error handed to the right child
};

// Const references to the block's weights, bound once per tree walk so the
// equations below read like the math.
struct BlockWeights {
  const Mat &hi_l, &hi_r, &ci_l, &ci_r;
  const Vec& b_i;
  const Mat &hfl_l, &hfl_r, &cfl_l, &cfl_r;
  const Vec& b_fl;
  const Mat &hfr_l, &hfr_r, &cfr_l, &cfr_r;
  const Vec& b_fr;
  const Mat &hx_l, &hx_r;
  const Vec& b_x;
  const Mat &ho_l, &ho_r, &co;
  const Vec& b_o;

  static BlockWeights bind(const ParamSet& p);
};

// Forward computation of one memory block:
//   i    = sigma(W_hi^L h_L + W_hi^R h_R + W_ci^L c_L + W_ci^R c_R + b_i)
//   f^L  = sigma(W_hfl^L h_L + W_hfl^R h_R + W_cfl^L c_L + W_cfl^R c_R + b_fl)
//   f^R  = sigma(W_hfr^L h_L + W_hfr^R h_R + W_cfr^L c_L + W_cfr^R c_R + b_fr)
//   x    = W_hx^L h_L + W_hx^R h_R + b_x
//   c    = f^L (*) c_L + f^R (*) c_R + i (*) tanh(x)
//   o    = sigma(W_ho^L h_L + W_ho^R h_R + W_co c + b_o)   [updated cell]
//   h    = o (*) tanh(c)
BlockActivations block_forward(const BlockWeights& w, const BlockInput& in);
BlockActivations block_forward(const ParamSet& params, const BlockInput& in);

// Cell error reaching a node from its parent: eps_c_parent (*) f_side plus the
// peephole paths through the parent's gate deltas. Zero at the root.
Vec transported_cell_error(const BlockWeights& w, const ParentFeedback& fb, int dim);

// Backward pass of one block given the error eps_h arriving at its hidden
// vector. Gate deltas and the cell error follow the forward equations'
// reverse; parameter gradient contributions (outer products against the
// children's states) are accumulated into grads.
BlockErrors block_backward(const BlockWeights& w, const BlockInput& in,
                           const BlockActivations& act, const Vec& eps_h,
                           const ParentFeedback& fb, GradSet& grads);
BlockErrors block_backward(const ParamSet& params, const BlockInput& in,
                           const BlockActivations& act, const Vec& eps_h,
                           const ParentFeedback& fb, GradSet& grads);

}  // namespace slstm
