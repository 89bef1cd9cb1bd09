#include "slstm/block.hpp"

namespace slstm {

BlockWeights BlockWeights::bind(const ParamSet& p) {
  return BlockWeights{
      p.mat("W_hi_L"),   p.mat("W_hi_R"),   p.mat("W_ci_L"),   p.mat("W_ci_R"),
      p.vec("b_i"),      p.mat("W_hf_l_L"), p.mat("W_hf_l_R"), p.mat("W_cf_l_L"),
      p.mat("W_cf_l_R"), p.vec("b_fl"),     p.mat("W_hf_r_L"), p.mat("W_hf_r_R"),
      p.mat("W_cf_r_L"), p.mat("W_cf_r_R"), p.vec("b_fr"),     p.mat("W_hx_L"),
      p.mat("W_hx_R"),   p.vec("b_x"),      p.mat("W_ho_L"),   p.mat("W_ho_R"),
      p.mat("W_co"),     p.vec("b_o")};
}

ParentFeedback ParentFeedback::root(int dim) {
  ParentFeedback fb;
  fb.eps_c = Vec(dim);
  fb.f_gate = Vec(dim);
  fb.d_i = Vec(dim);
  fb.d_fl = Vec(dim);
  fb.d_fr = Vec(dim);
  fb.side = ChildSide::root;
  return fb;
}

namespace {

Vec mv(const Mat& m, const Vec& v, const char* pname) {
  if (m.cols() != v.len()) {
    throw ShapeError(std::string(pname) + ": expects vec[" + std::to_string(m.cols()) +
                     "], got vec[" + std::to_string(v.len()) + "]");
  }
  return matvec(m, v);
}

// W_a h_L + W_b h_R + W_c c_L + W_d c_R + b
Vec gate_preact(const Mat& wa, const Mat& wb, const Mat& wc, const Mat& wd, const Vec& b,
                const BlockInput& in, const char* gate) {
  Vec z = mv(wa, in.h_left, gate);
  add_inplace(z, mv(wb, in.h_right, gate));
  add_inplace(z, mv(wc, in.c_left, gate));
  add_inplace(z, mv(wd, in.c_right, gate));
  add_inplace(z, b);
  return z;
}

}  // namespace

BlockActivations block_forward(const BlockWeights& w, const BlockInput& in) {
  BlockActivations a;
  a.i = sigmoid(gate_preact(w.hi_l, w.hi_r, w.ci_l, w.ci_r, w.b_i, in, "W_*i"));
  a.f_left = sigmoid(gate_preact(w.hfl_l, w.hfl_r, w.cfl_l, w.cfl_r, w.b_fl, in, "W_*f_l"));
  a.f_right = sigmoid(gate_preact(w.hfr_l, w.hfr_r, w.cfr_l, w.cfr_r, w.b_fr, in, "W_*f_r"));

  a.x = mv(w.hx_l, in.h_left, "W_hx_L");
  add_inplace(a.x, mv(w.hx_r, in.h_right, "W_hx_R"));
  add_inplace(a.x, w.b_x);

  a.c = hadamard(a.f_left, in.c_left);
  add_inplace(a.c, hadamard(a.f_right, in.c_right));
  add_inplace(a.c, hadamard(a.i, tanh_vec(a.x)));

  Vec zo = mv(w.ho_l, in.h_left, "W_ho_L");
  add_inplace(zo, mv(w.ho_r, in.h_right, "W_ho_R"));
  add_inplace(zo, mv(w.co, a.c, "W_co"));
  add_inplace(zo, w.b_o);
  a.o = sigmoid(zo);

  a.h = hadamard(a.o, tanh_vec(a.c));
  return a;
}

BlockActivations block_forward(const ParamSet& params, const BlockInput& in) {
  return block_forward(BlockWeights::bind(params), in);
}

Vec transported_cell_error(const BlockWeights& w, const ParentFeedback& fb, int dim) {
  Vec eps(dim);
  switch (fb.side) {
    case ChildSide::root:
      return eps;
    case ChildSide::left:
      eps = hadamard(fb.eps_c, fb.f_gate);
      matvec_transpose_add(w.ci_l, fb.d_i, eps);
      matvec_transpose_add(w.cfl_l, fb.d_fl, eps);
      matvec_transpose_add(w.cfr_l, fb.d_fr, eps);
      return eps;
    case ChildSide::right:
      eps = hadamard(fb.eps_c, fb.f_gate);
      matvec_transpose_add(w.ci_r, fb.d_i, eps);
      matvec_transpose_add(w.cfl_r, fb.d_fl, eps);
      matvec_transpose_add(w.cfr_r, fb.d_fr, eps);
      return eps;
  }
  return eps;
}

BlockErrors block_backward(const BlockWeights& w, const BlockInput& in,
                           const BlockActivations& act, const Vec& eps_h,
                           const ParentFeedback& fb, GradSet& grads) {
  const int d = act.h.len();
  if (eps_h.len() != d) {
    throw ShapeError("block_backward: eps_h length " + std::to_string(eps_h.len()) +
                     " != hidden dim " + std::to_string(d));
  }
  BlockErrors e;
  const Vec tanh_c = tanh_vec(act.c);

  // delta at the output gate's pre-activation
  e.d_o = hadamard(hadamard(eps_h, tanh_c), sigmoid_deriv_from_act(act.o));

  // cell error: direct path through h, the same-node peephole through o, and
  // whatever the parent routed down
  e.eps_c = hadamard(hadamard(eps_h, act.o), tanh_deriv_from_act(tanh_c));
  matvec_transpose_add(w.co, e.d_o, e.eps_c);
  add_inplace(e.eps_c, transported_cell_error(w, fb, d));

  e.d_fl = hadamard(hadamard(e.eps_c, in.c_left), sigmoid_deriv_from_act(act.f_left));
  e.d_fr = hadamard(hadamard(e.eps_c, in.c_right), sigmoid_deriv_from_act(act.f_right));

  const Vec tanh_x = tanh_vec(act.x);
  e.d_i = hadamard(hadamard(e.eps_c, tanh_x), sigmoid_deriv_from_act(act.i));
  e.d_x = hadamard(hadamard(e.eps_c, act.i), tanh_deriv_from_act(tanh_x));

  // hidden error handed to each child: every path its h takes into this block
  e.child_eps_h_left = matvec_transpose(w.hi_l, e.d_i);
  matvec_transpose_add(w.hfl_l, e.d_fl, e.child_eps_h_left);
  matvec_transpose_add(w.hfr_l, e.d_fr, e.child_eps_h_left);
  matvec_transpose_add(w.hx_l, e.d_x, e.child_eps_h_left);
  matvec_transpose_add(w.ho_l, e.d_o, e.child_eps_h_left);

  e.child_eps_h_right = matvec_transpose(w.hi_r, e.d_i);
  matvec_transpose_add(w.hfl_r, e.d_fl, e.child_eps_h_right);
  matvec_transpose_add(w.hfr_r, e.d_fr, e.child_eps_h_right);
  matvec_transpose_add(w.hx_r, e.d_x, e.child_eps_h_right);
  matvec_transpose_add(w.ho_r, e.d_o, e.child_eps_h_right);

  // parameter gradients: outer products of deltas against the inputs they saw
  outer_add(grads.mat("W_hi_L"), e.d_i, in.h_left);
  outer_add(grads.mat("W_hi_R"), e.d_i, in.h_right);
  outer_add(grads.mat("W_ci_L"), e.d_i, in.c_left);
  outer_add(grads.mat("W_ci_R"), e.d_i, in.c_right);
  add_inplace(grads.vec("b_i"), e.d_i);

  outer_add(grads.mat("W_hf_l_L"), e.d_fl, in.h_left);
  outer_add(grads.mat("W_hf_l_R"), e.d_fl, in.h_right);
  outer_add(grads.mat("W_cf_l_L"), e.d_fl, in.c_left);
  outer_add(grads.mat("W_cf_l_R"), e.d_fl, in.c_right);
  add_inplace(grads.vec("b_fl"), e.d_fl);

  outer_add(grads.mat("W_hf_r_L"), e.d_fr, in.h_left);
  outer_add(grads.mat("W_hf_r_R"), e.d_fr, in.h_right);
  outer_add(grads.mat("W_cf_r_L"), e.d_fr, in.c_left);
  outer_add(grads.mat("W_cf_r_R"), e.d_fr, in.c_right);
  add_inplace(grads.vec("b_fr"), e.d_fr);

  outer_add(grads.mat("W_hx_L"), e.d_x, in.h_left);
  outer_add(grads.mat("W_hx_R"), e.d_x, in.h_right);
  add_inplace(grads.vec("b_x"), e.d_x);

  outer_add(grads.mat("W_ho_L"), e.d_o, in.h_left);
  outer_add(grads.mat("W_ho_R"), e.d_o, in.h_right);
  outer_add(grads.mat("W_co"), e.d_o, act.c);
  add_inplace(grads.vec("b_o"), e.d_o);

  return e;
}

BlockErrors block_backward(const ParamSet& params, const BlockInput& in,
                           const BlockActivations& act, const Vec& eps_h,
                           const ParentFeedback& fb, GradSet& grads) {
  return block_backward(BlockWeights::bind(params), in, act, eps_h, fb, grads);
}

}  // namespace slstm
