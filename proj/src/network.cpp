#include "slstm/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slstm {

LabelMask parse_label_mask(const std::string& s) {
  if (s == "all") return LabelMask::all_nodes;
  if (s == "root") return LabelMask::root_only;
  if (s == "root_leaf") return LabelMask::root_and_leaves;
  throw std::invalid_argument("unknown label mask: " + s + " (want all|root|root_leaf)");
}

LeafCellMode parse_leaf_cell_mode(const std::string& s) {
  if (s == "copy_h") return LeafCellMode::copy_h;
  if (s == "zero") return LeafCellMode::zero;
  if (s == "tanh_h") return LeafCellMode::tanh_h;
  throw std::invalid_argument("unknown leaf cell mode: " + s + " (want copy_h|zero|tanh_h)");
}

std::string to_string(LabelMask m) {
  switch (m) {
    case LabelMask::all_nodes: return "all";
    case LabelMask::root_only: return "root";
    case LabelMask::root_and_leaves: return "root_leaf";
  }
  return "?";
}

std::string to_string(LeafCellMode m) {
  switch (m) {
    case LeafCellMode::copy_h: return "copy_h";
    case LeafCellMode::zero: return "zero";
    case LeafCellMode::tanh_h: return "tanh_h";
  }
  return "?";
}

Vec softmax(const Vec& logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < logits.len(); ++i) mx = std::max(mx, logits[i]);
  Vec p(logits.len());
  double sum = 0.0;
  for (int i = 0; i < logits.len(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  const double tiny = std::numeric_limits<double>::denorm_min();
  for (int i = 0; i < p.len(); ++i) {
    p[i] /= sum;
    if (p[i] < tiny) p[i] = tiny;
  }
  return p;
}

bool node_supervised(const Tree& t, int32_t id, LabelMask mask) {
  const TreeNode& n = t.nodes[static_cast<size_t>(id)];
  if (!n.label) return false;
  switch (mask) {
    case LabelMask::all_nodes:
      return true;
    case LabelMask::root_only:
      return id == t.root_id;
    case LabelMask::root_and_leaves:
      return id == t.root_id || n.is_leaf();
  }
  return false;
}

namespace {

Vec embedding_row(const ParamSet& params, const TreeNode& n) {
  if (n.token_id < 0 || n.token_id >= params.vocab_size()) {
    throw ShapeError("missing embedding row for token '" +
                     (n.token ? *n.token : std::string("?")) + "' (id " +
                     std::to_string(n.token_id) + ", vocab " +
                     std::to_string(params.vocab_size()) + ")");
  }
  const Mat& e = params.embedding();
  Vec h(e.cols());
  auto row = e.row(n.token_id);
  for (int j = 0; j < e.cols(); ++j) h[j] = row[static_cast<size_t>(j)];
  return h;
}

Vec leaf_cell(const Vec& h, LeafCellMode mode) {
  switch (mode) {
    case LeafCellMode::copy_h: return h;
    case LeafCellMode::zero: return Vec(h.len());
    case LeafCellMode::tanh_h: return tanh_vec(h);
  }
  return h;
}

}  // namespace

TreeStates tree_forward(const ParamSet& params, const Tree& t, LeafCellMode leaf_cell_mode) {
  const BlockWeights w = BlockWeights::bind(params);
  const Mat& w_s = params.classifier_w();
  const Vec& b_s = params.classifier_b();

  TreeStates states;
  states.leaf_cell_mode = leaf_cell_mode;
  states.nodes.resize(t.nodes.size());

  for (size_t id = 0; id < t.nodes.size(); ++id) {
    const TreeNode& n = t.nodes[id];
    NodeState& s = states.nodes[id];
    if (n.is_leaf()) {
      s.h = embedding_row(params, n);
      s.c = leaf_cell(s.h, leaf_cell_mode);
    } else {
      BlockInput in{states.nodes[static_cast<size_t>(n.left)].h,
                    states.nodes[static_cast<size_t>(n.right)].h,
                    states.nodes[static_cast<size_t>(n.left)].c,
                    states.nodes[static_cast<size_t>(n.right)].c};
      s.act = block_forward(w, in);
      s.h = s.act.h;
      s.c = s.act.c;
    }
    Vec logits = matvec(w_s, s.h);
    add_inplace(logits, b_s);
    s.probs = softmax(logits);
  }
  return states;
}

LossReport tree_loss(const TreeStates& states, const Tree& t, LabelMask mask,
                     const ParamSet& params, double lambda) {
  LossReport r;
  for (int32_t id = 0; id < static_cast<int32_t>(t.nodes.size()); ++id) {
    if (!node_supervised(t, id, mask)) continue;
    const int gold = *t.nodes[static_cast<size_t>(id)].label;
    const double p = std::max(states.probs(id)[gold], 1e-12);
    r.data_loss += -std::log(p);
    ++r.num_supervised_nodes;
  }
  r.total_loss = r.data_loss + lambda * params.tensors().squared_norm();
  return r;
}

void accumulate_l2_grad(GradSet& grads, const ParamSet& params, double coeff) {
  if (coeff != 0.0) grads.tensors().add_scaled(params.tensors(), coeff);
}

void tree_backward(const ParamSet& params, const Tree& t, const TreeStates& states,
                   LabelMask mask, GradSet& grads, double lambda) {
  const BlockWeights w = BlockWeights::bind(params);
  const Mat& w_s = params.classifier_w();
  Mat& g_w_s = grads.mat("W_s");
  Vec& g_b_s = grads.vec("b_s");
  Mat& g_embed = grads.mat("embed");
  const int d = params.hidden_dim();

  const size_t n = t.nodes.size();
  std::vector<Vec> inherited_eps_h(n);       // error from the parent block
  std::vector<ParentFeedback> feedback(n);   // cell-path feedback from the parent

  // top-down: ids are topological (children before parents), so walk backwards
  for (size_t idx = n; idx-- > 0;) {
    const int32_t id = static_cast<int32_t>(idx);
    const TreeNode& node = t.nodes[idx];
    const NodeState& s = states.nodes[idx];

    Vec eps_h = inherited_eps_h[idx].len() == d ? std::move(inherited_eps_h[idx]) : Vec(d);
    if (node_supervised(t, id, mask)) {
      // softmax cross-entropy residual, pushed through the shared classifier
      Vec dz = s.probs;
      dz[*node.label] -= 1.0;
      outer_add(g_w_s, dz, s.h);
      add_inplace(g_b_s, dz);
      matvec_transpose_add(w_s, dz, eps_h);
    }

    const ParentFeedback& fb =
        feedback[idx].eps_c.len() == d ? feedback[idx] : ParentFeedback::root(d);

    if (node.is_leaf()) {
      Vec row_grad = std::move(eps_h);
      const Vec eps_c = transported_cell_error(w, fb, d);
      switch (states.leaf_cell_mode) {
        case LeafCellMode::copy_h:
          add_inplace(row_grad, eps_c);
          break;
        case LeafCellMode::zero:
          break;
        case LeafCellMode::tanh_h:
          // c = tanh(h): chain through 1 - c^2
          add_inplace(row_grad, hadamard(eps_c, tanh_deriv_from_act(s.c)));
          break;
      }
      auto grow = g_embed.row(node.token_id);
      for (int j = 0; j < d; ++j) grow[static_cast<size_t>(j)] += row_grad[j];
    } else {
      BlockInput in{states.hidden(node.left), states.hidden(node.right),
                    states.cell(node.left), states.cell(node.right)};
      BlockErrors e = block_backward(w, in, s.act, eps_h, fb, grads);

      inherited_eps_h[static_cast<size_t>(node.left)] = std::move(e.child_eps_h_left);
      inherited_eps_h[static_cast<size_t>(node.right)] = std::move(e.child_eps_h_right);
      feedback[static_cast<size_t>(node.left)] =
          ParentFeedback{e.eps_c, s.act.f_left, e.d_i, e.d_fl, e.d_fr, ChildSide::left};
      feedback[static_cast<size_t>(node.right)] =
          ParentFeedback{std::move(e.eps_c), s.act.f_right, std::move(e.d_i),
                         std::move(e.d_fl), std::move(e.d_fr), ChildSide::right};
    }
  }

  accumulate_l2_grad(grads, params, 2.0 * lambda);
}

int argmax_class(const Vec& probs) {
  int best = 0;
  for (int i = 1; i < probs.len(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

std::vector<std::pair<int32_t, int>> predict_node_classes(const TreeStates& states) {
  std::vector<std::pair<int32_t, int>> out;
  out.reserve(states.nodes.size());
  for (size_t id = 0; id < states.nodes.size(); ++id) {
    out.emplace_back(static_cast<int32_t>(id), argmax_class(states.nodes[id].probs));
  }
  return out;
}

}  // namespace slstm
