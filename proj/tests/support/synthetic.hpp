#pragma once

// Synthetic treebank with deterministic, structure-dependent labels, used by
// the training and acceptance tests when no real treebank is on disk.
//
// Labeling rule: leaf "w<k>" gets label k mod classes; an internal node takes
// the label of its deeper child (left on ties). The root label is therefore a
// function of the tree's shape, which a chain-restructured model cannot see:
// exactly the regime the structure-ablation experiment probes.

#include <string>
#include <vector>

#include "slstm/linalg.hpp"
#include "slstm/treebank.hpp"

namespace synth {

inline int32_t build_node(slstm::Rng& rng, int depth_left, int classes, int vocab_words,
                          double split_p, std::vector<slstm::TreeNode>& nodes) {
  const bool split = depth_left > 0 && rng.next_double() < split_p;
  slstm::TreeNode n;
  if (split) {
    n.left = build_node(rng, depth_left - 1, classes, vocab_words, split_p, nodes);
    n.right = build_node(rng, depth_left - 1, classes, vocab_words, split_p, nodes);
    const slstm::TreeNode& l = nodes[static_cast<size_t>(n.left)];
    const slstm::TreeNode& r = nodes[static_cast<size_t>(n.right)];
    n.depth = 1 + std::max(l.depth, r.depth);
    n.span_length = l.span_length + r.span_length;
    n.label = (l.depth >= r.depth) ? l.label : r.label;
  } else {
    const int w = rng.below(vocab_words);
    n.token = "w" + std::to_string(w);
    n.label = w % classes;
    n.depth = 0;
    n.span_length = 1;
  }
  nodes.push_back(std::move(n));
  return static_cast<int32_t>(nodes.size()) - 1;
}

inline slstm::Tree tree(slstm::Rng& rng, int max_depth, int classes, int vocab_words,
                        double split_p = 0.8) {
  slstm::Tree t;
  t.root_id = build_node(rng, max_depth, classes, vocab_words, split_p, t.nodes);
  t.validate();
  return t;
}

inline slstm::Corpus corpus(int num_trees, uint64_t seed, int max_depth = 5,
                            int classes = 5, int vocab_words = 10, int min_leaves = 1,
                            double split_p = 0.8) {
  slstm::Corpus c;
  c.num_classes = classes;
  c.split_name = "synthetic";
  for (int w = 0; w < vocab_words; ++w) c.vocab.add("w" + std::to_string(w));
  slstm::Rng rng(seed);
  while (static_cast<int>(c.trees.size()) < num_trees) {
    slstm::Tree t = tree(rng, max_depth, classes, vocab_words, split_p);
    if (t.num_leaves() < min_leaves) continue;
    slstm::assign_token_ids(t, c.vocab);
    c.trees.push_back(std::move(t));
  }
  return c;
}

}  // namespace synth
