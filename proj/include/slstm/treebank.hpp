#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "slstm/errors.hpp"

namespace slstm {

constexpr int32_t kNoNode = -1;

// One node of a labeled binary tree. Leaves carry a token (and, once a corpus
// assigns it, a vocab id); internal nodes carry exactly two children.
// Unlabeled nodes (label == nullopt) exist in restructured chains and are
// excluded from loss and accuracy. A label of -1 in the text format means
// "absent".
struct TreeNode {
  std::optional<int> label;
  std::optional<std::string> token;
  int32_t token_id = kNoNode;  // set by the corpus loader
  int32_t left = kNoNode;
  int32_t right = kNoNode;
  int32_t depth = 0;        // 0 at leaves, 1 + max(child depths) above
  int32_t span_length = 1;  // words covered

  bool is_leaf() const { return left == kNoNode; }
};

// Arena-backed binary tree. Nodes are stored so that children precede their
// parents (forward-pass order); the root is always the last node.
struct Tree {
  std::vector<TreeNode> nodes;
  int32_t root_id = kNoNode;

  const TreeNode& root() const { return nodes[static_cast<size_t>(root_id)]; }
  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_leaves() const { return root().span_length; }

  // Checks the structural invariants (binary, acyclic, child-before-parent
  // ids, depth/span bookkeeping). Throws ParseError on violation.
  void validate() const;
};

// Word <-> dense id map. Id 0 is reserved for unknown words.
class Vocab {
 public:
  static constexpr int32_t kUnkId = 0;
  static constexpr const char* kUnkToken = "<unk>";

  Vocab();
  // Returns the existing id or inserts a new one.
  int32_t add(std::string_view word);
  // Returns kUnkId for unseen words.
  int32_t lookup(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& word(int32_t id) const { return words_[static_cast<size_t>(id)]; }
  int32_t size() const { return static_cast<int32_t>(words_.size()); }

  bool operator==(const Vocab&) const = default;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int32_t> ids_;
};

struct Corpus {
  std::vector<Tree> trees;
  Vocab vocab;
  int num_classes = 5;
  std::string split_name;

  int num_trees() const { return static_cast<int>(trees.size()); }
  // Total node count across all trees.
  long total_nodes() const;
  // Nodes carrying a label (the units of phrase-level accuracy).
  long labeled_nodes() const;
};

// Parses one s-expression of the form "(label child child)" or
// "(label token)". Labels are integers; -1 encodes an absent label.
// Throws ParseError (with byte offset) on malformed input.
Tree parse_sexpr(std::string_view text);

// Canonical single-line form; parse_sexpr(serialize(t)) reproduces t.
std::string serialize(const Tree& t);

enum class ChainDirection { left, right };

// Rebuilds the tree as a degenerate chain over the same leaf sequence.
// direction=left combines words left to right (left-branching shape);
// direction=right combines right to left (right-branching). The root keeps
// the original root label, leaves keep theirs, and every other internal node
// is unlabeled because the chain's phrases no longer match the original
// tree's.
Tree restructure_chain(const Tree& t, ChainDirection direction);

// One (node, depth, span_length) record per node, for accuracy bucketing.
struct NodeStratum {
  int32_t node_id;
  int32_t depth_bucket;
  int32_t length_bucket;
};
std::vector<NodeStratum> stratify(const Tree& t);

// Loads a one-s-expression-per-line file. When reuse_vocab is null the vocab
// is built from the file in first-token-occurrence order; otherwise unseen
// tokens map to the UNK id. Labels must lie in [-1, num_classes).
Corpus load_corpus(const std::string& path, int num_classes,
                   const Vocab* reuse_vocab = nullptr, std::string split_name = "");

// Same, reading from an already-open stream (tests, pipes).
Corpus load_corpus_stream(std::istream& in, int num_classes,
                          const Vocab* reuse_vocab = nullptr, std::string split_name = "");

// Re-resolves every leaf's token id against the given vocab (UNK fallback).
void assign_token_ids(Tree& t, const Vocab& vocab);

struct CorpusStats {
  std::string split;
  long trees = 0;
  long nodes = 0;
  long leaves = 0;
  int max_depth = 0;
  int distinct_labels = 0;
};
CorpusStats corpus_stats(const Corpus& c);
// CSV with header "split,nodes,leaves,max_depth,classes".
std::string stats_csv(const CorpusStats& s);

}  // namespace slstm
