#include "slstm/treebank.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace slstm {

void Tree::validate() const {
  if (nodes.empty() || root_id != static_cast<int32_t>(nodes.size()) - 1) {
    throw ParseError("tree: root must be the last node", 0);
  }
  std::vector<int> parent_count(nodes.size(), 0);
  for (size_t i = 0; i < nodes.size(); ++i) {
    const TreeNode& n = nodes[i];
    const bool has_left = n.left != kNoNode;
    const bool has_right = n.right != kNoNode;
    if (has_left != has_right) {
      throw ParseError("tree: node with exactly one child", 0);
    }
    if (n.is_leaf()) {
      if (!n.token || n.token->empty()) throw ParseError("tree: leaf without token", 0);
      if (n.depth != 0 || n.span_length != 1) {
        throw ParseError("tree: bad leaf depth/span bookkeeping", 0);
      }
    } else {
      if (n.token) throw ParseError("tree: internal node with token", 0);
      // child-before-parent id order is what makes a single pass topological
      if (n.left >= static_cast<int32_t>(i) || n.right >= static_cast<int32_t>(i)) {
        throw ParseError("tree: child id not smaller than parent id", 0);
      }
      const TreeNode& l = nodes[static_cast<size_t>(n.left)];
      const TreeNode& r = nodes[static_cast<size_t>(n.right)];
      ++parent_count[static_cast<size_t>(n.left)];
      ++parent_count[static_cast<size_t>(n.right)];
      if (n.depth != 1 + std::max(l.depth, r.depth)) {
        throw ParseError("tree: bad depth bookkeeping", 0);
      }
      if (n.span_length != l.span_length + r.span_length) {
        throw ParseError("tree: bad span bookkeeping", 0);
      }
    }
  }
  for (size_t i = 0; i < nodes.size(); ++i) {
    const int expected = (static_cast<int32_t>(i) == root_id) ? 0 : 1;
    if (parent_count[i] != expected) {
      throw ParseError("tree: node with wrong parent count", 0);
    }
  }
}

Vocab::Vocab() { add(kUnkToken); }

int32_t Vocab::add(std::string_view word) {
  auto it = ids_.find(std::string(word));
  if (it != ids_.end()) return it->second;
  const int32_t id = static_cast<int32_t>(words_.size());
  words_.emplace_back(word);
  ids_.emplace(words_.back(), id);
  return id;
}

int32_t Vocab::lookup(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view word) const {
  return ids_.find(std::string(word)) != ids_.end();
}

long Corpus::total_nodes() const {
  long n = 0;
  for (const Tree& t : trees) n += t.num_nodes();
  return n;
}

long Corpus::labeled_nodes() const {
  long n = 0;
  for (const Tree& t : trees) {
    for (const TreeNode& node : t.nodes) {
      if (node.label) ++n;
    }
  }
  return n;
}

namespace {

struct SexprParser {
  std::string_view text;
  size_t pos = 0;
  std::vector<TreeNode>* nodes;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos); }

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }

  char peek() const { return pos < text.size() ? text[pos] : '\0'; }

  void expect(char c, const char* what) {
    if (peek() != c) fail(std::string("expected ") + what);
    ++pos;
  }

  int parse_label() {
    skip_ws();
    const size_t start = pos;
    if (peek() == '-' || peek() == '+') ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    int value = 0;
    auto [ptr, ec] =
        std::from_chars(text.data() + start, text.data() + pos, value);
    if (ec != std::errc() || ptr != text.data() + pos || pos == start) {
      pos = start;
      fail("non-integer label");
    }
    if (pos < text.size() && text[pos] != ' ' && text[pos] != '\t' &&
        text[pos] != '(' && text[pos] != ')') {
      pos = start;
      fail("non-integer label");
    }
    return value;
  }

  // Returns the id of the parsed subtree; children are emitted first, so node
  // ids come out in forward (post-order) topological order.
  int32_t parse_tree() {
    skip_ws();
    expect('(', "'('");
    const int label = parse_label();
    skip_ws();

    TreeNode node;
    node.label = (label == -1) ? std::nullopt : std::optional<int>(label);
    if (label < -1) fail("negative label (only -1 means absent)");

    if (peek() == '(') {
      node.left = parse_tree();
      skip_ws();
      if (peek() != '(') fail("internal node needs exactly two children");
      node.right = parse_tree();
      skip_ws();
      if (peek() == '(') fail("internal node with more than two children");
      expect(')', "')'");
      const TreeNode& l = (*nodes)[static_cast<size_t>(node.left)];
      const TreeNode& r = (*nodes)[static_cast<size_t>(node.right)];
      node.depth = 1 + std::max(l.depth, r.depth);
      node.span_length = l.span_length + r.span_length;
    } else {
      // leaf: token is everything up to the closing parenthesis, trimmed
      const size_t start = pos;
      while (pos < text.size() && text[pos] != ')' && text[pos] != '(') ++pos;
      if (peek() == '(') fail("leaf token may not contain '('");
      if (pos >= text.size()) fail("unbalanced parentheses");
      size_t end = pos;
      while (end > start && (text[end - 1] == ' ' || text[end - 1] == '\t')) --end;
      if (end == start) {
        pos = start;
        fail("empty token");
      }
      node.token = std::string(text.substr(start, end - start));
      node.depth = 0;
      node.span_length = 1;
      expect(')', "')'");
    }

    nodes->push_back(std::move(node));
    return static_cast<int32_t>(nodes->size()) - 1;
  }
};

}  // namespace

Tree parse_sexpr(std::string_view text) {
  Tree t;
  SexprParser p{text, 0, &t.nodes};
  t.root_id = p.parse_tree();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing characters after tree");
  t.validate();
  return t;
}

namespace {
void serialize_node(const Tree& t, int32_t id, std::string& out) {
  const TreeNode& n = t.nodes[static_cast<size_t>(id)];
  out += '(';
  out += std::to_string(n.label ? *n.label : -1);
  out += ' ';
  if (n.is_leaf()) {
    out += *n.token;
  } else {
    serialize_node(t, n.left, out);
    out += ' ';
    serialize_node(t, n.right, out);
  }
  out += ')';
}
}  // namespace

std::string serialize(const Tree& t) {
  std::string out;
  serialize_node(t, t.root_id, out);
  return out;
}

Tree restructure_chain(const Tree& t, ChainDirection direction) {
  // Collect leaves in sentence order.
  std::vector<TreeNode> leaves;
  {
    std::vector<int32_t> stack = {t.root_id};
    while (!stack.empty()) {
      const int32_t id = stack.back();
      stack.pop_back();
      const TreeNode& n = t.nodes[static_cast<size_t>(id)];
      if (n.is_leaf()) {
        TreeNode leaf = n;
        leaf.left = leaf.right = kNoNode;
        leaf.depth = 0;
        leaf.span_length = 1;
        leaves.push_back(std::move(leaf));
      } else {
        stack.push_back(n.right);  // left popped first
        stack.push_back(n.left);
      }
    }
  }

  const std::optional<int> root_label = t.root().label;
  Tree out;
  if (leaves.size() == 1) {
    out.nodes.push_back(leaves[0]);
    out.root_id = 0;
    out.validate();
    return out;
  }

  auto make_internal = [&out](int32_t left, int32_t right) -> int32_t {
    TreeNode n;
    n.left = left;
    n.right = right;
    const TreeNode& l = out.nodes[static_cast<size_t>(left)];
    const TreeNode& r = out.nodes[static_cast<size_t>(right)];
    n.depth = 1 + std::max(l.depth, r.depth);
    n.span_length = l.span_length + r.span_length;
    out.nodes.push_back(std::move(n));
    return static_cast<int32_t>(out.nodes.size()) - 1;
  };

  int32_t acc;
  if (direction == ChainDirection::left) {
    out.nodes.push_back(leaves[0]);
    acc = 0;
    for (size_t k = 1; k < leaves.size(); ++k) {
      out.nodes.push_back(leaves[k]);
      acc = make_internal(acc, static_cast<int32_t>(out.nodes.size()) - 1);
    }
  } else {
    out.nodes.push_back(leaves.back());
    acc = 0;
    for (size_t k = leaves.size() - 1; k-- > 0;) {
      out.nodes.push_back(leaves[k]);
      acc = make_internal(static_cast<int32_t>(out.nodes.size()) - 1, acc);
    }
  }
  out.root_id = acc;
  out.nodes[static_cast<size_t>(acc)].label = root_label;
  out.validate();
  return out;
}

std::vector<NodeStratum> stratify(const Tree& t) {
  std::vector<NodeStratum> out;
  out.reserve(t.nodes.size());
  for (size_t i = 0; i < t.nodes.size(); ++i) {
    out.push_back({static_cast<int32_t>(i), t.nodes[i].depth, t.nodes[i].span_length});
  }
  return out;
}

void assign_token_ids(Tree& t, const Vocab& vocab) {
  for (TreeNode& n : t.nodes) {
    if (n.token) n.token_id = vocab.lookup(*n.token);
  }
}

namespace {
bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}
}  // namespace

Corpus load_corpus_stream(std::istream& in, int num_classes, const Vocab* reuse_vocab,
                          std::string split_name) {
  Corpus c;
  c.num_classes = num_classes;
  c.split_name = std::move(split_name);
  if (reuse_vocab) c.vocab = *reuse_vocab;
  const bool build_vocab = reuse_vocab == nullptr;

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    Tree t;
    try {
      t = parse_sexpr(line);
    } catch (const ParseError& e) {
      throw ParseError(c.split_name + " line " + std::to_string(line_no) + ": " + e.what() +
                           " (byte " + std::to_string(e.byte_offset) + ")",
                       e.byte_offset, line_no);
    }
    for (TreeNode& n : t.nodes) {
      if (n.label && (*n.label < 0 || *n.label >= num_classes)) {
        throw ParseError(c.split_name + " line " + std::to_string(line_no) + ": label " +
                             std::to_string(*n.label) + " out of range [0, " +
                             std::to_string(num_classes) + ")",
                         0, line_no);
      }
      if (n.token) {
        n.token_id = build_vocab ? c.vocab.add(*n.token) : c.vocab.lookup(*n.token);
      }
    }
    c.trees.push_back(std::move(t));
  }
  return c;
}

Corpus load_corpus(const std::string& path, int num_classes, const Vocab* reuse_vocab,
                   std::string split_name) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open treebank file: " + path);
  if (split_name.empty()) split_name = path;
  return load_corpus_stream(in, num_classes, reuse_vocab, std::move(split_name));
}

CorpusStats corpus_stats(const Corpus& c) {
  CorpusStats s;
  s.split = c.split_name;
  s.trees = c.num_trees();
  std::set<int> labels;
  for (const Tree& t : c.trees) {
    s.nodes += t.num_nodes();
    s.leaves += t.num_leaves();
    s.max_depth = std::max(s.max_depth, static_cast<int>(t.root().depth));
    for (const TreeNode& n : t.nodes) {
      if (n.label) labels.insert(*n.label);
    }
  }
  s.distinct_labels = static_cast<int>(labels.size());
  return s;
}

std::string stats_csv(const CorpusStats& s) {
  std::ostringstream out;
  out << "split,nodes,leaves,max_depth,classes\n";
  out << s.split << ',' << s.nodes << ',' << s.leaves << ',' << s.max_depth << ','
      << s.distinct_labels << '\n';
  return out.str();
}

}  // namespace slstm
