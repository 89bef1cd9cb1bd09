#include "slstm/eval.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "parallel.hpp"

namespace slstm {

namespace {
void merge_into(Metrics& into, const Metrics& from) {
  into.roots.correct += from.roots.correct;
  into.roots.total += from.roots.total;
  into.phrases.correct += from.phrases.correct;
  into.phrases.total += from.phrases.total;
  for (const auto& [k, v] : from.by_depth) {
    into.by_depth[k].correct += v.correct;
    into.by_depth[k].total += v.total;
  }
  for (const auto& [k, v] : from.by_length) {
    into.by_length[k].correct += v.correct;
    into.by_length[k].total += v.total;
  }
  into.n_trees += from.n_trees;
}
}  // namespace

Metrics evaluate(const ParamSet& params, const Corpus& corpus, EvalScope scope,
                 LeafCellMode leaf_cell_mode, int threads) {
  std::vector<Metrics> partial(static_cast<size_t>(std::max(1, threads)));
  for_each_block(corpus.num_trees(), threads, [&](int w, long begin, long end) {
    Metrics& m = partial[static_cast<size_t>(w)];
    for (long ti = begin; ti < end; ++ti) {
      const Tree& t = corpus.trees[static_cast<size_t>(ti)];
      const TreeStates states = tree_forward(params, t, leaf_cell_mode);
      ++m.n_trees;
      for (const NodeStratum& ns : stratify(t)) {
        const TreeNode& node = t.nodes[static_cast<size_t>(ns.node_id)];
        if (!node.label) continue;
        const bool is_root = ns.node_id == t.root_id;
        if (scope == EvalScope::roots && !is_root) continue;
        const bool correct = argmax_class(states.probs(ns.node_id)) == *node.label;
        m.phrases.total += 1;
        m.phrases.correct += correct;
        auto& db = m.by_depth[ns.depth_bucket];
        db.total += 1;
        db.correct += correct;
        auto& lb = m.by_length[ns.length_bucket];
        lb.total += 1;
        lb.correct += correct;
        if (is_root) {
          m.roots.total += 1;
          m.roots.correct += correct;
        }
      }
    }
  });

  Metrics total;
  for (const Metrics& m : partial) merge_into(total, m);
  return total;
}

namespace {
std::string bucket_csv(const char* key, const std::map<int, BucketCount>& buckets) {
  std::ostringstream out;
  out << key << ",correct,total,accuracy\n";
  for (const auto& [k, v] : buckets) {
    out << k << ',' << v.correct << ',' << v.total << ',' << v.accuracy() << '\n';
  }
  return out.str();
}
}  // namespace

std::string depth_csv(const Metrics& m) { return bucket_csv("depth", m.by_depth); }
std::string length_csv(const Metrics& m) { return bucket_csv("length", m.by_length); }

std::string summary_json(const Metrics& m) {
  nlohmann::json j;
  j["root_acc"] = m.root_acc();
  j["phrase_acc"] = m.phrase_acc();
  j["n_trees"] = m.n_trees;
  j["n_nodes"] = m.phrases.total;
  return j.dump(2);
}

void emit_report(const Metrics& m, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&dir](const char* name, const std::string& body) {
    const std::string path = dir + "/" + name;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report: " + path);
    out << body;
  };
  write("report_depth.csv", depth_csv(m));
  write("report_length.csv", length_csv(m));
  write("report_summary.json", summary_json(m) + "\n");
}

}  // namespace slstm
