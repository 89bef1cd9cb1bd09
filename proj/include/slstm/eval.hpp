#pragma once

#include <map>
#include <string>

#include "slstm/network.hpp"
#include "slstm/params.hpp"
#include "slstm/treebank.hpp"

namespace slstm {

enum class EvalScope { roots, all_nodes };

struct BucketCount {
  long correct = 0;
  long total = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

// Accuracy aggregates: sentence-level (roots), phrase-level (every labeled
// node in scope), and per-depth / per-length buckets of the latter.
struct Metrics {
  BucketCount roots;
  BucketCount phrases;
  std::map<int, BucketCount> by_depth;
  std::map<int, BucketCount> by_length;
  long n_trees = 0;

  double root_acc() const { return roots.accuracy(); }
  double phrase_acc() const { return phrases.accuracy(); }
};

// Runs the forward pass over every tree and scores argmax predictions against
// gold labels at the nodes the scope admits. Read-only on params and corpus.
Metrics evaluate(const ParamSet& params, const Corpus& corpus, EvalScope scope,
                 LeafCellMode leaf_cell_mode = LeafCellMode::copy_h, int threads = 1);

// Writes report_depth.csv, report_length.csv and report_summary.json into dir.
void emit_report(const Metrics& m, const std::string& dir);

std::string depth_csv(const Metrics& m);
std::string length_csv(const Metrics& m);
std::string summary_json(const Metrics& m);

}  // namespace slstm
