#include <doctest.h>

#include <json.hpp>

#include "slstm/eval.hpp"
#include "slstm/trainer.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace slstm;

namespace {
Corpus one_liner(const std::string& line, int classes = 5) {
  Corpus c;
  c.num_classes = classes;
  Tree t = parse_sexpr(line);
  for (TreeNode& n : t.nodes) {
    if (n.token) n.token_id = c.vocab.add(*n.token);
  }
  c.trees.push_back(std::move(t));
  return c;
}
}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("a correctly predicted root scores 1.0") {
  Corpus c = one_liner("(3 (2 good) (2 movie))");
  ParamSet p = make_param_skeleton(2, 2, c.vocab.size(), 5);
  p.vec("b_s")[3] = 10.0;  // every node predicts class 3
  const Metrics m = evaluate(p, c, EvalScope::roots);
  CHECK(m.roots.total == 1);
  CHECK(m.root_acc() == 1.0);
  CHECK(m.phrases.total == 1);  // scope=roots evaluates roots only
}

TEST_CASE("zero parameters score the empirical class-0 frequency") {
  const Corpus c = synth::corpus(30, 5);
  const ParamSet p = make_param_skeleton(3, 3, c.vocab.size(), 5);
  const Metrics m = evaluate(p, c, EvalScope::all_nodes);

  long class0 = 0, labeled = 0;
  for (const Tree& t : c.trees) {
    for (const TreeNode& n : t.nodes) {
      if (!n.label) continue;
      ++labeled;
      class0 += (*n.label == 0);
    }
  }
  CHECK(m.phrases.total == labeled);
  CHECK(m.phrases.correct == class0);
}

TEST_CASE("bucket totals add up to the node total") {
  const Corpus c = synth::corpus(25, 8);
  const ParamSet p = init_params(3, c.vocab.size(), 5, 4);
  const Metrics m = evaluate(p, c, EvalScope::all_nodes);

  long by_depth = 0, by_length = 0;
  for (const auto& [k, v] : m.by_depth) by_depth += v.total;
  for (const auto& [k, v] : m.by_length) by_length += v.total;
  CHECK(by_depth == m.phrases.total);
  CHECK(by_length == m.phrases.total);
  CHECK(m.roots.total == c.num_trees());  // all synthetic roots are labeled
}

TEST_CASE("repeated evaluation is identical") {
  const Corpus c = synth::corpus(10, 3);
  const ParamSet p = init_params(3, c.vocab.size(), 5, 6);
  const Metrics a = evaluate(p, c, EvalScope::all_nodes);
  const Metrics b = evaluate(p, c, EvalScope::all_nodes);
  CHECK(a.phrases.correct == b.phrases.correct);
  CHECK(a.roots.correct == b.roots.correct);

  const Metrics threaded = evaluate(p, c, EvalScope::all_nodes, LeafCellMode::copy_h, 2);
  CHECK(threaded.phrases.correct == a.phrases.correct);
  CHECK(threaded.roots.total == a.roots.total);
}

TEST_CASE("roots scope counts only labeled roots") {
  Corpus c = one_liner("(-1 (1 a) (2 b))");
  const ParamSet p = init_params(2, c.vocab.size(), 5, 3);
  const Metrics m = evaluate(p, c, EvalScope::roots);
  CHECK(m.roots.total == 0);
  CHECK(m.phrases.total == 0);
  CHECK(m.n_trees == 1);
}

TEST_CASE("unlabeled chain internals never enter the denominator") {
  Corpus c = one_liner("(3 (2 (1 a) (1 b)) (2 (1 c) (1 d)))");
  Tree chain = restructure_chain(c.trees[0], ChainDirection::left);
  assign_token_ids(chain, c.vocab);
  c.trees[0] = chain;
  const ParamSet p = init_params(2, c.vocab.size(), 5, 1);
  const Metrics m = evaluate(p, c, EvalScope::all_nodes);
  CHECK(m.phrases.total == 5);  // 4 leaves + labeled root; 2 bare internals skipped
}

TEST_CASE("csv and json report formats") {
  Metrics m;
  m.by_depth[0] = {5, 10};
  m.roots = {1, 2};
  m.phrases = {5, 10};
  m.n_trees = 2;

  std::istringstream depth(depth_csv(m));
  std::string header, row;
  std::getline(depth, header);
  std::getline(depth, row);
  CHECK(header == "depth,correct,total,accuracy");
  CHECK(row == "0,5,10,0.5");

  CHECK(length_csv(m) == "length,correct,total,accuracy\n");  // empty map: header only

  const auto j = nlohmann::json::parse(summary_json(m));
  CHECK(j.at("root_acc").get<double>() == 0.5);
  CHECK(j.at("phrase_acc").get<double>() == 0.5);
  CHECK(j.at("n_trees").get<int>() == 2);
  CHECK(j.at("n_nodes").get<int>() == 10);
}

TEST_CASE("emit_report writes the three files") {
  const Corpus c = synth::corpus(5, 2);
  const ParamSet p = init_params(2, c.vocab.size(), 5, 2);
  const Metrics m = evaluate(p, c, EvalScope::all_nodes);
  TempDir dir;
  emit_report(m, dir.file("reports"));
  CHECK(!TempDir::slurp(dir.file("reports/report_depth.csv")).empty());
  CHECK(!TempDir::slurp(dir.file("reports/report_length.csv")).empty());
  const auto j = nlohmann::json::parse(TempDir::slurp(dir.file("reports/report_summary.json")));
  CHECK(j.contains("root_acc"));
}

TEST_SUITE_END();
