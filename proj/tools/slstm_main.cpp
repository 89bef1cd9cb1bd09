// slstm: tree-structured LSTM sentiment classifier.
// Subcommands: train, eval, predict, gradcheck, data.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "slstm/eval.hpp"
#include "slstm/gradcheck.hpp"
#include "slstm/network.hpp"
#include "slstm/trainer.hpp"
#include "slstm/treebank.hpp"

namespace fs = std::filesystem;
using namespace slstm;

namespace {

struct RunConfig {
  std::string train_path, dev_path, test_path, data_path;
  std::string out_dir = ".";
  std::string checkpoint_path;
  std::string structure = "parse";  // parse | chain_lr | chain_rr
  std::string mask = "all";         // all | root | root_leaf
  std::string leaf_cell = "copy_h";
  std::string optimizer = "adagrad";
  std::string scope = "all";  // eval: all | roots
  std::string direction = "left";
  int classes = 5;
  TrainConfig train;
  // gradcheck knobs
  int gc_dim = 3;
  int gc_trees = 10;
  int gc_max_depth = 4;
  uint64_t gc_seed = 7;
  double gc_eps = 1e-4;
  double gc_tol = 1e-4;
  double gc_param_scale = 0.5;
  std::string gc_json_path;
};

void apply_structure(Corpus& c, const std::string& structure) {
  if (structure == "parse") return;
  const ChainDirection dir =
      structure == "chain_lr" ? ChainDirection::left : ChainDirection::right;
  for (Tree& t : c.trees) {
    t = restructure_chain(t, dir);
    assign_token_ids(t, c.vocab);
  }
}

TrainConfig finalize_train_config(RunConfig& rc) {
  rc.train.optimizer = parse_optimizer(rc.optimizer);
  rc.train.mask = parse_label_mask(rc.mask);
  rc.train.leaf_cell_mode = parse_leaf_cell_mode(rc.leaf_cell);
  return rc.train;
}

void echo_config(const RunConfig& rc, const TrainConfig& cfg) {
  fs::create_directories(rc.out_dir);
  nlohmann::json j = nlohmann::json::parse(cfg.to_json());
  j["structure"] = rc.structure;
  j["classes"] = rc.classes;
  j["train"] = rc.train_path;
  j["dev"] = rc.dev_path;
  if (!rc.test_path.empty()) j["test"] = rc.test_path;
  std::ofstream out(rc.out_dir + "/config.json");
  out << j.dump(2) << "\n";
}

int cmd_train(RunConfig& rc) {
  const TrainConfig cfg = finalize_train_config(rc);
  Corpus train_c = load_corpus(rc.train_path, rc.classes, nullptr, "train");
  Corpus dev_c = load_corpus(rc.dev_path, rc.classes, &train_c.vocab, "dev");
  apply_structure(train_c, rc.structure);
  apply_structure(dev_c, rc.structure);
  echo_config(rc, cfg);

  std::ofstream log_out(rc.out_dir + "/train_log.jsonl");
  std::cerr << "training on " << train_c.num_trees() << " trees (dev "
            << dev_c.num_trees() << "), vocab " << train_c.vocab.size() << "\n";
  TrainResult res = train(cfg, train_c, dev_c, nullptr, &log_out);

  Checkpoint ckpt{res.best_params, res.best_opt, train_c.vocab, cfg, res.best_epoch + 1};
  save_checkpoint(rc.out_dir + "/checkpoint.bin", ckpt);
  std::cerr << "best dev root acc " << res.best_dev_root_acc << " at epoch "
            << res.best_epoch << "; checkpoint written to " << rc.out_dir
            << "/checkpoint.bin\n";

  if (!rc.test_path.empty()) {
    Corpus test_c = load_corpus(rc.test_path, rc.classes, &train_c.vocab, "test");
    apply_structure(test_c, rc.structure);
    const Metrics m = evaluate(res.best_params, test_c, EvalScope::all_nodes,
                               cfg.leaf_cell_mode, cfg.threads);
    emit_report(m, rc.out_dir);
    std::cout << summary_json(m) << "\n";
  }
  return 0;
}

int cmd_eval(RunConfig& rc) {
  const Checkpoint ckpt = load_checkpoint(rc.checkpoint_path);
  Corpus data =
      load_corpus(rc.data_path, ckpt.params.num_classes(), &ckpt.vocab, "eval");
  apply_structure(data, rc.structure);
  const EvalScope scope = rc.scope == "roots" ? EvalScope::roots : EvalScope::all_nodes;
  const Metrics m = evaluate(ckpt.params, data, scope, ckpt.config.leaf_cell_mode,
                             rc.train.threads);
  emit_report(m, rc.out_dir);
  std::cout << summary_json(m) << "\n";
  return 0;
}

int cmd_predict(RunConfig& rc) {
  const Checkpoint ckpt = load_checkpoint(rc.checkpoint_path);
  Corpus data =
      load_corpus(rc.data_path, ckpt.params.num_classes(), &ckpt.vocab, "predict");
  apply_structure(data, rc.structure);
  fs::create_directories(fs::path(rc.out_dir));
  const std::string path = rc.out_dir + "/predictions.csv";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "tree_id,node_id,depth,length,gold,pred\n";
  for (size_t ti = 0; ti < data.trees.size(); ++ti) {
    const Tree& t = data.trees[ti];
    const TreeStates states = tree_forward(ckpt.params, t, ckpt.config.leaf_cell_mode);
    for (const auto& [node_id, pred] : predict_node_classes(states)) {
      const TreeNode& n = t.nodes[static_cast<size_t>(node_id)];
      out << ti << ',' << node_id << ',' << n.depth << ',' << n.span_length << ','
          << (n.label ? *n.label : -1) << ',' << pred << '\n';
    }
  }
  std::cerr << "predictions written to " << path << "\n";
  return 0;
}

int cmd_gradcheck(RunConfig& rc) {
  const Corpus corpus = random_corpus(rc.gc_trees, rc.gc_seed, rc.gc_max_depth, rc.classes);
  // check at a generic point in parameter space, not the near-zero init
  const ParamSet params = random_params(rc.gc_dim, corpus.vocab.size(), rc.classes,
                                        rc.gc_seed, rc.gc_param_scale);
  const GradCheckReport report =
      check(params, corpus.trees, parse_label_mask(rc.mask), rc.train.lambda, rc.gc_eps,
            rc.gc_tol, parse_leaf_cell_mode(rc.leaf_cell));
  std::cout << report.table();
  if (!rc.gc_json_path.empty()) {
    std::ofstream out(rc.gc_json_path);
    out << report.to_json() << "\n";
  }
  return report.pass ? 0 : 1;
}

int cmd_data_stats(RunConfig& rc) {
  const Corpus c = load_corpus(rc.data_path, rc.classes, nullptr,
                               fs::path(rc.data_path).stem().string());
  const CorpusStats s = corpus_stats(c);
  std::cout << stats_csv(s);
  std::cerr << s.split << ": " << s.trees << " trees, " << s.nodes << " nodes, "
            << s.leaves << " leaves\n";
  return 0;
}

int cmd_data_validate(RunConfig& rc) {
  const Corpus c = load_corpus(rc.data_path, rc.classes);
  for (const Tree& t : c.trees) t.validate();
  std::cerr << "ok: " << c.num_trees() << " trees\n";
  return 0;
}

int cmd_data_restructure(RunConfig& rc) {
  const Corpus c = load_corpus(rc.data_path, rc.classes);
  const ChainDirection dir =
      rc.direction == "left" ? ChainDirection::left : ChainDirection::right;
  std::ofstream out(rc.out_dir);
  if (!out) throw IoError("cannot write " + rc.out_dir);
  for (const Tree& t : c.trees) out << serialize(restructure_chain(t, dir)) << "\n";
  std::cerr << "restructured " << c.num_trees() << " trees -> " << rc.out_dir << "\n";
  return 0;
}

void add_train_flags(CLI::App* app, RunConfig& rc) {
  app->add_option("--hidden", rc.train.hidden_dim, "hidden units per memory block")
      ->capture_default_str();
  app->add_option("--batch", rc.train.batch_size, "minibatch size")->capture_default_str();
  app->add_option("--lr", rc.train.learning_rate, "learning rate")->capture_default_str();
  app->add_option("--lambda", rc.train.lambda, "L2 regularization strength")
      ->capture_default_str();
  app->add_option("--epochs", rc.train.max_epochs, "maximum epochs")->capture_default_str();
  app->add_option("--seed", rc.train.seed, "RNG seed")->capture_default_str();
  app->add_option("--optimizer", rc.optimizer, "sgd|adagrad")->capture_default_str();
  app->add_option("--patience", rc.train.patience, "early-stopping patience (0 = off)")
      ->capture_default_str();
  app->add_option("--clip", rc.train.clip_norm, "gradient clip norm (0 = off)")
      ->capture_default_str();
  app->add_option("--leaf-cell", rc.leaf_cell, "leaf cell mode: copy_h|zero|tanh_h")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tree-structured LSTM for treebank sentiment classification"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI/TOML file");
  app.failure_message(CLI::FailureMessage::help);

  RunConfig rc;

  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--train", rc.train_path, "training treebank")->required();
  train_cmd->add_option("--dev", rc.dev_path, "development treebank")->required();
  train_cmd->add_option("--test", rc.test_path, "optional test treebank");
  train_cmd->add_option("--out", rc.out_dir, "output directory")->required();
  train_cmd->add_option("--mask", rc.mask, "supervision: all|root|root_leaf")
      ->capture_default_str();
  train_cmd->add_option("--structure", rc.structure, "parse|chain_lr|chain_rr")
      ->capture_default_str();
  train_cmd->add_option("--classes", rc.classes, "number of classes")->capture_default_str();
  train_cmd->add_option("--threads", rc.train.threads, "worker threads")
      ->capture_default_str();
  add_train_flags(train_cmd, rc);

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", rc.checkpoint_path, "checkpoint file")->required();
  eval_cmd->add_option("--data", rc.data_path, "treebank to evaluate")->required();
  eval_cmd->add_option("--out", rc.out_dir, "report directory")->required();
  eval_cmd->add_option("--scope", rc.scope, "all|roots")->capture_default_str();
  eval_cmd->add_option("--structure", rc.structure, "parse|chain_lr|chain_rr")
      ->capture_default_str();
  eval_cmd->add_option("--threads", rc.train.threads, "worker threads")
      ->capture_default_str();

  CLI::App* predict_cmd = app.add_subcommand("predict", "per-node predictions CSV");
  predict_cmd->add_option("--checkpoint", rc.checkpoint_path, "checkpoint file")->required();
  predict_cmd->add_option("--data", rc.data_path, "treebank to predict on")->required();
  predict_cmd->add_option("--out", rc.out_dir, "output directory")->required();
  predict_cmd->add_option("--structure", rc.structure, "parse|chain_lr|chain_rr")
      ->capture_default_str();

  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gc_cmd->add_option("--dim", rc.gc_dim, "hidden dim")->capture_default_str();
  gc_cmd->add_option("--trees", rc.gc_trees, "number of random trees")->capture_default_str();
  gc_cmd->add_option("--max-depth", rc.gc_max_depth, "max tree depth")->capture_default_str();
  gc_cmd->add_option("--seed", rc.gc_seed, "RNG seed")->capture_default_str();
  gc_cmd->add_option("--mask", rc.mask, "all|root|root_leaf")->capture_default_str();
  gc_cmd->add_option("--leaf-cell", rc.leaf_cell, "copy_h|zero|tanh_h")
      ->capture_default_str();
  gc_cmd->add_option("--lambda", rc.train.lambda, "L2 strength")->capture_default_str();
  gc_cmd->add_option("--eps", rc.gc_eps, "finite-difference step")->capture_default_str();
  gc_cmd->add_option("--tol", rc.gc_tol, "max relative error")->capture_default_str();
  gc_cmd->add_option("--param-scale", rc.gc_param_scale, "uniform range of the random params")
      ->capture_default_str();
  gc_cmd->add_option("--classes", rc.classes, "number of classes")->capture_default_str();
  gc_cmd->add_option("--json", rc.gc_json_path, "also write the report as JSON");

  CLI::App* data_cmd = app.add_subcommand("data", "treebank utilities");
  data_cmd->require_subcommand(1);
  CLI::App* stats_cmd = data_cmd->add_subcommand("stats", "summarize a treebank file");
  stats_cmd->add_option("--in", rc.data_path, "treebank file")->required();
  stats_cmd->add_option("--classes", rc.classes, "number of classes")->capture_default_str();
  CLI::App* validate_cmd = data_cmd->add_subcommand("validate", "check tree invariants");
  validate_cmd->add_option("--in", rc.data_path, "treebank file")->required();
  validate_cmd->add_option("--classes", rc.classes, "number of classes")
      ->capture_default_str();
  CLI::App* restruct_cmd =
      data_cmd->add_subcommand("restructure", "rebuild trees as chains");
  restruct_cmd->add_option("--in", rc.data_path, "treebank file")->required();
  restruct_cmd->add_option("--out", rc.out_dir, "output file")->required();
  restruct_cmd->add_option("--direction", rc.direction, "left|right")
      ->capture_default_str();
  restruct_cmd->add_option("--classes", rc.classes, "number of classes")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(rc);
    if (eval_cmd->parsed()) return cmd_eval(rc);
    if (predict_cmd->parsed()) return cmd_predict(rc);
    if (gc_cmd->parsed()) return cmd_gradcheck(rc);
    if (data_cmd->parsed()) {
      if (stats_cmd->parsed()) return cmd_data_stats(rc);
      if (validate_cmd->parsed()) return cmd_data_validate(rc);
      if (restruct_cmd->parsed()) return cmd_data_restructure(rc);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
