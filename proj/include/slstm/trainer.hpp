#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "slstm/network.hpp"
#include "slstm/params.hpp"
#include "slstm/treebank.hpp"

namespace slstm {

enum class Optimizer { sgd, adagrad };
Optimizer parse_optimizer(const std::string& s);
std::string to_string(Optimizer o);

struct TrainConfig {
  int hidden_dim = 100;
  int batch_size = 10;
  double learning_rate = 0.1;
  double lambda = 1e-4;
  int max_epochs = 50;
  uint64_t seed = 1;
  Optimizer optimizer = Optimizer::adagrad;
  LabelMask mask = LabelMask::all_nodes;
  LeafCellMode leaf_cell_mode = LeafCellMode::copy_h;
  int patience = 10;       // epochs without dev improvement before stopping
  int threads = 1;
  double clip_norm = 0.0;  // 0 disables gradient clipping

  std::string to_json() const;
  static TrainConfig from_json(const std::string& json_text);
};

// Per-parameter squared-gradient accumulators for adagrad; empty for sgd.
struct OptimizerState {
  Optimizer kind = Optimizer::adagrad;
  TensorMap acc;
  double epsilon = 1e-8;

  static OptimizerState fresh(Optimizer kind, const ParamSet& params);
};

// One optimizer step. sgd: theta -= lr * g. adagrad: acc += g^2 first, then
// theta -= lr * g / sqrt(acc + eps).
void apply_update(ParamSet& params, const GradSet& grads, OptimizerState& opt, double lr);

struct EpochLog {
  int epoch = 0;
  double seconds = 0.0;
  double train_loss = 0.0;
  double dev_root_acc = 0.0;
  double dev_all_acc = 0.0;

  std::string to_json_line() const;
};

struct Checkpoint {
  ParamSet params;
  OptimizerState opt;
  Vocab vocab;
  TrainConfig config;
  int next_epoch = 0;
};

struct TrainResult {
  ParamSet best_params;     // dev-selected
  OptimizerState best_opt;
  int best_epoch = -1;
  double best_dev_root_acc = -1.0;
  ParamSet last_params;     // state after the final epoch (resume point)
  OptimizerState last_opt;
  int last_epoch = -1;
  std::vector<EpochLog> log;
};

// Minibatch training loop: seeded per-epoch shuffling, gradient averaging
// over the batch, batch-scaled L2 regularization, dev-based model selection
// and early stopping. Throws NumericError as soon as a non-finite loss or
// gradient shows up. When resume is given, continues from its parameters,
// optimizer state and epoch counter; the shuffle schedule stays seed+epoch,
// so an interrupted run continues exactly like an uninterrupted one.
TrainResult train(const TrainConfig& cfg, const Corpus& train_corpus, const Corpus& dev_corpus,
                  const Checkpoint* resume = nullptr, std::ostream* log_stream = nullptr);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace slstm
