#include "slstm/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "parallel.hpp"
#include "serial.hpp"
#include "slstm/eval.hpp"

namespace slstm {

Optimizer parse_optimizer(const std::string& s) {
  if (s == "sgd") return Optimizer::sgd;
  if (s == "adagrad") return Optimizer::adagrad;
  throw std::invalid_argument("unknown optimizer: " + s + " (want sgd|adagrad)");
}

std::string to_string(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "adagrad"; }

std::string TrainConfig::to_json() const {
  nlohmann::json j;
  j["hidden_dim"] = hidden_dim;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["lambda"] = lambda;
  j["max_epochs"] = max_epochs;
  j["seed"] = seed;
  j["optimizer"] = to_string(optimizer);
  j["mask"] = slstm::to_string(mask);
  j["leaf_cell_mode"] = slstm::to_string(leaf_cell_mode);
  j["patience"] = patience;
  j["threads"] = threads;
  j["clip_norm"] = clip_norm;
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  TrainConfig c;
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  c.mask = parse_label_mask(j.at("mask").get<std::string>());
  c.leaf_cell_mode = parse_leaf_cell_mode(j.at("leaf_cell_mode").get<std::string>());
  c.patience = j.at("patience").get<int>();
  c.threads = j.at("threads").get<int>();
  c.clip_norm = j.at("clip_norm").get<double>();
  return c;
}

OptimizerState OptimizerState::fresh(Optimizer kind, const ParamSet& params) {
  OptimizerState s;
  s.kind = kind;
  if (kind == Optimizer::adagrad) s.acc = TensorMap::zeros_like(params.tensors());
  return s;
}

void apply_update(ParamSet& params, const GradSet& grads, OptimizerState& opt, double lr) {
  TensorMap& theta = params.tensors();
  const TensorMap& g = grads.tensors();
  if (opt.kind == Optimizer::sgd) {
    theta.add_scaled(g, -lr);
    return;
  }
  for (size_t i = 0; i < theta.size(); ++i) {
    auto tv = theta.flat(i);
    auto gv = g.flat(i);
    auto av = opt.acc.flat(i);
    for (size_t k = 0; k < tv.size(); ++k) {
      av[k] += gv[k] * gv[k];
      tv[k] -= lr * gv[k] / std::sqrt(av[k] + opt.epsilon);
    }
  }
}

std::string EpochLog::to_json_line() const {
  nlohmann::json j;
  j["epoch"] = epoch;
  j["seconds"] = seconds;
  j["train_loss"] = train_loss;
  j["dev_root_acc"] = dev_root_acc;
  j["dev_all_acc"] = dev_all_acc;
  return j.dump();
}

namespace {

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (size_t i = idx.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.below(static_cast<int>(i)));
    std::swap(idx[i - 1], idx[j]);
  }
}

double grad_norm(const GradSet& grads) { return std::sqrt(grads.tensors().squared_norm()); }

}  // namespace

TrainResult train(const TrainConfig& cfg, const Corpus& train_corpus, const Corpus& dev_corpus,
                  const Checkpoint* resume, std::ostream* log_stream) {
  if (train_corpus.trees.empty()) throw std::invalid_argument("train corpus is empty");
  if (dev_corpus.trees.empty()) throw std::invalid_argument("dev corpus is empty");
  if (train_corpus.num_classes != dev_corpus.num_classes) {
    throw std::invalid_argument("train/dev class count mismatch");
  }

  ParamSet params;
  OptimizerState opt;
  int start_epoch = 0;
  if (resume) {
    params = resume->params;
    opt = resume->opt;
    start_epoch = resume->next_epoch;
    if (params.vocab_size() != train_corpus.vocab.size()) {
      throw ShapeError("checkpoint vocab size " + std::to_string(params.vocab_size()) +
                       " does not match corpus vocab " +
                       std::to_string(train_corpus.vocab.size()));
    }
  } else {
    params = init_params(cfg.hidden_dim, train_corpus.vocab.size(),
                         train_corpus.num_classes, cfg.seed);
    opt = OptimizerState::fresh(cfg.optimizer, params);
  }

  const long n_train = train_corpus.num_trees();
  const int n_workers = std::max(1, cfg.threads);

  TrainResult result;
  result.best_dev_root_acc = -1.0;
  // sensible snapshots even when no epoch runs (max_epochs <= resume epoch)
  result.best_params = params;
  result.best_opt = opt;
  result.last_params = params;
  result.last_opt = opt;
  result.last_epoch = start_epoch - 1;

  GradSet grads(params);
  std::vector<GradSet> worker_grads;
  for (int w = 0; w < n_workers; ++w) worker_grads.emplace_back(params);
  std::vector<double> worker_loss(static_cast<size_t>(n_workers), 0.0);

  std::vector<int> order(static_cast<size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);

  int epochs_since_improve = 0;
  for (int epoch = start_epoch; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    // the permutation is a pure function of seed+epoch so resumed runs see
    // exactly the schedule an uninterrupted run would
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(cfg.seed + static_cast<uint64_t>(epoch));
    shuffle_indices(order, shuffle_rng);

    double epoch_data_loss = 0.0;
    int batch_index = 0;
    for (long start = 0; start < n_train; start += cfg.batch_size, ++batch_index) {
      const long end = std::min<long>(n_train, start + cfg.batch_size);
      const long batch_n = end - start;

      for (auto& wg : worker_grads) wg.zero();
      std::fill(worker_loss.begin(), worker_loss.end(), 0.0);

      for_each_block(batch_n, n_workers, [&](int w, long b, long e) {
        GradSet& wg = worker_grads[static_cast<size_t>(w)];
        double local_loss = 0.0;
        for (long k = b; k < e; ++k) {
          const Tree& t = train_corpus.trees[static_cast<size_t>(order[static_cast<size_t>(start + k)])];
          const TreeStates states = tree_forward(params, t, cfg.leaf_cell_mode);
          local_loss += tree_loss(states, t, cfg.mask, params, 0.0).data_loss;
          tree_backward(params, t, states, cfg.mask, wg, 0.0);
        }
        worker_loss[static_cast<size_t>(w)] = local_loss;
      });

      grads.zero();
      double batch_loss = 0.0;
      for (int w = 0; w < n_workers; ++w) {
        grads.merge(worker_grads[static_cast<size_t>(w)]);
        batch_loss += worker_loss[static_cast<size_t>(w)];
      }
      epoch_data_loss += batch_loss;

      // Average the data gradient over the batch; the L2 term is applied once
      // per batch, scaled so a full epoch matches one whole-corpus penalty.
      grads.tensors().scale(1.0 / static_cast<double>(batch_n));
      accumulate_l2_grad(grads, params,
                         2.0 * cfg.lambda * static_cast<double>(batch_n) / n_train);

      if (!std::isfinite(batch_loss) || !grads.tensors().finite()) {
        throw NumericError("non-finite loss or gradient at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_index),
                           epoch, batch_index);
      }

      if (cfg.clip_norm > 0.0) {
        const double norm = grad_norm(grads);
        if (norm > cfg.clip_norm) grads.tensors().scale(cfg.clip_norm / norm);
      }

      apply_update(params, grads, opt, cfg.learning_rate);
    }

    const Metrics dev = evaluate(params, dev_corpus, EvalScope::all_nodes,
                                 cfg.leaf_cell_mode, cfg.threads);
    const auto t1 = std::chrono::steady_clock::now();

    EpochLog log;
    log.epoch = epoch;
    log.seconds = std::chrono::duration<double>(t1 - t0).count();
    log.train_loss = epoch_data_loss / static_cast<double>(n_train);
    log.dev_root_acc = dev.root_acc();
    log.dev_all_acc = dev.phrase_acc();
    result.log.push_back(log);
    if (log_stream) (*log_stream) << log.to_json_line() << "\n" << std::flush;

    result.last_params = params;
    result.last_opt = opt;
    result.last_epoch = epoch;

    if (log.dev_root_acc > result.best_dev_root_acc) {
      result.best_dev_root_acc = log.dev_root_acc;
      result.best_params = params;
      result.best_opt = opt;
      result.best_epoch = epoch;
      epochs_since_improve = 0;
    } else {
      ++epochs_since_improve;
      if (cfg.patience > 0 && epochs_since_improve >= cfg.patience) break;
    }
  }
  return result;
}

namespace {
constexpr char kCkptMagic[9] = "SLSTMCKP";
constexpr uint32_t kCkptVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  serial::write_magic(out, kCkptMagic);
  serial::write_u32(out, kCkptVersion);
  serial::write_u32(out, static_cast<uint32_t>(ckpt.next_epoch));
  serial::write_string(out, ckpt.config.to_json());
  serial::write_u32(out, static_cast<uint32_t>(ckpt.vocab.size()));
  for (int32_t i = 0; i < ckpt.vocab.size(); ++i) {
    serial::write_string(out, ckpt.vocab.word(i));
  }
  save_params(out, ckpt.params);
  serial::write_u8(out, ckpt.opt.kind == Optimizer::adagrad ? 1 : 0);
  serial::write_f64(out, ckpt.opt.epsilon);
  if (ckpt.opt.kind == Optimizer::adagrad) {
    write_tensor_map(out, ckpt.opt.acc);
  }
  if (!out) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  serial::expect_magic(in, kCkptMagic, "checkpoint");
  const uint32_t version = serial::read_u32(in);
  if (version != kCkptVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.next_epoch = static_cast<int>(serial::read_u32(in));
  ckpt.config = TrainConfig::from_json(serial::read_string(in, 1u << 20));
  const uint32_t vocab_n = serial::read_u32(in);
  if (vocab_n == 0 || vocab_n > (1u << 24)) throw IoError("corrupt checkpoint vocab size");
  for (uint32_t i = 0; i < vocab_n; ++i) {
    const std::string w = serial::read_string(in, 1u << 16);
    if (i == 0) {
      if (w != Vocab::kUnkToken) throw IoError("corrupt checkpoint vocab");
    } else {
      ckpt.vocab.add(w);
    }
  }
  load_params(in, ckpt.params);
  if (ckpt.params.vocab_size() != ckpt.vocab.size()) {
    throw IoError("checkpoint vocab/embedding size mismatch");
  }
  ckpt.opt.kind = serial::read_u8(in) == 1 ? Optimizer::adagrad : Optimizer::sgd;
  ckpt.opt.epsilon = serial::read_f64(in);
  if (ckpt.opt.kind == Optimizer::adagrad) {
    ckpt.opt.acc = read_tensor_map(in);
  }
  return ckpt;
}

}  // namespace slstm
