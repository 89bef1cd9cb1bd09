#include <doctest.h>

#include <cmath>
#include <sstream>

#include "slstm/trainer.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace slstm;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.hidden_dim = 4;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.1;
  cfg.lambda = 1e-4;
  cfg.max_epochs = 3;
  cfg.seed = 5;
  cfg.patience = 0;  // run all epochs
  return cfg;
}

std::string checkpoint_bytes(const TrainResult& r, const Corpus& train, const TrainConfig& cfg,
                             const TempDir& dir, const char* name) {
  Checkpoint ckpt{r.last_params, r.last_opt, train.vocab, cfg, r.last_epoch + 1};
  save_checkpoint(dir.file(name), ckpt);
  return TempDir::slurp(dir.file(name));
}

}  // namespace

TEST_SUITE_BEGIN("trainer");

TEST_CASE("sgd step is exactly theta minus lr g") {
  ParamSet p = init_params(3, 5, 5, 1);
  const ParamSet before = p;
  GradSet g(p);
  Rng rng(2);
  for (size_t e = 0; e < g.tensors().size(); ++e) {
    for (double& x : g.tensors().flat(e)) x = rng.uniform(-1, 1);
  }
  OptimizerState opt = OptimizerState::fresh(Optimizer::sgd, p);
  apply_update(p, g, opt, 0.05);
  for (size_t e = 0; e < p.tensors().size(); ++e) {
    auto pv = p.tensors().flat(e);
    auto bv = before.tensors().flat(e);
    auto gv = g.tensors().flat(e);
    for (size_t k = 0; k < pv.size(); ++k) CHECK(pv[k] == bv[k] - 0.05 * gv[k]);
  }
}

TEST_CASE("adagrad effective steps shrink per coordinate") {
  ParamSet p = init_params(2, 3, 2, 3);
  GradSet g(p);
  g.vec("b_i")[0] = 1.0;
  g.vec("b_i")[1] = -2.0;
  OptimizerState opt = OptimizerState::fresh(Optimizer::adagrad, p);

  double prev_step0 = 1e9, prev_step1 = 1e9;
  double theta0 = p.vec("b_i")[0], theta1 = p.vec("b_i")[1];
  for (int iter = 0; iter < 5; ++iter) {
    apply_update(p, g, opt, 0.1);
    const double step0 = std::abs(p.vec("b_i")[0] - theta0);
    const double step1 = std::abs(p.vec("b_i")[1] - theta1);
    CHECK(step0 <= prev_step0);
    CHECK(step1 <= prev_step1);
    prev_step0 = step0;
    prev_step1 = step1;
    theta0 = p.vec("b_i")[0];
    theta1 = p.vec("b_i")[1];
  }
  // accumulators are non-negative and grew
  CHECK(opt.acc.vec("b_i")[0] == doctest::Approx(5.0));
  CHECK(opt.acc.vec("b_i")[1] == doctest::Approx(20.0));
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const Corpus data = synth::corpus(12, 1);
  TrainConfig cfg = small_config();
  cfg.learning_rate = 0.0;
  cfg.max_epochs = 2;
  const TrainResult r = train(cfg, data, data);
  const ParamSet fresh = init_params(cfg.hidden_dim, data.vocab.size(), data.num_classes,
                                     cfg.seed);
  CHECK(r.last_params == fresh);
}

TEST_CASE("a batch of k copies updates like a batch of one") {
  Corpus one = synth::corpus(1, 3, 4, 5, 10, 2);
  Corpus four = one;
  for (int i = 0; i < 3; ++i) four.trees.push_back(four.trees[0]);

  TrainConfig cfg = small_config();
  cfg.lambda = 0.0;  // the data term is what must match
  cfg.max_epochs = 1;
  cfg.batch_size = 1;
  const TrainResult r1 = train(cfg, one, one);
  cfg.batch_size = 4;
  const TrainResult r4 = train(cfg, four, four);

  for (size_t e = 0; e < r1.last_params.tensors().size(); ++e) {
    auto a = r1.last_params.tensors().flat(e);
    auto b = r4.last_params.tensors().flat(e);
    for (size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
  const Corpus data = synth::corpus(20, 9);
  const TrainConfig cfg = small_config();
  TempDir dir;
  const TrainResult r1 = train(cfg, data, data);
  const TrainResult r2 = train(cfg, data, data);
  CHECK(checkpoint_bytes(r1, data, cfg, dir, "a.bin") ==
        checkpoint_bytes(r2, data, cfg, dir, "b.bin"));
}

TEST_CASE("two threads are deterministic run to run") {
  const Corpus data = synth::corpus(20, 9);
  TrainConfig cfg = small_config();
  cfg.threads = 2;
  TempDir dir;
  const TrainResult r1 = train(cfg, data, data);
  const TrainResult r2 = train(cfg, data, data);
  CHECK(checkpoint_bytes(r1, data, cfg, dir, "a.bin") ==
        checkpoint_bytes(r2, data, cfg, dir, "b.bin"));
}

TEST_CASE("checkpoint round trip is exact") {
  const Corpus data = synth::corpus(8, 4);
  const TrainConfig cfg = small_config();
  const TrainResult r = train(cfg, data, data);

  TempDir dir;
  Checkpoint ckpt{r.last_params, r.last_opt, data.vocab, cfg, r.last_epoch + 1};
  save_checkpoint(dir.file("ckpt.bin"), ckpt);
  const Checkpoint back = load_checkpoint(dir.file("ckpt.bin"));
  CHECK(back.params == ckpt.params);
  CHECK(back.vocab == ckpt.vocab);
  CHECK(back.next_epoch == ckpt.next_epoch);
  CHECK(back.opt.kind == ckpt.opt.kind);
  CHECK(back.opt.acc == ckpt.opt.acc);
  CHECK(back.config.to_json() == cfg.to_json());
}

TEST_CASE("corrupt checkpoints are rejected outright") {
  TempDir dir;
  dir.write("junk.bin", "not a checkpoint");
  CHECK_THROWS_AS(load_checkpoint(dir.file("junk.bin")), IoError);

  const Corpus data = synth::corpus(4, 4);
  const TrainConfig cfg = small_config();
  const TrainResult r = train(cfg, data, data);
  Checkpoint ckpt{r.last_params, r.last_opt, data.vocab, cfg, 1};
  save_checkpoint(dir.file("good.bin"), ckpt);
  const std::string bytes = TempDir::slurp(dir.file("good.bin"));
  dir.write("trunc.bin", bytes.substr(0, bytes.size() - 64));
  CHECK_THROWS_AS(load_checkpoint(dir.file("trunc.bin")), IoError);
}

TEST_CASE("resuming reproduces an uninterrupted run") {
  const Corpus data = synth::corpus(16, 31);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 4;
  const TrainResult full = train(cfg, data, data);

  TrainConfig half = cfg;
  half.max_epochs = 2;
  const TrainResult first = train(half, data, data);

  TempDir dir;
  Checkpoint mid{first.last_params, first.last_opt, data.vocab, half, first.last_epoch + 1};
  save_checkpoint(dir.file("mid.bin"), mid);
  const Checkpoint loaded = load_checkpoint(dir.file("mid.bin"));

  const TrainResult rest = train(cfg, data, data, &loaded);
  CHECK(rest.last_params == full.last_params);
  CHECK(rest.last_opt.acc == full.last_opt.acc);
}

TEST_CASE("non-finite parameters abort with location info") {
  const Corpus data = synth::corpus(8, 2);
  TrainConfig cfg = small_config();
  const TrainResult warm = train(cfg, data, data);

  ParamSet broken = warm.last_params;
  broken.vec("b_i")[0] = std::numeric_limits<double>::infinity();
  Checkpoint resume{broken, warm.last_opt, data.vocab, cfg, 0};
  TrainConfig more = cfg;
  more.max_epochs = 1;
  CHECK_THROWS_AS(train(more, data, data, &resume), NumericError);
  try {
    train(more, data, data, &resume);
  } catch (const NumericError& e) {
    CHECK(e.epoch == 0);
    CHECK(e.batch == 0);
  }
}

TEST_CASE("dev selection picks the logged maximum") {
  const Corpus train_c = synth::corpus(24, 77);
  const Corpus dev_c = synth::corpus(12, 78);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 6;
  const TrainResult r = train(cfg, train_c, dev_c);
  double best_logged = -1.0;
  for (const EpochLog& log : r.log) best_logged = std::max(best_logged, log.dev_root_acc);
  CHECK(r.best_dev_root_acc == best_logged);
}

TEST_CASE("epoch logs serialize as JSON lines") {
  const Corpus data = synth::corpus(8, 12);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 2;
  std::ostringstream log_stream;
  const TrainResult r = train(cfg, data, data, nullptr, &log_stream);
  CHECK(r.log.size() == 2);
  std::istringstream lines(log_stream.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    CHECK(line.find("\"epoch\":") != std::string::npos);
    CHECK(line.find("\"train_loss\":") != std::string::npos);
    CHECK(line.find("\"dev_root_acc\":") != std::string::npos);
    CHECK(line.find("\"dev_all_acc\":") != std::string::npos);
    CHECK(line.find("\"seconds\":") != std::string::npos);
    ++n;
  }
  CHECK(n == 2);
}

TEST_SUITE_END();
