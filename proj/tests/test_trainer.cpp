#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "vforecast/checkpoint.hpp"
#include "vforecast/divergence.hpp"
#include "vforecast/raster.hpp"
#include "vforecast/trainer.hpp"

using namespace vforecast;

namespace {

VisualAEConfig tiny() {
  VisualAEConfig c;
  c.height = c.width = 8;
  c.channels = {2, 4, 4};
  c.embedding = 8;
  return c;
}

Dataset<double> tiny_data(int n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset<double> d{Tensor<double>(n, {1, 8, 8}), Tensor<double>(n, {1, 8, 8})};
  const RenderSpec spec{8, 8, 1e-6, true};
  for (int i = 0; i < n; ++i) {
    const auto s = generate_one({GeneratorKind::kHarmonic, 40, 0.0}, rng);
    const auto pair = window_pair(s, WindowSpec::for_length(40, 0.75));
    d.inputs.set_image(i, render(pair.input, spec).pixels);
    d.targets.set_image(i, render(pair.target, spec).pixels);
  }
  return d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("schedule under perpetual non-improvement") {
  TrainConfig cfg;
  PlateauSchedule sched(cfg);
  auto first = sched.observe(1.0);
  CHECK(first.improved);
  std::vector<double> used;  // rate in effect for each non-improving epoch
  bool stopped = false;
  int epochs = 0;
  while (!stopped && epochs < 100) {
    used.push_back(sched.lr());
    const auto step = sched.observe(1.0);
    CHECK_FALSE(step.improved);
    stopped = step.stop;
    ++epochs;
  }
  REQUIRE(epochs == 15);
  for (int e = 0; e < 15; ++e) {
    const double expected = e < 5 ? 0.1 : (e < 10 ? 0.01 : 0.001);
    CHECK(used[e] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("improvement resets the streak") {
  TrainConfig cfg;
  PlateauSchedule sched(cfg);
  sched.observe(1.0);
  for (int i = 0; i < 4; ++i) sched.observe(2.0);
  CHECK(sched.streak() == 4);
  CHECK(sched.observe(0.5).improved);
  CHECK(sched.streak() == 0);
  CHECK(sched.lr() == 0.1);
  // Changes within the tolerance do not count as improvement.
  CHECK_FALSE(sched.observe(0.5 - 1e-7).improved);
}

TEST_CASE("learning rate never drops below the floor") {
  TrainConfig cfg;
  cfg.lr_init = 1e-3;
  cfg.early_stop_patience = 100;
  PlateauSchedule sched(cfg);
  sched.observe(1.0);
  for (int i = 0; i < 60; ++i) sched.observe(1.0);
  CHECK(sched.lr() == cfg.lr_floor);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.lr_decay_factor = 1.5;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("evaluate_epoch matches a per-example loop") {
  const auto net = Network<double>::visual(tiny());
  const auto params = net.init_params(3);
  const auto data = tiny_data(10, 1);
  double loop = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    const auto out = net.forward(params, data.inputs.gather({i}), Mode::kInference);
    loop += columnwise_loss(data.targets.image(i), out.image(0));
  }
  loop /= data.size();
  CHECK(std::abs(evaluate_epoch(net, params, data, 3) - loop) <= 1e-9);
  CHECK(std::abs(evaluate_epoch(net, params, data, 7) - loop) <= 1e-9);

  Dataset<double> self{data.targets, data.targets};
  // A perfect model is emulated by scoring targets against themselves.
  double zero = 0.0;
  for (int i = 0; i < self.size(); ++i) zero += columnwise_loss(self.targets.image(i), self.inputs.image(i));
  CHECK(zero == 0.0);
}

TEST_CASE("training is deterministic and checkpoints round trip") {
  const auto net = Network<double>::visual(tiny());
  const auto train_set = tiny_data(20, 2), val_set = tiny_data(6, 3);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 4;
  cfg.seed = 5;
  const auto a = train(net, train_set, val_set, cfg);
  const auto b = train(net, train_set, val_set, cfg);
  CHECK(a.history.same_trajectory(b.history));
  CHECK(a.best == b.best);
  REQUIRE(a.history.epochs.size() == 4);
  CHECK(a.history.best_epoch >= 1);

  const auto dir = std::filesystem::temp_directory_path();
  write_history_csv(dir / "vf_h1.csv", a.history);
  const auto back = read_history_csv(dir / "vf_h1.csv");
  CHECK(back.epochs.size() == a.history.epochs.size());
  CHECK(back.same_trajectory(a.history));

  const auto fnet = Network<float>::visual(tiny());
  const auto fparams = a.best.cast<float>();
  save_checkpoint(dir / "vf_ck.vfck", fnet, fparams);
  const auto loaded = load_checkpoint(dir / "vf_ck.vfck", fnet);
  CHECK(loaded == fparams);
  const Dataset<float> fval{val_set.inputs.cast<float>(), val_set.targets.cast<float>()};
  CHECK(std::abs(evaluate_epoch(fnet, loaded, fval) - evaluate_epoch(fnet, fparams, fval)) <= 1e-6);

  auto other_cfg = tiny();
  other_cfg.embedding = 6;
  CHECK_THROWS_AS(load_checkpoint(dir / "vf_ck.vfck", Network<float>::visual(other_cfg)), ConfigError);

  const std::string bytes = slurp(dir / "vf_ck.vfck");
  CHECK(bytes.substr(0, 4) == "VFCK");
  std::ofstream(dir / "vf_trunc.vfck", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  CHECK_THROWS_AS(load_checkpoint(dir / "vf_trunc.vfck", fnet), DataError);
}

TEST_CASE("early stopping on a flat validation loss") {
  // lr 0 keeps the parameters, so validation loss never improves after epoch 1.
  const auto net = Network<double>::visual(tiny());
  const auto data = tiny_data(8, 4);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.lr_init = 1e-4;
  cfg.lr_floor = 1e-4;
  cfg.momentum = 0.0;
  cfg.improvement_tol = 1.0;
  const auto r = train(net, data, data, cfg);
  CHECK(r.history.epochs.size() == 16);
  CHECK(r.history.best_epoch == 1);
}

TEST_CASE("non-finite loss raises a numeric error") {
  const auto net = Network<double>::visual(tiny());
  auto data = tiny_data(8, 5);
  data.inputs.data[3] = NAN;
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_epochs = 1;
  CHECK_THROWS_AS(train(net, data, data, cfg), NumericError);
}
