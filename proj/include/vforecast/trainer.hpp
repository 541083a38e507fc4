#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "vforecast/error.hpp"
#include "vforecast/network.hpp"

namespace vforecast {

struct TrainConfig {
  int batch_size = 128;
  double lr_init = 0.1;
  double lr_decay_factor = 0.1;
  double lr_floor = 1e-4;
  int lr_patience = 5;
  int early_stop_patience = 15;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  double momentum = 0.9;
  double improvement_tol = 1e-6;
};

void validate(const TrainConfig& config);

/// Reduce-on-plateau learning rate plus early stopping, both driven by one
/// streak of non-improving validation epochs. The streak resets on
/// improvement; the rate decays each time the streak reaches a multiple of
/// `lr_patience`, and training stops when it reaches `early_stop_patience`.
class PlateauSchedule {
 public:
  struct Step {
    bool improved = false;
    bool stop = false;
    double lr = 0.0;  // rate for the next epoch
  };

  explicit PlateauSchedule(const TrainConfig& config);

  Step observe(double val_loss);

  double lr() const { return lr_; }
  double best() const { return best_; }
  int streak() const { return streak_; }

 private:
  TrainConfig config_;
  double lr_;
  double best_ = INFINITY;
  int streak_ = 0;
  int decays_ = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // rate used during this epoch
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based; 0 before any epoch

  /// Compares everything but wall time.
  bool same_trajectory(const TrainHistory& o) const;
};

/// CSV with header epoch,train_loss,val_loss,lr,seconds.
void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);
TrainHistory read_history_csv(const std::filesystem::path& path);

template <typename Scalar>
struct Dataset {
  Tensor<Scalar> inputs;
  Tensor<Scalar> targets;

  int size() const { return inputs.n; }
};

template <typename Scalar>
class Sgd {
 public:
  explicit Sgd(double momentum) : momentum_(momentum) {}

  void step(ParamSet<Scalar>& params, const ParamSet<Scalar>& grads, double lr) {
    if (velocity_.params.empty()) velocity_ = params.zeros_like();
    const Scalar mu = static_cast<Scalar>(momentum_), rate = static_cast<Scalar>(lr);
    for (std::size_t i = 0; i < params.params.size(); ++i) {
      auto& v = velocity_.params[i].value;
      v = mu * v + grads.params[i].value;
      params.params[i].value -= rate * v;
    }
  }

 private:
  double momentum_;
  ParamSet<Scalar> velocity_;
};

/// Mean per-example loss in inference mode. Independent of `batch_size`.
template <typename Scalar>
double evaluate_epoch(const Network<Scalar>& net, const ParamSet<Scalar>& params,
                      const Dataset<Scalar>& data, int batch_size = 128) {
  if (data.size() == 0) throw DataError("evaluation set is empty");
  double total = 0.0;
  std::vector<int> idx;
  for (int start = 0; start < data.size(); start += batch_size) {
    const int end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto out = net.forward(params, data.inputs.gather(idx), Mode::kInference);
    const auto losses = net.example_losses(out, data.targets.gather(idx));
    for (Eigen::Index i = 0; i < losses.size(); ++i) total += static_cast<double>(losses[i]);
  }
  return total / data.size();
}

template <typename Scalar>
struct TrainResult {
  ParamSet<Scalar> best;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&, bool improved)>;

/// Mini-batch SGD with momentum. Returns the parameters of the epoch with the
/// lowest validation loss. Initialization and shuffling derive from
/// config.seed only, so repeated runs are bit-identical.
template <typename Scalar>
TrainResult<Scalar> train(const Network<Scalar>& net, const Dataset<Scalar>& train_set,
                          const Dataset<Scalar>& val_set, const TrainConfig& config,
                          const EpochCallback& on_epoch = {}) {
  validate(config);
  if (train_set.size() == 0 || val_set.size() == 0) throw DataError("training or validation set is empty");

  TrainResult<Scalar> result;
  ParamSet<Scalar> params = net.init_params(config.seed);
  result.best = params;
  Sgd<Scalar> opt(config.momentum);
  PlateauSchedule schedule(config);
  const Rng shuffle_root = Rng(config.seed).split("shuffle");

  std::vector<int> order(train_set.size());
  ParamSet<Scalar> grads;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = schedule.lr();
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler = shuffle_root.split(static_cast<std::uint64_t>(epoch));
    shuffler.shuffle(order);

    double train_total = 0.0;
    int seen = 0;
    for (int start = 0, batch = 0; start < train_set.size(); start += config.batch_size, ++batch) {
      const int end = std::min(train_set.size(), start + config.batch_size);
      // A single-example batch has no batch statistics; fold it away.
      if (end - start < 2 && start > 0) break;
      const std::vector<int> idx(order.begin() + start, order.begin() + end);
      const Scalar loss = net.loss_and_grad(params, train_set.inputs.gather(idx),
                                            train_set.targets.gather(idx), grads);
      if (!std::isfinite(static_cast<double>(loss)) || !params.all_finite()) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch));
      }
      opt.step(params, grads, lr);
      train_total += static_cast<double>(loss) * (end - start);
      seen += end - start;
    }

    const double val = evaluate_epoch(net, params, val_set, config.batch_size);
    if (!std::isfinite(val)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    const auto step = schedule.observe(val);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_total / std::max(1, seen);
    rec.val_loss = val;
    rec.lr = lr;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.epochs.push_back(rec);
    if (step.improved) {
      result.best = params;
      result.history.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(rec, step.improved);
    if (step.stop) break;
  }
  return result;
}

}  // namespace vforecast
