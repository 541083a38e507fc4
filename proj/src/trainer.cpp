#include "vforecast/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace vforecast {

void validate(const TrainConfig& c) {
  if (c.batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (!(c.lr_init > 0.0) || !(c.lr_floor > 0.0) || c.lr_floor > c.lr_init) {
    throw ConfigError("learning rates must be positive with lr_floor <= lr_init");
  }
  if (!(c.lr_decay_factor > 0.0 && c.lr_decay_factor < 1.0)) {
    throw ConfigError("lr_decay_factor must be in (0, 1)");
  }
  if (c.lr_patience < 1 || c.early_stop_patience < 1) throw ConfigError("patience must be >= 1");
  if (c.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
}

PlateauSchedule::PlateauSchedule(const TrainConfig& config)
    : config_(config), lr_(config.lr_init) {}

PlateauSchedule::Step PlateauSchedule::observe(double val_loss) {
  Step s;
  if (std::isfinite(val_loss) && (!std::isfinite(best_) || val_loss < best_ - config_.improvement_tol)) {
    best_ = val_loss;
    streak_ = 0;
    s.improved = true;
  } else {
    ++streak_;
    if (streak_ >= config_.early_stop_patience) {
      s.stop = true;
    } else if (streak_ % config_.lr_patience == 0 && lr_ > config_.lr_floor) {
      ++decays_;
      lr_ = std::max(config_.lr_init * std::pow(config_.lr_decay_factor, decays_), config_.lr_floor);
    }
  }
  s.lr = lr_;
  return s;
}

bool TrainHistory::same_trajectory(const TrainHistory& o) const {
  if (best_epoch != o.best_epoch || epochs.size() != o.epochs.size()) return false;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& a = epochs[i];
    const auto& b = o.epochs[i];
    if (a.epoch != b.epoch || a.train_loss != b.train_loss || a.val_loss != b.val_loss || a.lr != b.lr) {
      return false;
    }
  }
  return true;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void write_history_csv(const std::filesystem::path& path, const TrainHistory& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,train_loss,val_loss,lr,seconds\n";
  for (const auto& e : h.epochs) {
    out << e.epoch << ',' << fmt(e.train_loss) << ',' << fmt(e.val_loss) << ',' << fmt(e.lr) << ','
        << fmt(e.seconds) << '\n';
  }
}

TrainHistory read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  TrainHistory h;
  std::string line;
  std::getline(in, line);
  double best = INFINITY;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    EpochRecord e;
    std::getline(ss, cell, ',');
    e.epoch = std::stoi(cell);
    std::getline(ss, cell, ',');
    e.train_loss = std::stod(cell);
    std::getline(ss, cell, ',');
    e.val_loss = std::stod(cell);
    std::getline(ss, cell, ',');
    e.lr = std::stod(cell);
    std::getline(ss, cell, ',');
    e.seconds = std::stod(cell);
    h.epochs.push_back(e);
    if (e.val_loss < best) {
      best = e.val_loss;
      h.best_epoch = e.epoch;
    }
  }
  return h;
}

}  // namespace vforecast
