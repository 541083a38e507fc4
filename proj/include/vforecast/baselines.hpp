#pragma once

#include <Eigen/Core>
#include <string>

#include "vforecast/raster.hpp"
#include "vforecast/rng.hpp"

namespace vforecast {

enum class RwMode { kMeanPath, kSampledPath };

std::string to_string(RwMode mode);
RwMode rw_mode_from_string(const std::string& name);

/// Driftless random walk: s_{t+k} ~ N(anchor, sqrt(k) sigma_hat).
struct RandomWalkModel {
  double sigma_hat = 0.0;
  double anchor = 0.0;
  RwMode mode = RwMode::kMeanPath;
};

/// sigma_hat = sqrt(mean((s_i - s_{i-1})^2)), anchor = last sample.
RandomWalkModel rw_fit(const TimeSeries& input, RwMode mode = RwMode::kMeanPath);

/// Mean path: the anchor repeated. Sampled path: cumulative N(0, sigma_hat)
/// increments from the anchor.
Eigen::VectorXd rw_predict(const RandomWalkModel& model, int horizon, Rng& rng);

/// Renders the target window assembled from the last c L input samples
/// followed by `prediction` ((1 - c) L samples), with that window's own bounds.
/// Ground-truth targets go through this same function with the true future.
SeriesImage numeric_to_image(const TimeSeries& input, const Eigen::VectorXd& prediction,
                             const WindowSpec& wspec, const RenderSpec& rspec);

/// Min-max bounds taken from an input window only.
struct MinMax {
  double lo = 0.0, hi = 1.0;

  static MinMax of(const Eigen::VectorXd& v);
  double range() const { return hi > lo ? hi - lo : 1.0; }
  Eigen::VectorXd normalize(const Eigen::VectorXd& v) const {
    return ((v.array() - lo) / range()).matrix();
  }
  Eigen::VectorXd denormalize(const Eigen::VectorXd& v) const {
    return (v.array() * range() + lo).matrix();
  }
};

}  // namespace vforecast
