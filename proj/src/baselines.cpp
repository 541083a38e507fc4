#include "vforecast/baselines.hpp"

#include <cmath>

#include "vforecast/error.hpp"

namespace vforecast {

std::string to_string(RwMode mode) { return mode == RwMode::kMeanPath ? "mean" : "sample"; }

RwMode rw_mode_from_string(const std::string& name) {
  if (name == "mean") return RwMode::kMeanPath;
  if (name == "sample") return RwMode::kSampledPath;
  throw ConfigError("unknown random-walk mode '" + name + "' (expected mean|sample)");
}

RandomWalkModel rw_fit(const TimeSeries& input, RwMode mode) {
  validate_series(input, 2);
  const auto& v = input.values;
  const Eigen::Index n = v.size();
  const Eigen::VectorXd diffs = v.tail(n - 1) - v.head(n - 1);
  RandomWalkModel m;
  m.sigma_hat = std::sqrt(diffs.squaredNorm() / static_cast<double>(n - 1));
  m.anchor = v[n - 1];
  m.mode = mode;
  return m;
}

Eigen::VectorXd rw_predict(const RandomWalkModel& model, int horizon, Rng& rng) {
  if (horizon < 1) throw ConfigError("random-walk horizon must be >= 1");
  Eigen::VectorXd out = Eigen::VectorXd::Constant(horizon, model.anchor);
  if (model.mode == RwMode::kSampledPath && model.sigma_hat > 0.0) {
    double s = model.anchor;
    for (int k = 0; k < horizon; ++k) {
      s += rng.normal(0.0, model.sigma_hat);
      out[k] = s;
    }
  }
  return out;
}

SeriesImage numeric_to_image(const TimeSeries& input, const Eigen::VectorXd& prediction,
                             const WindowSpec& wspec, const RenderSpec& rspec) {
  validate(wspec);
  const int k = wspec.shift();
  const int keep = wspec.overlap();
  if (prediction.size() != k) {
    throw DataError("prediction has " + std::to_string(prediction.size()) + " samples, expected " +
                    std::to_string(k));
  }
  if (input.size() < keep) throw DataError("input window shorter than the overlap");
  TimeSeries window;
  window.values.resize(keep + k);
  window.values << input.values.tail(keep), prediction;
  window.dt = input.dt;
  window.origin = input.origin;
  return render(window, rspec);
}

MinMax MinMax::of(const Eigen::VectorXd& v) {
  if (v.size() == 0) throw DataError("empty window");
  return {v.minCoeff(), v.maxCoeff()};
}

}  // namespace vforecast
