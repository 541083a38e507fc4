#include "vforecast/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vforecast/error.hpp"

namespace vforecast {

int ordinal_pattern(double a, double b, double c, double tie_epsilon) {
  const std::array<double, 3> v{a, b, c};
  std::array<int, 3> idx{0, 1, 2};
  // Insertion sort; `less` treats near-equal values as tied so index order wins.
  auto less = [&](int i, int j) { return v[i] < v[j] - tie_epsilon; };
  for (int i = 1; i < 3; ++i) {
    for (int j = i; j > 0 && less(idx[j], idx[j - 1]); --j) std::swap(idx[j], idx[j - 1]);
  }
  // Lehmer code of the sorting permutation.
  int code = 0;
  for (int i = 0; i < 3; ++i) {
    int smaller = 0;
    for (int j = i + 1; j < 3; ++j) smaller += idx[j] < idx[i];
    code = code * (3 - i) + smaller;
  }
  return code;
}

double wpe(const TimeSeries& series, const WpeConfig& config) {
  if (config.embed_dim != 3) throw ConfigError("WPE embedding dimension is fixed at 3");
  if (config.tie_epsilon < 0.0) throw ConfigError("tie_epsilon must be >= 0");
  if (series.size() < 4) throw DataError("WPE needs at least 4 samples");

  Eigen::Array<double, 6, 1> weight = Eigen::Array<double, 6, 1>::Zero();
  const auto& x = series.values;
  for (Eigen::Index t = 1; t + 1 < x.size(); ++t) {
    const double a = x[t - 1], b = x[t], c = x[t + 1];
    const double mean = (a + b + c) / 3.0;
    const double w = ((a - mean) * (a - mean) + (b - mean) * (b - mean) +
                      (c - mean) * (c - mean)) / 3.0;
    weight[ordinal_pattern(a, b, c, config.tie_epsilon)] += w;
  }
  const double total = weight.sum();
  if (!(total > 0.0)) return 0.0;
  const Eigen::Array<double, 6, 1> p = weight / total;
  const double h = -(p > 0.0).select(p * p.max(1e-300).log(), 0.0).sum();
  return std::clamp(h / std::log(6.0), 0.0, 1.0);
}

Histogram histogram(const std::vector<double>& values, int bins, double lo, double hi) {
  if (bins < 1 || !(hi > lo)) throw ConfigError("invalid histogram range");
  Histogram h;
  h.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
  h.counts.assign(bins, 0);
  for (double v : values) {
    int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    h.counts[std::clamp(b, 0, bins - 1)]++;
  }
  return h;
}

}  // namespace vforecast
