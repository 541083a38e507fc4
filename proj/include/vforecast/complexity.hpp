#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "vforecast/seriesgen.hpp"

namespace vforecast {

struct WpeConfig {
  int embed_dim = 3;
  double tie_epsilon = 0.0;
};

/// Index in [0, 6) of the ordinal pattern of a triplet. Values within
/// `tie_epsilon` of each other keep their index order.
int ordinal_pattern(double a, double b, double c, double tie_epsilon = 0.0);

/// Weighted permutation entropy over sliding triplets, normalized by ln 6.
/// Each triplet is weighted by its population variance; a series with zero
/// total weight has entropy 0.
double wpe(const TimeSeries& series, const WpeConfig& config = {});

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

Histogram histogram(const std::vector<double>& values, int bins, double lo, double hi);

}  // namespace vforecast
