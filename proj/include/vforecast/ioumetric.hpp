#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "vforecast/raster.hpp"

namespace vforecast {

/// Inclusive row range; `empty` when no pixel is on.
struct RowInterval {
  int lo = 0, hi = -1;

  static RowInterval make_empty() { return {}; }
  bool empty() const { return hi < lo; }
  int length() const { return empty() ? 0 : hi - lo + 1; }
  bool operator==(const RowInterval&) const = default;
};

/// Which pixels of a column count as "on".
struct ThresholdRule {
  enum class Kind { kRelativeToMax, kAboveUniform };
  Kind kind = Kind::kRelativeToMax;
  double fraction = 0.2;  // for kRelativeToMax

  static ThresholdRule relative(double fraction) { return {Kind::kRelativeToMax, fraction}; }
  static ThresholdRule above_uniform() { return {Kind::kAboveUniform, 0.0}; }

  bool is_on(double value, double column_max, Eigen::Index height) const;
};

std::string to_string(const ThresholdRule& rule);
ThresholdRule threshold_from_string(const std::string& text);

/// Smallest interval covering every "on" pixel; empty if the column max is 0.
RowInterval column_bbox(const Eigen::Ref<const Eigen::VectorXd>& column,
                        const ThresholdRule& rule = {});

/// |a n b| / |a u b| in pixel rows. Two empties give 1, one empty gives 0.
double column_iou(const RowInterval& a, const RowInterval& b);

struct IoUProfile {
  Eigen::VectorXd per_column;
  double c = 0.75;
};

IoUProfile image_iou_profile(const SeriesImage& gt, const SeriesImage& pred,
                             const ThresholdRule& rule = {}, double c = 0.75);
IoUProfile image_iou_profile(const Eigen::MatrixXd& gt, const Eigen::MatrixXd& pred,
                             const ThresholdRule& rule = {}, double c = 0.75);

/// Number of leading reconstruction columns, c * width (must be integral).
int reconstruction_columns(int width, double c);

struct RegionScores {
  double recon_mean = 0.0;
  double pred_mean = 0.0;
};

/// Means over the first c * width and the last (1 - c) * width columns.
RegionScores region_scores(const IoUProfile& profile);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Population standard deviation.
MeanStd mean_std(const std::vector<double>& values);

}  // namespace vforecast
