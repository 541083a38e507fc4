#include "vforecast/ioumetric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "vforecast/error.hpp"

namespace vforecast {

bool ThresholdRule::is_on(double value, double column_max, Eigen::Index height) const {
  if (kind == Kind::kAboveUniform) return value > 1.0 / static_cast<double>(height);
  return value > 0.0 && value >= fraction * column_max;
}

std::string to_string(const ThresholdRule& rule) {
  if (rule.kind == ThresholdRule::Kind::kAboveUniform) return "uniform";
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof buf, rule.fraction).ptr;
  return "relative:" + std::string(buf, end);
}

ThresholdRule threshold_from_string(const std::string& text) {
  if (text == "uniform") return ThresholdRule::above_uniform();
  const std::string prefix = "relative:";
  if (text == "relative") return ThresholdRule::relative(0.2);
  if (text.rfind(prefix, 0) == 0) {
    double f = 0.0;
    try {
      f = std::stod(text.substr(prefix.size()));
    } catch (const std::exception&) {
      throw ConfigError("bad threshold rule '" + text + "'");
    }
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("threshold fraction must be in (0, 1]");
    return ThresholdRule::relative(f);
  }
  throw ConfigError("unknown threshold rule '" + text + "' (relative[:f] | uniform)");
}

RowInterval column_bbox(const Eigen::Ref<const Eigen::VectorXd>& column, const ThresholdRule& rule) {
  const double mx = column.size() ? column.maxCoeff() : 0.0;
  if (!(mx > 0.0)) return RowInterval::make_empty();
  RowInterval box;
  for (Eigen::Index r = 0; r < column.size(); ++r) {
    if (rule.is_on(column[r], mx, column.size())) {
      if (box.empty()) box.lo = static_cast<int>(r);
      box.hi = static_cast<int>(r);
    }
  }
  return box;
}

double column_iou(const RowInterval& a, const RowInterval& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  const int inter = std::max(0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo) + 1);
  const int uni = a.length() + b.length() - inter;
  return static_cast<double>(inter) / uni;
}

IoUProfile image_iou_profile(const Eigen::MatrixXd& gt, const Eigen::MatrixXd& pred,
                             const ThresholdRule& rule, double c) {
  if (gt.rows() != pred.rows() || gt.cols() != pred.cols()) {
    throw DataError("image_iou_profile: image dimensions differ");
  }
  IoUProfile p;
  p.c = c;
  p.per_column.resize(gt.cols());
  for (Eigen::Index j = 0; j < gt.cols(); ++j) {
    p.per_column[j] = column_iou(column_bbox(gt.col(j), rule), column_bbox(pred.col(j), rule));
  }
  return p;
}

IoUProfile image_iou_profile(const SeriesImage& gt, const SeriesImage& pred,
                             const ThresholdRule& rule, double c) {
  return image_iou_profile(gt.pixels, pred.pixels, rule, c);
}

int reconstruction_columns(int width, double c) {
  const double n = c * width;
  if (std::abs(n - std::round(n)) > 1e-9) {
    throw ConfigError("c * width must be integral (c=" + std::to_string(c) +
                      ", width=" + std::to_string(width) + ")");
  }
  return static_cast<int>(std::lround(n));
}

RegionScores region_scores(const IoUProfile& profile) {
  const int w = static_cast<int>(profile.per_column.size());
  const int recon = reconstruction_columns(w, profile.c);
  RegionScores s;
  if (recon > 0) s.recon_mean = profile.per_column.head(recon).mean();
  if (w - recon > 0) s.pred_mean = profile.per_column.tail(w - recon).mean();
  return s;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  const Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
  out.mean = v.mean();
  out.std = std::sqrt((v.array() - out.mean).square().mean());
  return out;
}

}  // namespace vforecast
