#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <utility>

#include "vforecast/seriesgen.hpp"

namespace vforecast {

struct RenderSpec {
  int width = 64;
  int height = 64;
  double epsilon = 1e-6;
  bool antialias = true;
};

void validate(const RenderSpec& spec);

/// Column-stochastic image of a series. Row 0 is the top (largest value).
struct SeriesImage {
  Eigen::MatrixXd pixels;  // height x width
  double value_lo = 0.0, value_hi = 1.0;
  double t_lo = 0.0, t_hi = 1.0;

  int height() const { return static_cast<int>(pixels.rows()); }
  int width() const { return static_cast<int>(pixels.cols()); }
};

/// Every entry >= 0 and every column sums to 1 within `tol`.
bool is_column_stochastic(const Eigen::MatrixXd& pixels, double tol = 1e-6);

/// Divides each column by its sum; blank columns become uniform.
void normalize_columns_inplace(Eigen::MatrixXd& pixels);

/// Plots the series as an anti-aliased polyline on [min-eps, max+eps] and
/// normalizes every column to a distribution. Series longer or shorter than
/// the image width are linearly resampled at `width` evenly spaced times.
SeriesImage render(const TimeSeries& series, const RenderSpec& spec = {});

/// Raw 8-bit plot (dark curve on white, values in [0, 255]) to a
/// column-stochastic image: x = 1 - raw / 255, then per-column normalization.
SeriesImage normalize_columns(const Eigen::MatrixXd& raw, double value_lo = 0.0,
                              double value_hi = 1.0);

/// Per column, the center value of the brightest row (lowest row on ties).
TimeSeries decode(const SeriesImage& image);

/// Row index -> value at the row's center.
double row_center_value(const SeriesImage& image, int row);

/// The series resampled at the image's column times (what render draws).
Eigen::VectorXd resample(const Eigen::VectorXd& values, int width);

/// Overlap fraction c and input length L; the target is shifted by
/// k = (1 - c) L samples.
struct WindowSpec {
  double c = 0.75;
  int input_len = 160;

  int shift() const;
  int overlap() const { return input_len - shift(); }
  int total() const { return input_len + shift(); }

  /// Largest window whose input + shift fits `series_len` samples.
  static WindowSpec for_length(int series_len, double c);
};

void validate(const WindowSpec& spec);

struct WindowPair {
  TimeSeries input;
  TimeSeries target;
};

/// input = s[0, L), target = s[k, k + L).
WindowPair window_pair(const TimeSeries& series, const WindowSpec& spec);

/// Binary PGM (P5) with each column scaled to its own maximum.
void write_pgm(const std::filesystem::path& path, const SeriesImage& image);

/// Lossless float32 matrix: "VFIM", u32 version, u32 height, u32 width, then
/// row-major little-endian values.
void write_vfim(const std::filesystem::path& path, const Eigen::MatrixXd& pixels);
Eigen::MatrixXd read_vfim(const std::filesystem::path& path);

}  // namespace vforecast
