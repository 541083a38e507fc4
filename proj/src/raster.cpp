#include "vforecast/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "vforecast/binary_io.hpp"
#include "vforecast/error.hpp"

namespace vforecast {

namespace {

// Intensity given to rows a steep segment passes through between the two
// rows that bracket the sampled value. Kept below 0.5 so the bracketing rows
// always hold the column maximum.
constexpr double kSegmentFill = 0.25;

}  // namespace

void validate(const RenderSpec& spec) {
  if (spec.width < 2 || spec.height < 2) throw ConfigError("image must be at least 2x2");
  if (!(spec.epsilon > 0.0)) throw ConfigError("render epsilon must be positive");
}

bool is_column_stochastic(const Eigen::MatrixXd& pixels, double tol) {
  if ((pixels.array() < 0.0).any() || !pixels.allFinite()) return false;
  return ((pixels.colwise().sum().array() - 1.0).abs() <= tol).all();
}

void normalize_columns_inplace(Eigen::MatrixXd& pixels) {
  for (Eigen::Index j = 0; j < pixels.cols(); ++j) {
    const double sum = pixels.col(j).sum();
    if (sum > 0.0) {
      pixels.col(j) /= sum;
    } else {
      pixels.col(j).setConstant(1.0 / static_cast<double>(pixels.rows()));
    }
  }
}

Eigen::VectorXd resample(const Eigen::VectorXd& values, int width) {
  const Eigen::Index n = values.size();
  Eigen::VectorXd out(width);
  if (n == width) return values;
  for (int j = 0; j < width; ++j) {
    const double t = static_cast<double>(j) * static_cast<double>(n - 1) / (width - 1);
    const auto i0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(t)), n - 2);
    const double f = t - static_cast<double>(i0);
    out[j] = (1.0 - f) * values[i0] + f * values[i0 + 1];
  }
  return out;
}

SeriesImage render(const TimeSeries& series, const RenderSpec& spec) {
  validate(spec);
  validate_series(series, 2);
  const int H = spec.height, W = spec.width;

  SeriesImage img;
  img.value_lo = series.values.minCoeff() - spec.epsilon;
  img.value_hi = series.values.maxCoeff() + spec.epsilon;
  img.t_lo = -spec.epsilon;
  img.t_hi = static_cast<double>(series.size() - 1) + spec.epsilon;
  img.pixels = Eigen::MatrixXd::Zero(H, W);

  const Eigen::VectorXd v = resample(series.values, W);
  const double range = img.value_hi - img.value_lo;
  // Continuous row coordinate; row r covers [r, r + 1) with its center at r + 0.5.
  Eigen::VectorXd y(W);
  for (int j = 0; j < W; ++j) {
    y[j] = std::clamp((img.value_hi - v[j]) / range * H - 0.5, 0.0, H - 1.0);
  }

  for (int j = 0; j < W; ++j) {
    auto col = img.pixels.col(j);
    if (!spec.antialias) {
      col[static_cast<Eigen::Index>(std::lround(y[j]))] = 1.0;
      continue;
    }
    const int r0 = std::min(static_cast<int>(std::floor(y[j])), H - 1);
    const double f = y[j] - r0;
    col[r0] += 1.0 - f;
    if (r0 + 1 < H) col[r0 + 1] += f;

    // Rows crossed by the half-segments towards both neighbours.
    double lo = y[j], hi = y[j];
    if (j > 0) {
      lo = std::min(lo, 0.5 * (y[j] + y[j - 1]));
      hi = std::max(hi, 0.5 * (y[j] + y[j - 1]));
    }
    if (j + 1 < W) {
      lo = std::min(lo, 0.5 * (y[j] + y[j + 1]));
      hi = std::max(hi, 0.5 * (y[j] + y[j + 1]));
    }
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(static_cast<int>(std::ceil(hi)), H - 1);
    for (int r = first; r <= last; ++r) {
      if (r != r0 && r != r0 + 1) col[r] = std::max(col[r], kSegmentFill);
    }
  }
  normalize_columns_inplace(img.pixels);
  return img;
}

SeriesImage normalize_columns(const Eigen::MatrixXd& raw, double value_lo, double value_hi) {
  SeriesImage img;
  img.pixels = (1.0 - raw.array().min(255.0).max(0.0) / 255.0).matrix();
  normalize_columns_inplace(img.pixels);
  img.value_lo = value_lo;
  img.value_hi = value_hi;
  img.t_lo = 0.0;
  img.t_hi = static_cast<double>(raw.cols() - 1);
  return img;
}

double row_center_value(const SeriesImage& image, int row) {
  return image.value_hi -
         (row + 0.5) / image.height() * (image.value_hi - image.value_lo);
}

TimeSeries decode(const SeriesImage& image) {
  TimeSeries out;
  out.values.resize(image.width());
  for (int j = 0; j < image.width(); ++j) {
    Eigen::Index row = 0;
    image.pixels.col(j).maxCoeff(&row);  // first maximum wins
    out.values[j] = row_center_value(image, static_cast<int>(row));
  }
  out.dt = (image.t_hi - image.t_lo) / std::max(1, image.width() - 1);
  return out;
}

int WindowSpec::shift() const {
  return static_cast<int>(std::lround((1.0 - c) * input_len));
}

WindowSpec WindowSpec::for_length(int series_len, double c) {
  WindowSpec spec;
  spec.c = c;
  spec.input_len = static_cast<int>(std::floor(series_len / (2.0 - c)));
  while (spec.input_len > 1 && spec.total() > series_len) --spec.input_len;
  return spec;
}

void validate(const WindowSpec& spec) {
  if (!(spec.c >= 0.0 && spec.c < 1.0)) throw ConfigError("overlap c must be in [0, 1)");
  if (spec.input_len < 2) throw ConfigError("window input length must be >= 2");
  const double k = (1.0 - spec.c) * spec.input_len;
  if (std::abs(k - std::round(k)) > 1e-9 || spec.shift() < 1) {
    throw ConfigError("(1 - c) * L must be a positive integer");
  }
}

WindowPair window_pair(const TimeSeries& series, const WindowSpec& spec) {
  validate(spec);
  const int L = spec.input_len, k = spec.shift();
  if (series.size() < spec.total()) {
    throw DataError("series of length " + std::to_string(series.size()) +
                    " is shorter than window span " + std::to_string(spec.total()));
  }
  WindowPair pair;
  pair.input.values = series.values.segment(0, L);
  pair.target.values = series.values.segment(k, L);
  pair.input.dt = pair.target.dt = series.dt;
  pair.input.origin = pair.target.origin = series.origin;
  return pair;
}

void write_pgm(const std::filesystem::path& path, const SeriesImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  const Eigen::RowVectorXd colmax = image.pixels.colwise().maxCoeff();
  std::vector<unsigned char> row(image.width());
  for (int r = 0; r < image.height(); ++r) {
    for (int j = 0; j < image.width(); ++j) {
      const double v = colmax[j] > 0.0 ? image.pixels(r, j) / colmax[j] : 0.0;
      row[j] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

void write_vfim(const std::filesystem::path& path, const Eigen::MatrixXd& pixels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write("VFIM", 4);
  io::put_u32(out, 1);
  io::put_u32(out, static_cast<std::uint32_t>(pixels.rows()));
  io::put_u32(out, static_cast<std::uint32_t>(pixels.cols()));
  for (Eigen::Index r = 0; r < pixels.rows(); ++r) {
    for (Eigen::Index c = 0; c < pixels.cols(); ++c) io::put_f32(out, static_cast<float>(pixels(r, c)));
  }
}

Eigen::MatrixXd read_vfim(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != "VFIM") throw DataError("not a VFIM file: " + path.string());
  if (io::get_u32(in) != 1) throw DataError("unsupported VFIM version");
  const auto rows = io::get_u32(in), cols = io::get_u32(in);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = io::get_f32(in);
  }
  if (!in) throw DataError("truncated VFIM file: " + path.string());
  return m;
}

}  // namespace vforecast
