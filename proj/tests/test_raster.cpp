#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "support.hpp"
#include "vforecast/error.hpp"
#include "vforecast/raster.hpp"

using namespace vforecast;

TEST_CASE("constant series puts its mass around the middle row") {
  const TimeSeries s = series_of(Eigen::VectorXd::Constant(64, 3.0));
  const auto img = render(s);
  CHECK(is_column_stochastic(img.pixels, 1e-12));
  for (int j = 0; j < 64; ++j) {
    CHECK(img.pixels(31, j) == doctest::Approx(0.5));
    CHECK(img.pixels(32, j) == doctest::Approx(0.5));
  }
  const auto back = decode(img);
  CHECK((back.values.array() - 3.0).abs().maxCoeff() <= (img.value_hi - img.value_lo) / 64);
}

TEST_CASE("linear ramp gives monotone argmax rows, bottom to top") {
  const TimeSeries s = series_of(Eigen::VectorXd::LinSpaced(64, -2.0, 5.0));
  const auto img = render(s);
  Eigen::Index prev = 64;
  for (int j = 0; j < 64; ++j) {
    Eigen::Index row;
    img.pixels.col(j).maxCoeff(&row);
    CHECK(row <= prev);
    prev = row;
  }
  Eigen::Index first, last;
  img.pixels.col(0).maxCoeff(&first);
  img.pixels.col(63).maxCoeff(&last);
  CHECK(first == 63);
  CHECK(last == 0);
}

TEST_CASE("8-bit column normalization") {
  Eigen::MatrixXd raw(4, 3);
  raw.col(0) << 255, 127.5, 0, 255;
  raw.col(1) << 255, 255, 0, 255;
  raw.col(2) << 255, 255, 255, 255;
  const auto img = normalize_columns(raw);
  CHECK(img.pixels(0, 0) == 0.0);
  CHECK(img.pixels(1, 0) == doctest::Approx(1.0 / 3));
  CHECK(img.pixels(2, 0) == doctest::Approx(2.0 / 3));
  CHECK(img.pixels(3, 0) == 0.0);
  CHECK(img.pixels.col(1) == Eigen::Vector4d(0, 0, 1, 0));
  CHECK(img.pixels.col(2) == Eigen::Vector4d::Constant(0.25));
}

TEST_CASE("8-bit quantization round trip stays within 1/510 per pixel") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    TimeSeries s = series_of(Eigen::VectorXd(200));
    for (int i = 0; i < 200; ++i) s.values[i] = rng.normal();
    const auto img = render(s);
    Eigen::MatrixXd scaled = img.pixels;
    for (int j = 0; j < scaled.cols(); ++j) scaled.col(j) /= scaled.col(j).maxCoeff();
    const Eigen::MatrixXd raw = (255.0 * (1.0 - scaled.array())).round().matrix();
    const Eigen::MatrixXd back = (1.0 - raw.array() / 255.0).matrix();
    CHECK((back - scaled).cwiseAbs().maxCoeff() <= 1.0 / 510 + 1e-15);
    // After renormalization the error is bounded by delta / S' + x H delta / (S S').
    const auto renorm = normalize_columns(raw);
    for (int j = 0; j < scaled.cols(); ++j) {
      const double S = scaled.col(j).sum(), S2 = back.col(j).sum(), d = 1.0 / 510;
      for (int r = 0; r < scaled.rows(); ++r) {
        const double bound = d / S2 + scaled(r, j) * scaled.rows() * d / (S * S2);
        CHECK(std::abs(renorm.pixels(r, j) - img.pixels(r, j)) <= bound + 1e-12);
      }
    }
  }
}

TEST_CASE("render/decode round trip within one bin") {
  Rng rng(2);
  for (auto kind : {GeneratorKind::kHarmonic, GeneratorKind::kOU}) {
    for (int i = 0; i < 1000; ++i) {
      const auto s = generate_one({kind, 200, 0.0}, rng);
      const auto img = render(s);
      REQUIRE(is_column_stochastic(img.pixels, 1e-6));
      const auto back = decode(img);
      const Eigen::VectorXd truth = resample(s.values, img.width());
      const double bin = (img.value_hi - img.value_lo) / img.height();
      CHECK((back.values - truth).cwiseAbs().maxCoeff() <= bin);
    }
  }
}

TEST_CASE("decode orientation: row 0 is the top of the range") {
  SeriesImage img;
  img.pixels = Eigen::MatrixXd::Zero(64, 1);
  img.pixels(0, 0) = 1.0;
  img.value_lo = 0.0;
  img.value_hi = 63.0;
  const auto v = decode(img).values[0];
  CHECK(v > 63.0 - 63.0 / 64);
  CHECK(v <= 63.0);
}

TEST_CASE("render is approximately invariant to affine rescaling") {
  Rng rng(3);
  const auto s = generate_one({GeneratorKind::kHarmonic, 200, 0.0}, rng);
  const TimeSeries t = series_of((s.values.array() * 7.0 + 100.0).matrix());
  // Not bit-exact because the margin epsilon is absolute.
  CHECK((render(s).pixels - render(t).pixels).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("windowing") {
  const auto w = WindowSpec::for_length(100, 0.75);
  CHECK(w.input_len == 80);
  CHECK(w.shift() == 20);
  const TimeSeries s = series_of(Eigen::VectorXd::LinSpaced(100, 0, 99));
  const auto pair = window_pair(s, w);
  CHECK(pair.input.size() == 80);
  CHECK(pair.input.values[0] == 0.0);
  CHECK(pair.input.values[79] == 79.0);
  CHECK(pair.target.values[0] == 20.0);
  CHECK(pair.target.values[79] == 99.0);

  const auto desk = WindowSpec::for_length(200, 0.75);
  CHECK(desk.input_len == 160);
  CHECK(desk.shift() == 40);

  const auto disjoint = WindowSpec::for_length(100, 0.0);
  const auto p0 = window_pair(s, disjoint);
  CHECK(p0.input.values.maxCoeff() < p0.target.values.minCoeff());

  WindowSpec one{1.0, 80};
  CHECK_THROWS_AS(validate(one), ConfigError);
  const TimeSeries shortie = series_of(Eigen::VectorXd::Zero(50));
  CHECK_THROWS_AS(window_pair(shortie, w), DataError);
}

TEST_CASE("VFIM round trip") {
  Rng rng(4);
  Eigen::MatrixXd m(5, 7);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.uniform());
  const auto path = std::filesystem::temp_directory_path() / "vforecast_rt.vfim";
  write_vfim(path, m);
  CHECK(read_vfim(path) == m);
  CHECK(std::filesystem::file_size(path) == 16 + 4 * 35);
}
