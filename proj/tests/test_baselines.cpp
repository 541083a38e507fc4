#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "vforecast/baselines.hpp"
#include "vforecast/ioumetric.hpp"

using namespace vforecast;

TEST_CASE("random walk fit") {
  const auto unit = rw_fit(series_of(Eigen::Vector4d(0, 1, 2, 3)));
  CHECK(unit.sigma_hat == 1.0);
  CHECK(unit.anchor == 3.0);
  CHECK(rw_fit(series_of(Eigen::Vector4d(0, 2, 0, 2))).sigma_hat == 2.0);
  CHECK(rw_fit(series_of(Eigen::VectorXd::Constant(5, 4.0))).sigma_hat == 0.0);
}

TEST_CASE("random walk prediction") {
  Rng rng(1);
  RandomWalkModel flat{0.0, 2.0, RwMode::kSampledPath};
  CHECK((rw_predict(flat, 10, rng).array() == 2.0).all());
  flat.mode = RwMode::kMeanPath;
  CHECK((rw_predict(flat, 10, rng).array() == 2.0).all());

  RandomWalkModel mean{1.5, -1.0, RwMode::kMeanPath};
  CHECK((rw_predict(mean, 7, rng).array() == -1.0).all());
  CHECK(rw_predict(mean, 3, rng)[2] == rw_predict(mean, 30, rng)[2]);
}

TEST_CASE("sampled paths have the random-walk marginal") {
  const RandomWalkModel m{0.7, 5.0, RwMode::kSampledPath};
  Rng root(2);
  const int n = 10000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    auto rng = root.split(i);
    const double v = rw_predict(m, 4, rng)[3];
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sumsq / n - mean * mean);
  CHECK(std::abs(sd / (2 * m.sigma_hat) - 1.0) <= 0.05);
}

TEST_CASE("numeric_to_image with the true future equals the rendered target") {
  Rng rng(3);
  const WindowSpec w = WindowSpec::for_length(200, 0.75);
  const RenderSpec r;
  for (int i = 0; i < 20; ++i) {
    const auto s = generate_one({GeneratorKind::kOU, 200, 0.0}, rng);
    const auto pair = window_pair(s, w);
    const Eigen::VectorXd future = pair.target.values.tail(w.shift());
    const auto img = numeric_to_image(pair.input, future, w, r);
    CHECK(img.pixels == render(pair.target, r).pixels);
    CHECK(is_column_stochastic(img.pixels, 1e-6));
    const auto profile = image_iou_profile(img.pixels, render(pair.target, r).pixels);
    CHECK(region_scores(profile).recon_mean == 1.0);
  }
}

TEST_CASE("min-max scaling uses the input bounds") {
  const Eigen::Vector3d in(2, 4, 6);
  const auto mm = MinMax::of(in);
  CHECK(mm.normalize(in) == Eigen::Vector3d(0, 0.5, 1));
  CHECK(mm.denormalize(mm.normalize(Eigen::Vector3d(8, 0, 3))).isApprox(Eigen::Vector3d(8, 0, 3)));
  CHECK(MinMax::of(Eigen::Vector2d(1, 1)).range() == 1.0);
}
