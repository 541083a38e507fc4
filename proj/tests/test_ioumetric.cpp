#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "vforecast/error.hpp"
#include "vforecast/ioumetric.hpp"
#include "vforecast/rng.hpp"

using namespace vforecast;

TEST_CASE("bounding intervals") {
  Eigen::VectorXd one_hot = Eigen::VectorXd::Zero(16);
  one_hot[5] = 1.0;
  CHECK(column_bbox(one_hot) == RowInterval{5, 5});

  Eigen::VectorXd two = Eigen::VectorXd::Zero(16);
  two[2] = 0.5;
  two[7] = 0.5;
  two[4] = 0.05;  // below 0.2 of the max
  CHECK(column_bbox(two) == RowInterval{2, 7});

  CHECK(column_bbox(Eigen::VectorXd::Zero(4)).empty());
}

TEST_CASE("interval shrinks as the threshold rises") {
  Eigen::VectorXd col(64);
  for (int r = 0; r < 64; ++r) col[r] = std::exp(-0.5 * std::pow((r - 30.3) / 6.0, 2));
  col /= col.sum();
  int prev = 65;
  for (double f = 0.05; f < 1.0; f += 0.05) {
    const auto iv = column_bbox(col, ThresholdRule::relative(f));
    const auto expect = oracle::on_interval(col, f);
    CHECK(iv.lo == expect.first);
    CHECK(iv.hi == expect.second);
    CHECK(iv.length() <= prev);
    prev = iv.length();
  }
}

TEST_CASE("interval IoU hand cases") {
  CHECK(column_iou({3, 9}, {3, 9}) == 1.0);
  CHECK(column_iou({10, 20}, {15, 25}) == 0.375);
  CHECK(column_iou({0, 3}, {10, 12}) == 0.0);
  CHECK(column_iou({}, {}) == 1.0);
  CHECK(column_iou({}, {1, 2}) == 0.0);
}

TEST_CASE("interval IoU equals pixel-set IoU") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    auto draw = [&] {
      if (rng.uniform() < 0.05) return RowInterval{};
      int a = static_cast<int>(rng.below(64)), b = static_cast<int>(rng.below(64));
      if (a > b) std::swap(a, b);
      return RowInterval{a, b};
    };
    const auto x = draw(), y = draw();
    CHECK(column_iou(x, y) == oracle::interval_iou_by_sets(x.lo, x.hi, y.lo, y.hi));
  }
}

TEST_CASE("image profile equals the set oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd gt(16, 8), pred(16, 8);
    for (Eigen::Index i = 0; i < gt.size(); ++i) {
      gt.data()[i] = rng.uniform() < 0.7 ? 0.0 : rng.uniform();
      pred.data()[i] = rng.uniform() < 0.7 ? 0.0 : rng.uniform();
    }
    const auto profile = image_iou_profile(gt, pred, {}, 0.75);
    for (int j = 0; j < 8; ++j) {
      const auto a = oracle::on_interval(gt.col(j), 0.2);
      const auto b = oracle::on_interval(pred.col(j), 0.2);
      CHECK(profile.per_column[j] == oracle::interval_iou_by_sets(a.first, a.second, b.first, b.second));
    }
    CHECK(image_iou_profile(gt, gt).per_column.isOnes(0.0));
  }
}

TEST_CASE("shifting unit boxes one row gives zero IoU") {
  Eigen::MatrixXd gt = Eigen::MatrixXd::Zero(8, 4), pred = Eigen::MatrixXd::Zero(8, 4);
  for (int j = 0; j < 4; ++j) {
    gt(j, j) = 1.0;
    pred(j + 1, j) = 1.0;
  }
  CHECK(image_iou_profile(gt, gt).per_column.isOnes(0.0));
  CHECK(image_iou_profile(gt, pred).per_column.isZero(0.0));
}

TEST_CASE("region scores") {
  IoUProfile constant{Eigen::VectorXd::Constant(64, 0.5), 0.75};
  CHECK(region_scores(constant).recon_mean == 0.5);
  CHECK(region_scores(constant).pred_mean == 0.5);

  IoUProfile split{Eigen::VectorXd::Zero(64), 0.75};
  split.per_column.head(48).setOnes();
  CHECK(region_scores(split).recon_mean == 1.0);
  CHECK(region_scores(split).pred_mean == 0.0);

  CHECK(reconstruction_columns(64, 0.75) == 48);
  CHECK_THROWS_AS(reconstruction_columns(64, 0.7), ConfigError);
}

TEST_CASE("threshold rules") {
  CHECK(threshold_from_string("uniform").kind == ThresholdRule::Kind::kAboveUniform);
  CHECK(threshold_from_string("relative:0.3").fraction == 0.3);
  CHECK(threshold_from_string(to_string(ThresholdRule::relative(0.2))).fraction == 0.2);
  CHECK_THROWS_AS(threshold_from_string("median"), ConfigError);

  Eigen::VectorXd col = Eigen::VectorXd::Constant(4, 0.1);
  col[1] = 0.7;
  CHECK(column_bbox(col, ThresholdRule::above_uniform()) == RowInterval{1, 1});
}

TEST_CASE("mean and population std") {
  const auto ms = mean_std({1.0, 3.0});
  CHECK(ms.mean == 2.0);
  CHECK(ms.std == 1.0);
  CHECK(mean_std({0.5}).std == 0.0);
}
