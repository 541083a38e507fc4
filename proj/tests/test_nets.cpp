#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "vforecast/checkpoint.hpp"
#include "vforecast/network.hpp"
#include "vforecast/raster.hpp"
#include "vforecast/rng.hpp"
#include "vforecast/trainer.hpp"

using namespace vforecast;

namespace {

VisualAEConfig tiny_visual() {
  VisualAEConfig c;
  c.height = 8;
  c.width = 8;
  c.channels = {2, 2, 2};
  c.embedding = 4;
  return c;
}

template <typename Scalar>
Tensor<Scalar> random_stochastic(int n, int h, int w, Rng& rng) {
  Tensor<Scalar> t(n, {1, h, w});
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd m(h, w);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) m(r, c) = rng.uniform(0.01, 1.0);
    }
    normalize_columns_inplace(m);
    t.set_image(i, m);
  }
  return t;
}

// Max over coordinates of |a - n| / max(|a|, |n|, floor).
double max_rel_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric, double floor) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

Eigen::VectorXd flatten(const ParamSet<double>& p) {
  Eigen::VectorXd v(p.parameter_count());
  Eigen::Index k = 0;
  for (const auto& e : p.params) {
    v.segment(k, e.value.size()) = Eigen::Map<const Eigen::VectorXd>(e.value.data(), e.value.size());
    k += e.value.size();
  }
  return v;
}

void unflatten(const Eigen::VectorXd& v, ParamSet<double>& p) {
  Eigen::Index k = 0;
  for (auto& e : p.params) {
    Eigen::Map<Eigen::VectorXd>(e.value.data(), e.value.size()) = v.segment(k, e.value.size());
    k += e.value.size();
  }
}

}  // namespace

TEST_CASE("visual shape trace follows the kernel/stride/padding arithmetic") {
  const auto net = Network<float>::visual(VisualAEConfig{});
  // Oracle: out = floor((in + 2p - k) / s) + 1 per stage.
  int size = 64;
  std::vector<Shape> expected;
  for (int ch : {128, 256, 512}) {
    size = (size + 2 * 2 - 5) / 2 + 1;
    expected.push_back({ch, size, size});
  }
  CHECK(expected.back() == Shape{512, 8, 8});
  Shape s = net.input_shape();
  std::vector<Shape> convs;
  for (const auto& l : net.layers()) {
    s = l->output_shape(s);
    if (l->describe().rfind("conv(", 0) == 0) convs.push_back(s);
  }
  REQUIRE(convs.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(convs[i] == expected[i]);
  CHECK(net.output_shape() == Shape{1, 64, 64});
}

TEST_CASE("default VisualAE parameter count matches hand arithmetic") {
  const auto net = Network<float>::visual(VisualAEConfig{});
  const long conv = (1 * 25 * 128 + 128) + (128 * 25 * 256 + 256) + (256 * 25 * 512 + 512);
  const long bn_enc = 2 * (128 + 256 + 512);
  const long fc = (8 * 8 * 512) * 512 + 512 + 512 * (8 * 8 * 512) + 8 * 8 * 512;
  const long bn_dec = 2 * 512 + 2 * 256 + 2 * 128;
  const long convt = (512 * 256 * 25 + 256) + (256 * 128 * 25 + 128) + (128 * 1 * 25 + 1);
  CHECK(net.layout().parameter_count() == conv + bn_enc + fc + bn_dec + convt);
  CHECK(net.describe().find("parameters " + std::to_string(conv + bn_enc + fc + bn_dec + convt)) !=
        std::string::npos);
}

TEST_CASE("NumAE shape trace for T = 80") {
  NumAEConfig c;
  c.length = 80;
  const auto net = Network<float>::numeric(c);
  Shape s = net.input_shape();
  std::vector<Shape> convs;
  Shape embedding;
  for (const auto& l : net.layers()) {
    s = l->output_shape(s);
    if (l->describe().rfind("conv(", 0) == 0) convs.push_back(s);
    if (l->describe().rfind("linear(", 0) == 0 && embedding.c == 1) embedding = s;
  }
  REQUIRE(convs.size() == 2);
  CHECK(convs[0] == Shape{40, 1, 40});
  CHECK(convs[1] == Shape{20, 1, 20});
  CHECK(embedding.c == 20);
  CHECK(net.output_shape() == Shape{1, 1, 80});
}

TEST_CASE("NumAE rejects lengths not divisible by 4") {
  NumAEConfig c;
  c.length = 82;
  CHECK_THROWS_AS(Network<float>::numeric(c), ConfigError);
}

TEST_CASE("VisualAE outputs are column-stochastic and deterministic") {
  VisualAEConfig cfg;
  cfg.channels = {4, 8, 8};
  cfg.embedding = 32;
  const auto net = Network<float>::visual(cfg);
  const auto params = net.init_params(3);
  Rng rng(5);
  const auto x = random_stochastic<float>(3, 64, 64, rng);
  const auto y1 = net.forward(params, x, Mode::kInference);
  const auto y2 = net.forward(params, x, Mode::kInference);
  CHECK(y1.data == y2.data);
  for (int i = 0; i < 3; ++i) {
    CHECK(is_column_stochastic(y1.image(i).cast<double>(), 1e-6));
  }
}

TEST_CASE("init_params is deterministic per seed") {
  const auto net = Network<float>::visual(tiny_visual());
  CHECK(net.init_params(1) == net.init_params(1));
  CHECK_FALSE(net.init_params(1) == net.init_params(2));
}

TEST_CASE("initial output is close to uniform per column") {
  // Mean column entropy over 100 seeds within 5% of ln 64.
  VisualAEConfig cfg;
  cfg.channels = {4, 8, 8};
  cfg.embedding = 32;
  const auto net = Network<double>::visual(cfg);
  Rng rng(9);
  const auto x = random_stochastic<double>(4, 64, 64, rng);
  double total = 0.0;
  int columns = 0;
  for (int seed = 0; seed < 100; ++seed) {
    const auto y = net.forward(net.init_params(seed), x, Mode::kInference);
    for (int i = 0; i < y.n; ++i) {
      const Eigen::MatrixXd img = y.image(i);
      for (int c = 0; c < img.cols(); ++c) {
        double h = 0.0;
        for (int r = 0; r < img.rows(); ++r) {
          if (img(r, c) > 0) h -= img(r, c) * std::log(img(r, c));
        }
        total += h;
        ++columns;
      }
    }
  }
  CHECK(total / columns == doctest::Approx(std::log(64.0)).epsilon(0.05));
}

TEST_CASE("VisualAE gradients match central differences") {
  const auto net = Network<double>::visual(tiny_visual());
  ParamSet<double> params = net.init_params(11);
  Rng rng(17);
  const auto x = random_stochastic<double>(3, 8, 8, rng);
  const auto target = random_stochastic<double>(3, 8, 8, rng);

  ParamSet<double> grads;
  net.loss_and_grad(params, x, target, grads, /*update_stats=*/false);
  const Eigen::VectorXd analytic = flatten(grads);

  auto f = [&](const Eigen::VectorXd& theta) {
    ParamSet<double> p = params;
    unflatten(theta, p);
    typename Network<double>::Workspace ws;
    return net.loss(net.forward(p, x, Mode::kTrain, &ws), target);
  };
  const Eigen::VectorXd numeric = oracle::central_diff(f, flatten(params), 1e-4);
  CHECK(max_rel_error(analytic, numeric, 1e-6) < 1e-3);
}

TEST_CASE("NumAE gradients match central differences") {
  NumAEConfig c;
  c.length = 8;
  const auto net = Network<double>::numeric(c);
  ParamSet<double> params = net.init_params(2);
  Rng rng(4);
  Tensor<double> x(4, {1, 1, 8}), t(4, {1, 1, 8});
  for (Eigen::Index i = 0; i < x.data.size(); ++i) {
    x.data[i] = rng.uniform();
    t.data[i] = rng.uniform(-2.0, 2.0);
  }
  ParamSet<double> grads;
  net.loss_and_grad(params, x, t, grads, false);
  auto f = [&](const Eigen::VectorXd& theta) {
    ParamSet<double> p = params;
    unflatten(theta, p);
    typename Network<double>::Workspace ws;
    return net.loss(net.forward(p, x, Mode::kTrain, &ws), t);
  };
  CHECK(max_rel_error(flatten(grads), oracle::central_diff(f, flatten(params), 1e-4), 1e-6) < 1e-3);
}

TEST_CASE("zero loss gives a zero softmax-input gradient") {
  const auto net = Network<double>::visual(tiny_visual());
  ParamSet<double> params = net.init_params(1);
  Rng rng(2);
  const auto x = random_stochastic<double>(2, 8, 8, rng);
  typename Network<double>::Workspace ws;
  const auto out = net.forward(params, x, Mode::kTrain, &ws);
  Tensor<double> dout;
  CHECK(net.loss(out, out, &dout) == 0.0);
  const auto& softmax = *net.layers().back();
  const auto dz = softmax.backward(params, dout, ws.caches.back(), params);
  CHECK(dz.data.norm() <= 1e-9);
}

TEST_CASE("gradients are deterministic per seed and batch") {
  const auto net = Network<double>::visual(tiny_visual());
  Rng rng(8);
  const auto x = random_stochastic<double>(3, 8, 8, rng);
  const auto t = random_stochastic<double>(3, 8, 8, rng);
  ParamSet<double> p1 = net.init_params(4), p2 = net.init_params(4), g1, g2;
  net.loss_and_grad(p1, x, t, g1);
  net.loss_and_grad(p2, x, t, g2);
  CHECK(g1 == g2);
  CHECK(p1 == p2);
}

TEST_CASE("NumAE forward on a constant batch stays finite") {
  NumAEConfig c;
  c.length = 16;
  const auto net = Network<float>::numeric(c);
  const auto p = net.init_params(0);
  Tensor<float> x(4, {1, 1, 16});
  x.data.setConstant(0.5f);
  const auto y = net.forward(p, x, Mode::kInference);
  CHECK(y.data.allFinite());
  ParamSet<float> g;
  ParamSet<float> pt = p;
  net.loss_and_grad(pt, x, x, g);
  CHECK(g.all_finite());
  CHECK(net.forward(p, x, Mode::kInference).data == y.data);
}

TEST_CASE("shape mismatch is rejected") {
  const auto net = Network<float>::visual(tiny_visual());
  Tensor<float> x(1, {1, 16, 16});
  CHECK_THROWS_AS(net.forward(net.init_params(0), x, Mode::kInference), DataError);
}
