#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "vforecast/params.hpp"
#include "vforecast/rng.hpp"
#include "vforecast/tensor.hpp"

namespace vforecast {

enum class Mode { kTrain, kInference };

/// Activations a layer keeps from forward for its backward pass.
template <typename Scalar>
struct LayerCache {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Tensor<Scalar> x;  // input (or normalized input for batch norm)
  Tensor<Scalar> y;  // output, where backward needs it
  Vec mean, var, inv_std;
};

template <typename Scalar>
class Layer {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  virtual ~Layer() = default;

  virtual std::string describe() const = 0;
  virtual Shape output_shape(const Shape& in) const = 0;

  /// Appends this layer's parameters and buffers, with zero values.
  virtual void declare(ParamSet<Scalar>& /*layout*/, const std::string& /*prefix*/) {}

  /// Fills declared parameters; called once per layer with a per-layer stream.
  virtual void initialize(ParamSet<Scalar>& /*params*/, Rng& /*rng*/) const {}

  /// `cache` may be null in inference mode.
  virtual Tensor<Scalar> forward(const ParamSet<Scalar>& params, const Tensor<Scalar>& x,
                                 Mode mode, LayerCache<Scalar>* cache) const = 0;

  /// Accumulates parameter gradients into `grads`, returns d loss / d input.
  virtual Tensor<Scalar> backward(const ParamSet<Scalar>& params, const Tensor<Scalar>& dy,
                                  const LayerCache<Scalar>& cache,
                                  ParamSet<Scalar>& grads) const = 0;

  /// Folds training-mode batch statistics into running buffers.
  virtual void update_buffers(ParamSet<Scalar>& /*params*/,
                              const LayerCache<Scalar>& /*cache*/) const {}
};

/// Kernel/stride/padding along both image axes.
struct ConvGeometry {
  int kh = 5, kw = 5;
  int sh = 2, sw = 2;
  int ph = 2, pw = 2;

  int out_h(int h) const { return (h + 2 * ph - kh) / sh + 1; }
  int out_w(int w) const { return (w + 2 * pw - kw) / sw + 1; }
  int taps() const { return kh * kw; }
};

namespace detail {

/// Patch matrix: row = output pixel (oy * wo + ox), column = (ci * kh + ky) * kw + kx.
template <typename Scalar, typename In>
void im2col(const In& x, int h, int w, int channels, const ConvGeometry& g, int ho, int wo,
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& col) {
  col.setZero(static_cast<Eigen::Index>(ho) * wo, static_cast<Eigen::Index>(channels) * g.taps());
  for (int ci = 0; ci < channels; ++ci) {
    const Scalar* plane = x.col(ci).data();
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        Scalar* dst = col.col((ci * g.kh + ky) * g.kw + kx).data();
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.sh - g.ph + ky;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.sw - g.pw + kx;
            if (ix >= 0 && ix < w) dst[oy * wo + ox] = plane[iy * w + ix];
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatters patch rows back onto an (h*w) x channels image.
template <typename Scalar, typename Out>
void col2im(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& col, int h, int w,
            int channels, const ConvGeometry& g, int ho, int wo, Out&& x) {
  x.setZero();
  for (int ci = 0; ci < channels; ++ci) {
    Scalar* plane = x.col(ci).data();
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const Scalar* src = col.col((ci * g.kh + ky) * g.kw + kx).data();
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.sh - g.ph + ky;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.sw - g.pw + kx;
            if (ix >= 0 && ix < w) plane[iy * w + ix] += src[oy * wo + ox];
          }
        }
      }
    }
  }
}

template <typename Scalar>
void fill_uniform(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m, double bound, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
  }
}

}  // namespace detail

/// Strided 2-D convolution. Weight is (in * kh * kw) x out.
template <typename Scalar>
class Conv2d final : public Layer<Scalar> {
 public:
  using typename Layer<Scalar>::Mat;

  Conv2d(int in_channels, int out_channels, ConvGeometry g)
      : in_(in_channels), out_(out_channels), g_(g) {}

  std::string describe() const override {
    return "conv(" + std::to_string(in_) + "->" + std::to_string(out_) + ",k" +
           std::to_string(g_.kh) + "x" + std::to_string(g_.kw) + ",s" + std::to_string(g_.sh) +
           "x" + std::to_string(g_.sw) + ",p" + std::to_string(g_.ph) + "x" + std::to_string(g_.pw) + ")";
  }

  Shape output_shape(const Shape& in) const override {
    if (in.c != in_) throw ConfigError(describe() + ": input has " + std::to_string(in.c) + " channels");
    return {out_, g_.out_h(in.h), g_.out_w(in.w)};
  }

  void declare(ParamSet<Scalar>& layout, const std::string& prefix) override {
    weight_ = static_cast<int>(layout.params.size());
    layout.params.push_back({prefix + ".weight", Mat::Zero(in_ * g_.taps(), out_)});
    layout.params.push_back({prefix + ".bias", Mat::Zero(1, out_)});
  }

  void initialize(ParamSet<Scalar>& p, Rng& rng) const override {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ * g_.taps()));
    detail::fill_uniform(p[weight_], bound, rng);
    detail::fill_uniform(p[weight_ + 1], bound, rng);
  }

  Tensor<Scalar> forward(const ParamSet<Scalar>& p, const Tensor<Scalar>& x, Mode,
                         LayerCache<Scalar>* cache) const override {
    const Shape os = output_shape(x.shape);
    Tensor<Scalar> y(x.n, os);
    Mat col;
    for (int i = 0; i < x.n; ++i) {
      detail::im2col(x.example(i), x.shape.h, x.shape.w, in_, g_, os.h, os.w, col);
      auto yi = y.example(i);
      yi.noalias() = col * p[weight_];
      yi.rowwise() += p[weight_ + 1].row(0);
    }
    if (cache) cache->x = x;
    return y;
  }

  Tensor<Scalar> backward(const ParamSet<Scalar>& p, const Tensor<Scalar>& dy,
                          const LayerCache<Scalar>& cache, ParamSet<Scalar>& grads) const override {
    const Tensor<Scalar>& x = cache.x;
    Tensor<Scalar> dx(x.n, x.shape);
    Mat col, dcol;
    for (int i = 0; i < x.n; ++i) {
      const auto dyi = dy.example(i);
      detail::im2col(x.example(i), x.shape.h, x.shape.w, in_, g_, dy.shape.h, dy.shape.w, col);
      grads[weight_].noalias() += col.transpose() * dyi;
      grads[weight_ + 1] += dyi.colwise().sum();
      dcol.noalias() = dyi * p[weight_].transpose();
      detail::col2im(dcol, x.shape.h, x.shape.w, in_, g_, dy.shape.h, dy.shape.w, dx.example(i));
    }
    return dx;
  }

 private:
  int in_, out_;
  ConvGeometry g_;
  int weight_ = -1;
};

/// Transposed convolution (adjoint of Conv2d), with per-axis output padding so
/// that a stride-2 stage exactly doubles the resolution. Weight is
/// in x (out * kh * kw).
template <typename Scalar>
class ConvTranspose2d final : public Layer<Scalar> {
 public:
  using typename Layer<Scalar>::Mat;

  ConvTranspose2d(int in_channels, int out_channels, ConvGeometry g, int out_pad_h, int out_pad_w)
      : in_(in_channels), out_(out_channels), g_(g), oph_(out_pad_h), opw_(out_pad_w) {}

  std::string describe() const override {
    return "convT(" + std::to_string(in_) + "->" + std::to_string(out_) + ",k" +
           std::to_string(g_.kh) + "x" + std::to_string(g_.kw) + ",s" + std::to_string(g_.sh) +
           "x" + std::to_string(g_.sw) + ",p" + std::to_string(g_.ph) + "x" + std::to_string(g_.pw) +
           ",op" + std::to_string(oph_) + "x" + std::to_string(opw_) + ")";
  }

  Shape output_shape(const Shape& in) const override {
    if (in.c != in_) throw ConfigError(describe() + ": input has " + std::to_string(in.c) + " channels");
    return {out_, (in.h - 1) * g_.sh - 2 * g_.ph + g_.kh + oph_,
            (in.w - 1) * g_.sw - 2 * g_.pw + g_.kw + opw_};
  }

  void declare(ParamSet<Scalar>& layout, const std::string& prefix) override {
    weight_ = static_cast<int>(layout.params.size());
    layout.params.push_back({prefix + ".weight", Mat::Zero(in_, out_ * g_.taps())});
    layout.params.push_back({prefix + ".bias", Mat::Zero(1, out_)});
  }

  void initialize(ParamSet<Scalar>& p, Rng& rng) const override {
    const double bound = 1.0 / std::sqrt(static_cast<double>(out_ * g_.taps()));
    detail::fill_uniform(p[weight_], bound, rng);
    detail::fill_uniform(p[weight_ + 1], bound, rng);
  }

  Tensor<Scalar> forward(const ParamSet<Scalar>& p, const Tensor<Scalar>& x, Mode,
                         LayerCache<Scalar>* cache) const override {
    const Shape os = output_shape(x.shape);
    Tensor<Scalar> y(x.n, os);
    Mat col;
    for (int i = 0; i < x.n; ++i) {
      col.noalias() = x.example(i) * p[weight_];
      auto yi = y.example(i);
      detail::col2im(col, os.h, os.w, out_, g_, x.shape.h, x.shape.w, yi);
      yi.rowwise() += p[weight_ + 1].row(0);
    }
    if (cache) cache->x = x;
    return y;
  }

  Tensor<Scalar> backward(const ParamSet<Scalar>& p, const Tensor<Scalar>& dy,
                          const LayerCache<Scalar>& cache, ParamSet<Scalar>& grads) const override {
    const Tensor<Scalar>& x = cache.x;
    Tensor<Scalar> dx(x.n, x.shape);
    Mat dcol;
    for (int i = 0; i < x.n; ++i) {
      const auto dyi = dy.example(i);
      detail::im2col(dyi, dy.shape.h, dy.shape.w, out_, g_, x.shape.h, x.shape.w, dcol);
      grads[weight_].noalias() += x.example(i).transpose() * dcol;
      grads[weight_ + 1] += dyi.colwise().sum();
      dx.example(i).noalias() = dcol * p[weight_].transpose();
    }
    return dx;
  }

 private:
  int in_, out_;
  ConvGeometry g_;
  int oph_, opw_;
  int weight_ = -1;
};

/// Per-channel batch normalization. Training mode normalizes with biased batch
/// statistics; inference uses running averages (unbiased variance).
template <typename Scalar>
class BatchNorm final : public Layer<Scalar> {
 public:
  using typename Layer<Scalar>::Mat;
  using typename Layer<Scalar>::Vec;

  explicit BatchNorm(int channels, double momentum = 0.1, double eps = 1e-5)
      : channels_(channels), momentum_(momentum), eps_(eps) {}

  std::string describe() const override { return "bn(" + std::to_string(channels_) + ")"; }

  Shape output_shape(const Shape& in) const override {
    if (in.c != channels_) throw ConfigError(describe() + ": channel mismatch");
    return in;
  }

  void declare(ParamSet<Scalar>& layout, const std::string& prefix) override {
    gamma_ = static_cast<int>(layout.params.size());
    layout.params.push_back({prefix + ".gamma", Mat::Ones(1, channels_)});
    layout.params.push_back({prefix + ".beta", Mat::Zero(1, channels_)});
    running_ = static_cast<int>(layout.buffers.size());
    layout.buffers.push_back({prefix + ".running_mean", Mat::Zero(1, channels_)});
    layout.buffers.push_back({prefix + ".running_var", Mat::Ones(1, channels_)});
  }

  void initialize(ParamSet<Scalar>& p, Rng&) const override {
    p[gamma_].setOnes();
    p[gamma_ + 1].setZero();
    p.buffers[running_].value.setZero();
    p.buffers[running_ + 1].value.setOnes();
  }

  Tensor<Scalar> forward(const ParamSet<Scalar>& p, const Tensor<Scalar>& x, Mode mode,
                         LayerCache<Scalar>* cache) const override {
    const Eigen::Index count = static_cast<Eigen::Index>(x.n) * x.pixels();
    Vec mean, var;
    if (mode == Mode::kTrain) {
      mean = Vec::Zero(channels_);
      var = Vec::Zero(channels_);
      for (int i = 0; i < x.n; ++i) mean += x.example(i).colwise().sum().transpose();
      mean /= Scalar(count);
      for (int i = 0; i < x.n; ++i) {
        var += (x.example(i).rowwise() - mean.transpose()).array().square().matrix().colwise().sum().transpose();
      }
      var /= Scalar(count);
    } else {
      mean = p.buffers[running_].value.row(0).transpose();
      var = p.buffers[running_ + 1].value.row(0).transpose();
    }
    const Vec inv_std = (var.array() + Scalar(eps_)).rsqrt().matrix();
    Tensor<Scalar> xhat(x.n, x.shape), y(x.n, x.shape);
    const auto gamma = p[gamma_].row(0).array();
    const auto beta = p[gamma_ + 1].row(0).array();
    for (int i = 0; i < x.n; ++i) {
      auto xh = xhat.example(i);
      xh = ((x.example(i).rowwise() - mean.transpose()).array().rowwise() * inv_std.transpose().array()).matrix();
      y.example(i) = ((xh.array().rowwise() * gamma).rowwise() + beta).matrix();
    }
    if (cache) {
      cache->x = std::move(xhat);
      cache->mean = mean;
      cache->var = var;
      cache->inv_std = inv_std;
    }
    return y;
  }

  Tensor<Scalar> backward(const ParamSet<Scalar>& p, const Tensor<Scalar>& dy,
                          const LayerCache<Scalar>& cache, ParamSet<Scalar>& grads) const override {
    const Tensor<Scalar>& xhat = cache.x;
    const Scalar count = Scalar(static_cast<Eigen::Index>(dy.n) * dy.pixels());
    Vec sum_dy = Vec::Zero(channels_), sum_dy_xhat = Vec::Zero(channels_);
    for (int i = 0; i < dy.n; ++i) {
      sum_dy += dy.example(i).colwise().sum().transpose();
      sum_dy_xhat += dy.example(i).cwiseProduct(xhat.example(i)).colwise().sum().transpose();
    }
    grads[gamma_] += sum_dy_xhat.transpose();
    grads[gamma_ + 1] += sum_dy.transpose();
    // dx = gamma * inv_std / m * (m dy - sum(dy) - xhat sum(dy xhat))
    const Vec scale = (p[gamma_].row(0).transpose().array() * cache.inv_std.array() / count).matrix();
    Tensor<Scalar> dx(dy.n, dy.shape);
    for (int i = 0; i < dy.n; ++i) {
      auto d = dx.example(i);
      d = (count * dy.example(i).array()).matrix();
      d.rowwise() -= sum_dy.transpose();
      d -= (xhat.example(i).array().rowwise() * sum_dy_xhat.transpose().array()).matrix();
      d = (d.array().rowwise() * scale.transpose().array()).matrix();
    }
    return dx;
  }

  void update_buffers(ParamSet<Scalar>& p, const LayerCache<Scalar>& cache) const override {
    if (cache.mean.size() != channels_) return;
    const Scalar m = Scalar(momentum_);
    const Scalar count = Scalar(static_cast<Eigen::Index>(cache.x.n) * cache.x.pixels());
    const Vec unbiased = count > Scalar(1) ? Vec(cache.var * (count / (count - Scalar(1)))) : cache.var;
    auto& rm = p.buffers[running_].value;
    auto& rv = p.buffers[running_ + 1].value;
    rm = (Scalar(1) - m) * rm + m * cache.mean.transpose();
    rv = (Scalar(1) - m) * rv + m * unbiased.transpose();
  }

 private:
  int channels_;
  double momentum_, eps_;
  int gamma_ = -1, running_ = -1;
};

template <typename Scalar>
class ReLU final : public Layer<Scalar> {
 public:
  std::string describe() const override { return "relu"; }
  Shape output_shape(const Shape& in) const override { return in; }

  Tensor<Scalar> forward(const ParamSet<Scalar>&, const Tensor<Scalar>& x, Mode,
                         LayerCache<Scalar>* cache) const override {
    Tensor<Scalar> y = x;
    y.data = y.data.cwiseMax(Scalar(0));
    if (cache) cache->y = y;
    return y;
  }

  Tensor<Scalar> backward(const ParamSet<Scalar>&, const Tensor<Scalar>& dy,
                          const LayerCache<Scalar>& cache, ParamSet<Scalar>&) const override {
    Tensor<Scalar> dx = dy;
    dx.data = (cache.y.data.array() > Scalar(0)).select(dy.data, Scalar(0));
    return dx;
  }
};

/// Fully connected layer over the flattened example. Weight is out x in.
template <typename Scalar>
class Linear final : public Layer<Scalar> {
 public:
  using typename Layer<Scalar>::Mat;

  Linear(int in_features, int out_features) : in_(in_features), out_(out_features) {}

  std::string describe() const override {
    return "linear(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
  }

  Shape output_shape(const Shape& in) const override {
    if (in.size() != in_) throw ConfigError(describe() + ": input has " + std::to_string(in.size()) + " features");
    return {out_, 1, 1};
  }

  void declare(ParamSet<Scalar>& layout, const std::string& prefix) override {
    weight_ = static_cast<int>(layout.params.size());
    layout.params.push_back({prefix + ".weight", Mat::Zero(out_, in_)});
    layout.params.push_back({prefix + ".bias", Mat::Zero(out_, 1)});
  }

  void initialize(ParamSet<Scalar>& p, Rng& rng) const override {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    detail::fill_uniform(p[weight_], bound, rng);
    detail::fill_uniform(p[weight_ + 1], bound, rng);
  }

  Tensor<Scalar> forward(const ParamSet<Scalar>& p, const Tensor<Scalar>& x, Mode,
                         LayerCache<Scalar>* cache) const override {
    Tensor<Scalar> y(x.n, {out_, 1, 1});
    y.columns().noalias() = p[weight_] * x.columns();
    y.columns().colwise() += p[weight_ + 1].col(0);
    if (cache) cache->x = x;
    return y;
  }

  Tensor<Scalar> backward(const ParamSet<Scalar>& p, const Tensor<Scalar>& dy,
                          const LayerCache<Scalar>& cache, ParamSet<Scalar>& grads) const override {
    grads[weight_].noalias() += dy.columns() * cache.x.columns().transpose();
    grads[weight_ + 1] += dy.columns().rowwise().sum();
    Tensor<Scalar> dx(dy.n, cache.x.shape);
    dx.columns().noalias() = p[weight_].transpose() * dy.columns();
    return dx;
  }

 private:
  int in_, out_;
  int weight_ = -1;
};

/// Reinterprets each example with a new shape of equal size.
template <typename Scalar>
class Reshape final : public Layer<Scalar> {
 public:
  explicit Reshape(Shape to) : to_(to) {}

  std::string describe() const override { return "reshape(" + to_.str() + ")"; }

  Shape output_shape(const Shape& in) const override {
    if (in.size() != to_.size()) throw ConfigError(describe() + ": size mismatch with " + in.str());
    return to_;
  }

  Tensor<Scalar> forward(const ParamSet<Scalar>&, const Tensor<Scalar>& x, Mode,
                         LayerCache<Scalar>* cache) const override {
    if (cache) cache->x.shape = x.shape;
    Tensor<Scalar> y = x;
    y.shape = output_shape(x.shape);
    return y;
  }

  Tensor<Scalar> backward(const ParamSet<Scalar>&, const Tensor<Scalar>& dy,
                          const LayerCache<Scalar>& cache, ParamSet<Scalar>&) const override {
    Tensor<Scalar> dx = dy;
    dx.shape = cache.x.shape;
    return dx;
  }

 private:
  Shape to_;
};

/// Softmax down every image column of a single-channel map, turning logits
/// into per-column distributions over rows.
template <typename Scalar>
class ColumnSoftmax final : public Layer<Scalar> {
 public:
  std::string describe() const override { return "column_softmax"; }

  Shape output_shape(const Shape& in) const override {
    if (in.c != 1) throw ConfigError("column softmax expects one channel");
    return in;
  }

  Tensor<Scalar> forward(const ParamSet<Scalar>&, const Tensor<Scalar>& x, Mode,
                         LayerCache<Scalar>* cache) const override {
    Tensor<Scalar> y(x.n, x.shape);
    const int h = x.shape.h, w = x.shape.w;
    for (int i = 0; i < x.n; ++i) {
      const Scalar* in = x.data.data() + i * x.shape.size();
      Scalar* out = y.data.data() + i * x.shape.size();
      for (int c = 0; c < w; ++c) {
        Scalar mx = in[c];
        for (int r = 1; r < h; ++r) mx = std::max(mx, in[r * w + c]);
        Scalar sum(0);
        for (int r = 0; r < h; ++r) {
          out[r * w + c] = std::exp(in[r * w + c] - mx);
          sum += out[r * w + c];
        }
        for (int r = 0; r < h; ++r) out[r * w + c] /= sum;
      }
    }
    if (cache) cache->y = y;
    return y;
  }

  Tensor<Scalar> backward(const ParamSet<Scalar>&, const Tensor<Scalar>& dy,
                          const LayerCache<Scalar>& cache, ParamSet<Scalar>&) const override {
    Tensor<Scalar> dx(dy.n, dy.shape);
    const int h = dy.shape.h, w = dy.shape.w;
    for (int i = 0; i < dy.n; ++i) {
      const Scalar* q = cache.y.data.data() + i * dy.shape.size();
      const Scalar* g = dy.data.data() + i * dy.shape.size();
      Scalar* out = dx.data.data() + i * dy.shape.size();
      for (int c = 0; c < w; ++c) {
        Scalar dot(0);
        for (int r = 0; r < h; ++r) dot += q[r * w + c] * g[r * w + c];
        for (int r = 0; r < h; ++r) out[r * w + c] = q[r * w + c] * (g[r * w + c] - dot);
      }
    }
    return dx;
  }
};

}  // namespace vforecast
