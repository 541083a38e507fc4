#pragma once

#include <Eigen/Core>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "vforecast/divergence.hpp"
#include "vforecast/layers.hpp"

namespace vforecast {

enum class ModelKind { kVisual, kNumeric };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Where normalization sits relative to the activation in each block.
enum class BlockOrder { kConvNormRelu, kConvReluNorm };

struct VisualAEConfig {
  int height = 64;
  int width = 64;
  std::vector<int> channels{128, 256, 512};
  int kernel = 5;
  int stride = 2;
  int padding = 2;
  int embedding = 512;
  BlockOrder order = BlockOrder::kConvNormRelu;
  bool bottleneck_activation = false;
};

struct NumAEConfig {
  int length = 160;
  int kernel = 5;
  int stride = 2;
  int padding = 2;
  BlockOrder order = BlockOrder::kConvNormRelu;
  bool bottleneck_activation = false;
};

void validate(const VisualAEConfig& config);
void validate(const NumAEConfig& config);

/// Canonical one-line text of a config; hashed into checkpoint digests.
std::string canonical(const VisualAEConfig& config);
std::string canonical(const NumAEConfig& config);

/// A layer stack plus the loss it is trained under.
///
/// VisualAE: loss is the column-wise JSD sum per image. NumAE: mean Huber
/// (delta 1) per series. Both are averaged over the batch.
template <typename Scalar>
class Network {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Workspace {
    std::vector<LayerCache<Scalar>> caches;
  };

  static Network visual(const VisualAEConfig& config);
  static Network numeric(const NumAEConfig& config);

  ModelKind kind() const { return kind_; }
  const Shape& input_shape() const { return input_; }
  const Shape& output_shape() const { return output_; }
  const std::string& config_text() const { return config_text_; }
  const std::vector<std::unique_ptr<Layer<Scalar>>>& layers() const { return layers_; }

  /// Parameter layout with zero values (names and shapes only).
  const ParamSet<Scalar>& layout() const { return layout_; }

  /// Fan-in scaled uniform weights, unit/zero normalization affine terms.
  ParamSet<Scalar> init_params(std::uint64_t seed) const {
    ParamSet<Scalar> p = layout_;
    const Rng root(seed);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Rng r = root.split(i);
      layers_[i]->initialize(p, r);
    }
    return p;
  }

  /// Runs the stack. In training mode `ws` must be non-null and receives the
  /// caches backward needs.
  Tensor<Scalar> forward(const ParamSet<Scalar>& params, const Tensor<Scalar>& x, Mode mode,
                         Workspace* ws = nullptr) const {
    if (!(x.shape == input_)) {
      throw DataError("network expects input " + input_.str() + ", got " + x.shape.str());
    }
    if (ws) ws->caches.assign(layers_.size(), {});
    Tensor<Scalar> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = layers_[i]->forward(params, h, mode, ws ? &ws->caches[i] : nullptr);
    }
    return h;
  }

  /// Back-propagates d loss / d output; returns parameter gradients.
  ParamSet<Scalar> backward(const ParamSet<Scalar>& params, const Tensor<Scalar>& dout,
                            const Workspace& ws) const {
    ParamSet<Scalar> grads = params.zeros_like();
    Tensor<Scalar> g = dout;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      g = layers_[i]->backward(params, g, ws.caches[i], grads);
    }
    return grads;
  }

  void update_buffers(ParamSet<Scalar>& params, const Workspace& ws) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->update_buffers(params, ws.caches[i]);
  }

  /// Per-example losses of `out` against `target`.
  Vec example_losses(const Tensor<Scalar>& out, const Tensor<Scalar>& target) const {
    Vec losses(out.n);
    for (int i = 0; i < out.n; ++i) losses[i] = example_loss(out, target, i, nullptr);
    return losses;
  }

  /// Batch-mean loss; fills `dout` with its gradient when non-null.
  Scalar loss(const Tensor<Scalar>& out, const Tensor<Scalar>& target,
              Tensor<Scalar>* dout = nullptr) const {
    if (out.n != target.n || !(out.shape == target.shape)) {
      throw DataError("loss: output and target shapes differ");
    }
    if (dout) *dout = Tensor<Scalar>(out.n, out.shape);
    Scalar total(0);
    for (int i = 0; i < out.n; ++i) total += example_loss(out, target, i, dout);
    if (dout) dout->data /= Scalar(out.n);
    return total / Scalar(out.n);
  }

  /// Forward in training mode, loss, backward. Running statistics are
  /// updated in `params` when `update_stats` is set.
  Scalar loss_and_grad(ParamSet<Scalar>& params, const Tensor<Scalar>& x,
                       const Tensor<Scalar>& target, ParamSet<Scalar>& grads,
                       bool update_stats = true) const {
    Workspace ws;
    const Tensor<Scalar> out = forward(params, x, Mode::kTrain, &ws);
    Tensor<Scalar> dout;
    const Scalar value = loss(out, target, &dout);
    grads = backward(params, dout, ws);
    if (update_stats) update_buffers(params, ws);
    return value;
  }

  /// Layer-by-layer shapes and parameter counts.
  std::string describe() const {
    std::ostringstream os;
    Shape s = input_;
    os << to_string(kind_) << " input " << s.str() << "\n";
    for (const auto& layer : layers_) {
      s = layer->output_shape(s);
      os << "  " << layer->describe() << " -> " << s.str() << "\n";
    }
    os << "parameters " << layout_.parameter_count() << "\n";
    return os.str();
  }

 private:
  Scalar example_loss(const Tensor<Scalar>& out, const Tensor<Scalar>& target, int i,
                      Tensor<Scalar>* dout) const {
    const Eigen::Index n = out.shape.size();
    if (kind_ == ModelKind::kNumeric) {
      Vec grad(n);
      const Scalar v = huber_with_grad<Scalar>(out.data.segment(i * n, n),
                                               target.data.segment(i * n, n), Scalar(1), grad);
      if (dout) dout->data.segment(i * n, n) = grad;
      return v;
    }
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const int h = out.shape.h, w = out.shape.w;
    // Row-major example storage viewed as h x w.
    using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> q(out.data.data() + i * n, h, w);
    Eigen::Map<const RowMat> p(target.data.data() + i * n, h, w);
    Scalar total(0);
    Mat g(h, 1);
    for (int c = 0; c < w; ++c) {
      total += jsd(p.col(c), q.col(c));
      if (dout) {
        jsd_grad_q(p.col(c), q.col(c), g.col(0));
        Eigen::Map<RowMat> d(dout->data.data() + i * n, h, w);
        d.col(c) = g.col(0);
      }
    }
    return total;
  }

  void add(std::unique_ptr<Layer<Scalar>> layer) {
    const std::string prefix = std::to_string(layers_.size()) + "." +
                               layer->describe().substr(0, layer->describe().find('('));
    layer->declare(layout_, prefix);
    output_ = layer->output_shape(output_);
    layers_.push_back(std::move(layer));
  }

  void add_block(std::unique_ptr<Layer<Scalar>> affine, int channels, BlockOrder order) {
    add(std::move(affine));
    if (order == BlockOrder::kConvNormRelu) {
      add(std::make_unique<BatchNorm<Scalar>>(channels));
      add(std::make_unique<ReLU<Scalar>>());
    } else {
      add(std::make_unique<ReLU<Scalar>>());
      add(std::make_unique<BatchNorm<Scalar>>(channels));
    }
  }

  ModelKind kind_ = ModelKind::kVisual;
  Shape input_, output_;
  std::string config_text_;
  std::vector<std::unique_ptr<Layer<Scalar>>> layers_;
  ParamSet<Scalar> layout_;
};

template <typename Scalar>
Network<Scalar> Network<Scalar>::visual(const VisualAEConfig& cfg) {
  validate(cfg);
  Network net;
  net.kind_ = ModelKind::kVisual;
  net.input_ = net.output_ = {1, cfg.height, cfg.width};
  net.config_text_ = canonical(cfg);
  const ConvGeometry g{cfg.kernel, cfg.kernel, cfg.stride, cfg.stride, cfg.padding, cfg.padding};

  std::vector<Shape> encoder_shapes{net.input_};
  int in = 1;
  for (int ch : cfg.channels) {
    net.add_block(std::make_unique<Conv2d<Scalar>>(in, ch, g), ch, cfg.order);
    encoder_shapes.push_back(net.output_);
    in = ch;
  }
  const Shape bottom = net.output_;
  net.add(std::make_unique<Linear<Scalar>>(static_cast<int>(bottom.size()), cfg.embedding));
  if (cfg.bottleneck_activation) net.add(std::make_unique<ReLU<Scalar>>());
  net.add(std::make_unique<Linear<Scalar>>(cfg.embedding, static_cast<int>(bottom.size())));
  net.add(std::make_unique<Reshape<Scalar>>(bottom));
  if (cfg.order == BlockOrder::kConvNormRelu) {
    net.add(std::make_unique<BatchNorm<Scalar>>(bottom.c));
    net.add(std::make_unique<ReLU<Scalar>>());
  } else {
    net.add(std::make_unique<ReLU<Scalar>>());
    net.add(std::make_unique<BatchNorm<Scalar>>(bottom.c));
  }
  // Mirror: each transposed stage restores the matching encoder resolution.
  for (std::size_t s = cfg.channels.size(); s-- > 0;) {
    const Shape target = encoder_shapes[s];
    const Shape cur = net.output_;
    const int oph = target.h - ((cur.h - 1) * g.sh - 2 * g.ph + g.kh);
    const int opw = target.w - ((cur.w - 1) * g.sw - 2 * g.pw + g.kw);
    auto up = std::make_unique<ConvTranspose2d<Scalar>>(cur.c, target.c, g, oph, opw);
    if (s == 0) {
      net.add(std::move(up));
    } else {
      net.add_block(std::move(up), target.c, cfg.order);
    }
  }
  net.add(std::make_unique<ColumnSoftmax<Scalar>>());
  return net;
}

template <typename Scalar>
Network<Scalar> Network<Scalar>::numeric(const NumAEConfig& cfg) {
  validate(cfg);
  Network net;
  net.kind_ = ModelKind::kNumeric;
  net.input_ = net.output_ = {1, 1, cfg.length};
  net.config_text_ = canonical(cfg);
  const ConvGeometry g{1, cfg.kernel, 1, cfg.stride, 0, cfg.padding};
  const std::vector<int> channels{cfg.length / 2, cfg.length / 4};
  const int embedding = cfg.length / 4;

  std::vector<Shape> encoder_shapes{net.input_};
  int in = 1;
  for (int ch : channels) {
    net.add_block(std::make_unique<Conv2d<Scalar>>(in, ch, g), ch, cfg.order);
    encoder_shapes.push_back(net.output_);
    in = ch;
  }
  const Shape bottom = net.output_;
  net.add(std::make_unique<Linear<Scalar>>(static_cast<int>(bottom.size()), embedding));
  if (cfg.bottleneck_activation) net.add(std::make_unique<ReLU<Scalar>>());
  net.add(std::make_unique<Linear<Scalar>>(embedding, static_cast<int>(bottom.size())));
  net.add(std::make_unique<Reshape<Scalar>>(bottom));
  if (cfg.order == BlockOrder::kConvNormRelu) {
    net.add(std::make_unique<BatchNorm<Scalar>>(bottom.c));
    net.add(std::make_unique<ReLU<Scalar>>());
  } else {
    net.add(std::make_unique<ReLU<Scalar>>());
    net.add(std::make_unique<BatchNorm<Scalar>>(bottom.c));
  }
  for (std::size_t s = channels.size(); s-- > 0;) {
    const Shape target = encoder_shapes[s];
    const Shape cur = net.output_;
    const int opw = target.w - ((cur.w - 1) * g.sw - 2 * g.pw + g.kw);
    auto up = std::make_unique<ConvTranspose2d<Scalar>>(cur.c, target.c, g, 0, opw);
    if (s == 0) {
      net.add(std::move(up));
    } else {
      net.add_block(std::move(up), target.c, cfg.order);
    }
  }
  return net;
}

}  // namespace vforecast
