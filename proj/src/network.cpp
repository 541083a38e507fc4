#include "vforecast/network.hpp"

namespace vforecast {

std::string to_string(ModelKind kind) { return kind == ModelKind::kVisual ? "visual" : "numeric"; }

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "visual") return ModelKind::kVisual;
  if (name == "numeric") return ModelKind::kNumeric;
  throw ConfigError("unknown model kind '" + name + "' (expected visual|numeric)");
}

namespace {

// Each transposed stage can only add up to stride - 1 pixels of output
// padding, so the encoder must shrink every axis cleanly.
void check_mirrorable(int size, int kernel, int stride, int padding, std::size_t stages,
                      const char* axis) {
  for (std::size_t s = 0; s < stages; ++s) {
    const int out = (size + 2 * padding - kernel) / stride + 1;
    if (out < 1) throw ConfigError(std::string(axis) + " collapses to zero in the encoder");
    const int pad = size - ((out - 1) * stride - 2 * padding + kernel);
    if (pad < 0 || pad >= stride) {
      throw ConfigError(std::string(axis) + " " + std::to_string(size) +
                        " cannot be mirrored by the decoder");
    }
    size = out;
  }
}

const char* order_name(BlockOrder o) {
  return o == BlockOrder::kConvNormRelu ? "conv-bn-relu" : "conv-relu-bn";
}

}  // namespace

void validate(const VisualAEConfig& c) {
  if (c.channels.empty()) throw ConfigError("VisualAE needs at least one encoder stage");
  for (int ch : c.channels) {
    if (ch < 1) throw ConfigError("VisualAE channel counts must be positive");
  }
  if (c.kernel < 1 || c.stride < 1 || c.padding < 0) throw ConfigError("bad VisualAE geometry");
  check_mirrorable(c.height, c.kernel, c.stride, c.padding, c.channels.size(), "height");
  check_mirrorable(c.width, c.kernel, c.stride, c.padding, c.channels.size(), "width");
  if (c.embedding < 1 || c.embedding >= c.height * c.width) {
    throw ConfigError("VisualAE embedding must be positive and smaller than the image");
  }
}

void validate(const NumAEConfig& c) {
  if (c.length < 8 || c.length % 4 != 0) {
    throw ConfigError("NumAE length must be a multiple of 4 (got " + std::to_string(c.length) + ")");
  }
  if (c.kernel < 1 || c.stride < 1 || c.padding < 0) throw ConfigError("bad NumAE geometry");
  check_mirrorable(c.length, c.kernel, c.stride, c.padding, 2, "length");
}

std::string canonical(const VisualAEConfig& c) {
  std::string s = "visual h=" + std::to_string(c.height) + " w=" + std::to_string(c.width) + " ch=";
  for (std::size_t i = 0; i < c.channels.size(); ++i) {
    s += (i ? "," : "") + std::to_string(c.channels[i]);
  }
  s += " k=" + std::to_string(c.kernel) + " s=" + std::to_string(c.stride) +
       " p=" + std::to_string(c.padding) + " emb=" + std::to_string(c.embedding) +
       " order=" + order_name(c.order) + " bottleneck_relu=" + (c.bottleneck_activation ? "1" : "0");
  return s;
}

std::string canonical(const NumAEConfig& c) {
  return "numeric T=" + std::to_string(c.length) + " k=" + std::to_string(c.kernel) +
         " s=" + std::to_string(c.stride) + " p=" + std::to_string(c.padding) +
         " order=" + order_name(c.order) + " bottleneck_relu=" + (c.bottleneck_activation ? "1" : "0");
}

}  // namespace vforecast
