#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "vforecast/binary_io.hpp"
#include "vforecast/error.hpp"
#include "vforecast/network.hpp"

namespace vforecast {

/// Digest of the architecture: config text plus every parameter name and shape.
template <typename Scalar>
std::uint64_t config_digest(const Network<Scalar>& net) {
  std::uint64_t h = fnv1a(net.config_text());
  auto fold = [&](const auto& entries) {
    for (const auto& e : entries) {
      h = fnv1a(e.name, h);
      h = fnv1a(std::to_string(e.value.rows()) + "x" + std::to_string(e.value.cols()), h);
    }
  };
  fold(net.layout().params);
  fold(net.layout().buffers);
  return h;
}

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "VFCK", u32 version, u64 config digest, then parameters and buffers in
/// layout order as little-endian float32 (each matrix column-major).
template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const Network<Scalar>& net,
                     const ParamSet<Scalar>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write("VFCK", 4);
  io::put_u32(out, kCheckpointVersion);
  io::put_u64(out, config_digest(net));
  auto write = [&](const auto& entries) {
    for (const auto& e : entries) {
      for (Eigen::Index i = 0; i < e.value.size(); ++i) io::put_f32(out, static_cast<float>(e.value.data()[i]));
    }
  };
  write(params.params);
  write(params.buffers);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

template <typename Scalar>
ParamSet<Scalar> load_checkpoint(const std::filesystem::path& path, const Network<Scalar>& net) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != "VFCK") throw DataError(path.string() + " is not a checkpoint");
  if (io::get_u32(in) != kCheckpointVersion) throw DataError("unsupported checkpoint version in " + path.string());
  if (io::get_u64(in) != config_digest(net)) {
    throw ConfigError("checkpoint " + path.string() + " was written for a different model config");
  }
  ParamSet<Scalar> p = net.layout();
  auto read = [&](auto& entries) {
    for (auto& e : entries) {
      for (Eigen::Index i = 0; i < e.value.size(); ++i) e.value.data()[i] = static_cast<Scalar>(io::get_f32(in));
    }
  };
  read(p.params);
  read(p.buffers);
  if (!in) throw DataError("truncated checkpoint " + path.string());
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in checkpoint " + path.string());
  return p;
}

}  // namespace vforecast
