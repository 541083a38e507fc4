#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace vforecast {

/// Named parameter matrices in a fixed order, followed by non-trainable
/// buffers (normalization running statistics). The order of `params` then
/// `buffers` is the checkpoint flattening order.
template <typename Scalar>
struct ParamSet {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  struct Entry {
    std::string name;
    Mat value;
  };

  std::vector<Entry> params;
  std::vector<Entry> buffers;

  Mat& operator[](int i) { return params[i].value; }
  const Mat& operator[](int i) const { return params[i].value; }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& e : params) n += e.value.size();
    return n;
  }

  /// Same parameter shapes, all zero, no buffers. Used for gradients.
  ParamSet zeros_like() const {
    ParamSet out;
    out.params.reserve(params.size());
    for (const auto& e : params) out.params.push_back({e.name, Mat::Zero(e.value.rows(), e.value.cols())});
    return out;
  }

  void set_zero() {
    for (auto& e : params) e.value.setZero();
  }

  bool all_finite() const {
    for (const auto& e : params) {
      if (!e.value.allFinite()) return false;
    }
    for (const auto& e : buffers) {
      if (!e.value.allFinite()) return false;
    }
    return true;
  }

  template <typename Other>
  ParamSet<Other> cast() const {
    ParamSet<Other> out;
    for (const auto& e : params) out.params.push_back({e.name, e.value.template cast<Other>()});
    for (const auto& e : buffers) out.buffers.push_back({e.name, e.value.template cast<Other>()});
    return out;
  }

  bool operator==(const ParamSet& o) const {
    auto same = [](const std::vector<Entry>& a, const std::vector<Entry>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].name != b[i].name || a[i].value.rows() != b[i].value.rows() ||
            a[i].value.cols() != b[i].value.cols() || a[i].value != b[i].value) {
          return false;
        }
      }
      return true;
    };
    return same(params, o.params) && same(buffers, o.buffers);
  }
};

}  // namespace vforecast
