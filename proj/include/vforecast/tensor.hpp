#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "vforecast/error.hpp"

namespace vforecast {

/// Per-example shape (channels, height, width).
struct Shape {
  int c = 1, h = 1, w = 1;

  Eigen::Index size() const { return static_cast<Eigen::Index>(c) * h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const {
    return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
  }
};

/// Dense NCHW batch. Each example is contiguous, channel planes inside it are
/// contiguous, so `example(i)` views it as a (h*w) x c column-major matrix.
template <typename Scalar>
struct Tensor {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  int n = 0;
  Shape shape;
  Vec data;

  Tensor() = default;
  Tensor(int batch, Shape s) : n(batch), shape(s), data(Vec::Zero(batch * s.size())) {}

  Eigen::Index pixels() const { return static_cast<Eigen::Index>(shape.h) * shape.w; }

  Eigen::Map<Mat> example(int i) {
    return Eigen::Map<Mat>(data.data() + i * shape.size(), pixels(), shape.c);
  }
  Eigen::Map<const Mat> example(int i) const {
    return Eigen::Map<const Mat>(data.data() + i * shape.size(), pixels(), shape.c);
  }

  /// shape.size() x n, one example per column.
  Eigen::Map<Mat> columns() { return Eigen::Map<Mat>(data.data(), shape.size(), n); }
  Eigen::Map<const Mat> columns() const {
    return Eigen::Map<const Mat>(data.data(), shape.size(), n);
  }

  /// Single-channel example i as an h x w image.
  Mat image(int i) const {
    Mat m(shape.h, shape.w);
    const Scalar* p = data.data() + i * shape.size();
    for (int r = 0; r < shape.h; ++r) {
      for (int c = 0; c < shape.w; ++c) m(r, c) = p[r * shape.w + c];
    }
    return m;
  }

  template <typename Derived>
  void set_image(int i, const Eigen::MatrixBase<Derived>& m) {
    Scalar* p = data.data() + i * shape.size();
    for (int r = 0; r < shape.h; ++r) {
      for (int c = 0; c < shape.w; ++c) p[r * shape.w + c] = static_cast<Scalar>(m(r, c));
    }
  }

  /// Copies the listed examples into a new batch.
  Tensor gather(const std::vector<int>& indices) const {
    Tensor out(static_cast<int>(indices.size()), shape);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      out.data.segment(static_cast<Eigen::Index>(k) * shape.size(), shape.size()) =
          data.segment(static_cast<Eigen::Index>(indices[k]) * shape.size(), shape.size());
    }
    return out;
  }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out;
    out.n = n;
    out.shape = shape;
    out.data = data.template cast<Other>();
    return out;
  }
};

}  // namespace vforecast
