#pragma once

#include <Eigen/Core>
#include <cmath>

#include "vforecast/error.hpp"

namespace vforecast {

enum class Distance { kJSD, kKLD };

/// sum_i p_i ln(p_i / q_i) after adding `smoothing` to both vectors and
/// renormalizing. Terms with p_i == 0 contribute nothing.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kld(const Eigen::MatrixBase<DerivedP>& p,
                              const Eigen::MatrixBase<DerivedQ>& q,
                              typename DerivedP::Scalar smoothing = 1e-8) {
  using Scalar = typename DerivedP::Scalar;
  const Eigen::Index n = p.size();
  const Scalar ps = p.sum() + smoothing * Scalar(n);
  const Scalar qs = q.sum() + smoothing * Scalar(n);
  Scalar d(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar pi = (p.coeff(i) + smoothing) / ps;
    const Scalar qi = (q.coeff(i) + smoothing) / qs;
    if (pi > Scalar(0)) d += pi * std::log(pi / qi);
  }
  return d;
}

/// Jensen-Shannon divergence with M = (p + q) / 2, natural log.
/// Evaluated term by term as p ln(2p/(p+q)) + q ln(2q/(p+q)), so swapping the
/// arguments gives the same bits.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar jsd(const Eigen::MatrixBase<DerivedP>& p,
                              const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  Scalar d(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar a = p.coeff(i), b = q.coeff(i);
    const Scalar s = a + b;
    if (!(s > Scalar(0))) continue;
    Scalar ta(0), tb(0);
    if (a > Scalar(0)) ta = a * std::log(Scalar(2) * a / s);
    if (b > Scalar(0)) tb = b * std::log(Scalar(2) * b / s);
    d += (ta + tb);
  }
  d *= Scalar(0.5);
  return d < Scalar(0) ? Scalar(0) : d;
}

/// d jsd(p, q) / d q_i = 0.5 ln(2 q_i / (p_i + q_i)); 0 where q_i == 0.
template <typename DerivedP, typename DerivedQ, typename DerivedG>
void jsd_grad_q(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q,
                Eigen::MatrixBase<DerivedG> const& grad_out) {
  using Scalar = typename DerivedP::Scalar;
  auto& g = const_cast<Eigen::MatrixBase<DerivedG>&>(grad_out);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar a = p.coeff(i), b = q.coeff(i);
    g.coeffRef(i) = b > Scalar(0) ? Scalar(0.5) * std::log(Scalar(2) * b / (a + b)) : Scalar(0);
  }
}

template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar distance(Distance d, const Eigen::MatrixBase<DerivedP>& p,
                                   const Eigen::MatrixBase<DerivedQ>& q) {
  return d == Distance::kJSD ? jsd(p, q) : kld(p, q);
}

/// Sum over columns of d(y_i, yhat_i).
template <typename DerivedY, typename DerivedYhat>
typename DerivedY::Scalar columnwise_loss(const Eigen::MatrixBase<DerivedY>& y,
                                          const Eigen::MatrixBase<DerivedYhat>& yhat,
                                          Distance d = Distance::kJSD) {
  if (y.rows() != yhat.rows() || y.cols() != yhat.cols()) {
    throw DataError("columnwise_loss: image dimensions differ");
  }
  typename DerivedY::Scalar total(0);
  for (Eigen::Index j = 0; j < y.cols(); ++j) total += distance(d, y.col(j), yhat.col(j));
  return total;
}

/// Per-column distances as a row vector.
template <typename DerivedY, typename DerivedYhat>
Eigen::Matrix<typename DerivedY::Scalar, 1, Eigen::Dynamic> columnwise_profile(
    const Eigen::MatrixBase<DerivedY>& y, const Eigen::MatrixBase<DerivedYhat>& yhat,
    Distance d = Distance::kJSD) {
  if (y.rows() != yhat.rows() || y.cols() != yhat.cols()) {
    throw DataError("columnwise_profile: image dimensions differ");
  }
  Eigen::Matrix<typename DerivedY::Scalar, 1, Eigen::Dynamic> out(y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) out[j] = distance(d, y.col(j), yhat.col(j));
  return out;
}

/// Mean elementwise Huber penalty: r^2 / 2 inside delta, delta (|r| - delta/2) outside.
double huber(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
             double delta = 1.0);

/// Elementwise Huber derivative with respect to `a`, divided by the element count.
template <typename Scalar>
Scalar huber_with_grad(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& a,
                       const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& b,
                       Scalar delta, Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> grad) {
  const Eigen::Index n = a.size();
  Scalar total(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar r = a[i] - b[i];
    const Scalar ar = std::abs(r);
    if (ar <= delta) {
      total += Scalar(0.5) * r * r;
      grad[i] = r / Scalar(n);
    } else {
      total += delta * (ar - Scalar(0.5) * delta);
      grad[i] = (r > 0 ? delta : -delta) / Scalar(n);
    }
  }
  return total / Scalar(n);
}

}  // namespace vforecast
