#include "vforecast/divergence.hpp"

namespace vforecast {

double huber(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
             double delta) {
  if (a.size() != b.size()) throw DataError("huber: length mismatch");
  if (!(delta > 0.0)) throw ConfigError("huber: delta must be positive");
  if (a.size() == 0) return 0.0;
  Eigen::VectorXd grad(a.size());
  return huber_with_grad<double>(a, b, delta, grad);
}

}  // namespace vforecast
