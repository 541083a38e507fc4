#pragma once

#include <Eigen/Core>
#include <vector>

#include "vforecast/seriesgen.hpp"

inline vforecast::TimeSeries series_of(Eigen::VectorXd values) {
  vforecast::TimeSeries s;
  s.values = std::move(values);
  return s;
}

inline vforecast::TimeSeries series_of(const std::vector<double>& v) {
  return series_of(Eigen::VectorXd(
      Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))));
}
