#pragma once

#include <Eigen/Dense>
#include <string>

#include "extremal/errors.hpp"

namespace extremal {

// A finite stretch of observations X_1, ..., X_n plus ingest provenance.
struct TimeSeries {
  Eigen::ArrayXd values;
  std::string source;
  bool negated = false;

  Eigen::Index n() const { return values.size(); }
};

// Validates n >= 1 and that every observation is finite.
TimeSeries make_series(Eigen::ArrayXd values, std::string source = {},
                       bool negated = false);

}  // namespace extremal
