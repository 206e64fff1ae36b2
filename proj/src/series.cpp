#include "extremal/series.hpp"

#include <utility>

namespace extremal {

TimeSeries make_series(Eigen::ArrayXd values, std::string source,
                       bool negated) {
  if (values.size() < 1) {
    throw InvalidConfigError("time series must hold at least one observation");
  }
  if (!values.isFinite().all()) {
    throw InvalidConfigError("time series contains NaN or infinite values");
  }
  TimeSeries s;
  s.values = std::move(values);
  s.source = std::move(source);
  s.negated = negated;
  return s;
}

}  // namespace extremal
