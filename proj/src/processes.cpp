#include "extremal/processes.hpp"

#include <cmath>
#include <limits>

#include "extremal/rng.hpp"
#include "extremal/textnum.hpp"

namespace extremal {

namespace {

double frechet(SplitMix64& rng) { return -1.0 / std::log(rng.uniform01()); }

// log F_r(u) per process; keeps theta_r computations in log space
double log_Fr(const ProcessSpec& spec, Eigen::Index r, double u) {
  switch (spec.kind) {
    case ProcessKind::iid_uniform: {
      if (u <= 0.0) return -std::numeric_limits<double>::infinity();
      if (u >= 1.0) return 0.0;
      return static_cast<double>(r) * std::log(u);
    }
    case ProcessKind::iid_frechet:
      return -static_cast<double>(r) / u;
    case ProcessKind::mar:
      return -(1.0 / spec.theta_param + static_cast<double>(r - 1)) / u;
    case ProcessKind::mm:
      return -(static_cast<double>(r) + 1.0) / u;
  }
  throw InvalidConfigError("unsupported process");
}

}  // namespace

double ProcessSpec::theoretical_theta() const {
  switch (kind) {
    case ProcessKind::iid_uniform:
    case ProcessKind::iid_frechet: return 1.0;
    case ProcessKind::mar: return theta_param;
    case ProcessKind::mm: return 0.5;
  }
  throw InvalidConfigError("unsupported process");
}

std::string ProcessSpec::label() const {
  switch (kind) {
    case ProcessKind::iid_uniform: return "iid-uniform";
    case ProcessKind::iid_frechet: return "iid-frechet";
    case ProcessKind::mar: return "mar(" + format_g6(theta_param) + ")";
    case ProcessKind::mm: return "mm";
  }
  throw InvalidConfigError("unsupported process");
}

ProcessSpec iid_uniform() { return ProcessSpec{ProcessKind::iid_uniform, 1.0}; }
ProcessSpec iid_frechet() { return ProcessSpec{ProcessKind::iid_frechet, 1.0}; }

ProcessSpec mar(double theta) {
  if (!(theta > 0.0) || theta > 1.0) {
    throw InvalidConfigError("mar needs theta in (0, 1]");
  }
  return ProcessSpec{ProcessKind::mar, theta};
}

ProcessSpec mm() { return ProcessSpec{ProcessKind::mm, 0.5}; }

ProcessSpec parse_process(const std::string& text) {
  if (text == "iid-uniform" || text == "iid_uniform") return iid_uniform();
  if (text == "iid-frechet" || text == "iid_frechet") return iid_frechet();
  if (text == "mm") return mm();
  // mar:0.5 or mar(0.5)
  if (text.rfind("mar", 0) == 0 && text.size() > 4) {
    std::string arg;
    if (text[3] == ':') {
      arg = text.substr(4);
    } else if (text[3] == '(' && text.back() == ')') {
      arg = text.substr(4, text.size() - 5);
    } else {
      throw InvalidConfigError("cannot parse process '" + text + "'");
    }
    const auto theta = parse_double(arg);
    if (!theta) {
      throw InvalidConfigError("cannot parse mar parameter in '" + text + "'");
    }
    return mar(*theta);
  }
  throw InvalidConfigError("cannot parse process '" + text + "'");
}

ClusterTheory cluster_theory(const ProcessSpec& spec) {
  switch (spec.kind) {
    case ProcessKind::iid_uniform:
    case ProcessKind::iid_frechet:
      return ClusterTheory{1.0, 1.0, 0.0};
    case ProcessKind::mm:
      // every exceedance of W yields exactly two consecutive exceedances of X
      return ClusterTheory{2.0, 4.0, 0.0};
    case ProcessKind::mar: {
      // geometric cluster sizes pi_j = theta (1-theta)^(j-1)
      const double th = spec.theta_param;
      return ClusterTheory{1.0 / th, (2.0 - th) / (th * th), 1.0 - th};
    }
  }
  throw InvalidConfigError("unsupported process");
}

TimeSeries simulate(const ProcessSpec& spec, Eigen::Index n,
                    std::uint64_t seed) {
  if (n < 1) {
    throw InvalidConfigError("simulation length n must be >= 1");
  }
  if (spec.kind == ProcessKind::mar &&
      (!(spec.theta_param > 0.0) || spec.theta_param > 1.0)) {
    throw InvalidConfigError("mar needs theta in (0, 1]");
  }

  SplitMix64 rng(seed);
  Eigen::ArrayXd x(n);
  switch (spec.kind) {
    case ProcessKind::iid_uniform:
      for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform01();
      break;
    case ProcessKind::iid_frechet:
      for (Eigen::Index i = 0; i < n; ++i) x[i] = frechet(rng);
      break;
    case ProcessKind::mar: {
      const double th = spec.theta_param;
      x[0] = frechet(rng) / th;  // stationary start
      for (Eigen::Index i = 1; i < n; ++i) {
        x[i] = std::max((1.0 - th) * x[i - 1], frechet(rng));
      }
      break;
    }
    case ProcessKind::mm: {
      double w_prev = frechet(rng);
      x[0] = 2.0 * w_prev;  // stationary marginal of max(W_{i-1}, W_i)
      for (Eigen::Index i = 1; i < n; ++i) {
        const double w = frechet(rng);
        x[i] = std::max(w_prev, w);
        w_prev = w;
      }
      break;
    }
  }
  TimeSeries s;
  s.values = std::move(x);
  s.source = spec.label();
  return s;
}

double theoretical_Fr(const ProcessSpec& spec, Eigen::Index r, double u) {
  if (r < 1) {
    throw InvalidConfigError("block size r must be >= 1");
  }
  if (spec.kind != ProcessKind::iid_uniform && !(u > 0.0)) {
    throw InvalidConfigError("threshold must be positive for Frechet margins");
  }
  return std::exp(log_Fr(spec, r, u));
}

double theoretical_theta_r(const ProcessSpec& spec, Eigen::Index r,
                           double tau) {
  if (r < 1) {
    throw InvalidConfigError("block size r must be >= 1");
  }
  if (!(tau > 0.0) || tau >= static_cast<double>(r)) {
    throw InvalidConfigError("theta_r needs 0 < tau < r");
  }
  // u_r solves r (1 - F(u_r)) = tau through the marginal's closed form
  const double log_keep = std::log1p(-tau / static_cast<double>(r));
  double u_r;
  switch (spec.kind) {
    case ProcessKind::iid_uniform:
      u_r = 1.0 - tau / static_cast<double>(r);
      break;
    case ProcessKind::iid_frechet:
      u_r = -1.0 / log_keep;
      break;
    case ProcessKind::mar:
      u_r = -1.0 / (spec.theta_param * log_keep);
      break;
    case ProcessKind::mm:
      u_r = -2.0 / log_keep;
      break;
    default:
      throw InvalidConfigError("unsupported process");
  }
  return -log_Fr(spec, r, u_r) / tau;
}

}  // namespace extremal
