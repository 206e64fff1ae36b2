#include "extremal/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace extremal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_series_config(const TimeSeries& series, const BlockConfig& cfg) {
  if (cfg.r < 1 || cfg.r > series.n()) {
    throw InvalidConfigError("block size r must satisfy 1 <= r <= n");
  }
  if (cfg.k != series.n() / cfg.r) {
    throw InvalidConfigError("BlockConfig.k does not equal floor(n/r)");
  }
}

// n - r + 1 window maxima with a monotone queue: indices whose values are
// non-increasing, front always the current window maximum.
Eigen::ArrayXd sliding_maxima(const Eigen::Ref<const Eigen::ArrayXd>& x,
                              Eigen::Index r) {
  const Eigen::Index n = x.size();
  Eigen::ArrayXd out(n - r + 1);
  std::vector<Eigen::Index> q(static_cast<std::size_t>(n));
  Eigen::Index head = 0, tail = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    while (tail > head && x[q[static_cast<std::size_t>(tail - 1)]] <= x[i]) {
      --tail;
    }
    q[static_cast<std::size_t>(tail++)] = i;
    while (q[static_cast<std::size_t>(head)] + r <= i) {
      ++head;
    }
    if (i + 1 >= r) {
      out[i + 1 - r] = x[q[static_cast<std::size_t>(head)]];
    }
  }
  return out;
}

Eigen::ArrayXd disjoint_maxima(const Eigen::Ref<const Eigen::ArrayXd>& x,
                               Eigen::Index r) {
  const Eigen::Index k = x.size() / r;
  Eigen::ArrayXd out(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    out[j] = x.segment(j * r, r).maxCoeff();
  }
  return out;
}

}  // namespace

const char* name(Scheme s) {
  return s == Scheme::disjoint ? "disjoint" : "sliding";
}

const char* name(Mode m) {
  switch (m) {
    case Mode::disjoint: return "disjoint";
    case Mode::sliding: return "sliding";
    default: return "intervals";
  }
}

BlockConfig make_block_config(Eigen::Index r, double u, Eigen::Index n) {
  if (r < 1 || r > n) {
    throw InvalidConfigError("block size r must satisfy 1 <= r <= n");
  }
  if (!std::isfinite(u)) {
    throw InvalidConfigError("threshold u must be finite");
  }
  return BlockConfig{r, u, n / r};
}

Eigen::ArrayXd block_maxima(const Eigen::Ref<const Eigen::ArrayXd>& x,
                            Eigen::Index r, Scheme scheme) {
  if (r < 1 || r > x.size()) {
    throw InvalidConfigError("block size r must satisfy 1 <= r <= n");
  }
  return scheme == Scheme::disjoint ? disjoint_maxima(x, r)
                                    : sliding_maxima(x, r);
}

double fhat(const TimeSeries& series, const BlockConfig& cfg, Scheme scheme) {
  check_series_config(series, cfg);
  const Eigen::ArrayXd maxima = block_maxima(series.values, cfg.r, scheme);
  return static_cast<double>((maxima <= cfg.u).count()) /
         static_cast<double>(maxima.size());
}

double tau_hat(const TimeSeries& series, const BlockConfig& cfg) {
  check_series_config(series, cfg);
  const Eigen::Index rk = cfg.r * cfg.k;
  const auto exceed = (series.values.head(rk) > cfg.u).count();
  return static_cast<double>(exceed) / static_cast<double>(cfg.k);
}

BlockStats compute_block_stats(const TimeSeries& series,
                               const BlockConfig& cfg) {
  check_series_config(series, cfg);
  const Eigen::Index n = series.n();
  const Eigen::Index r = cfg.r;

  BlockStats st;
  st.f_dj = fhat(series, cfg, Scheme::disjoint);
  st.f_sl = fhat(series, cfg, Scheme::sliding);
  st.tau_hat = tau_hat(series, cfg);

  if (n >= 2 * r) {
    const ExcessVariance ev = sliding_excess_variance(series, cfg);
    st.nbar = ev.nbar;
    st.sigma2_hat = ev.sigma2_hat;
    st.has_dispersion = true;
    if (st.tau_hat > 0.0 && st.f_sl > 0.0) {
      const double theta_sl = -std::log(st.f_sl) / st.tau_hat;
      st.c2_hat = (theta_sl / st.tau_hat) * st.sigma2_hat - 1.0;
    } else {
      st.c2_hat = kNaN;
    }
  } else {
    st.nbar = kNaN;
    st.sigma2_hat = kNaN;
    st.c2_hat = kNaN;
  }
  return st;
}

ThetaEstimate theta_from_stats(const BlockStats& stats, Scheme scheme,
                               Eigen::Index k) {
  const double f = scheme == Scheme::disjoint ? stats.f_dj : stats.f_sl;
  if (stats.tau_hat <= 0.0) {
    throw DegenerateThresholdError(
        "no observations exceed the threshold; decrease u", f, stats.tau_hat);
  }
  if (f <= 0.0) {
    throw DegenerateThresholdError(
        "every block maximum exceeds the threshold; increase u", f,
        stats.tau_hat);
  }
  ThetaEstimate est;
  est.mode = to_mode(scheme);
  est.theta_raw = -std::log(f) / stats.tau_hat;
  est.theta_clipped = std::min(est.theta_raw, 1.0);
  est.k = k;
  est.stats = stats;
  return est;
}

ThetaEstimate theta_hat(const TimeSeries& series, const BlockConfig& cfg,
                        Scheme scheme) {
  return theta_from_stats(compute_block_stats(series, cfg), scheme, cfg.k);
}

double select_threshold(const TimeSeries& series, Eigen::Index r, double tau) {
  if (!(tau > 0.0)) {
    throw InvalidConfigError("tau must be positive");
  }
  const Eigen::Index n = series.n();
  if (r < 1 || r > n) {
    throw InvalidConfigError("block size r must satisfy 1 <= r <= n");
  }
  const Eigen::Index k = n / r;
  const double m_real = std::floor(static_cast<double>(k) * tau);
  const auto m = static_cast<Eigen::Index>(
      std::clamp(m_real, 1.0, static_cast<double>(n)));

  std::vector<double> sorted(series.values.data(), series.values.data() + n);
  // m-th largest = element at index m-1 in descending order
  std::nth_element(sorted.begin(), sorted.begin() + (m - 1), sorted.end(),
                   std::greater<double>());
  return sorted[static_cast<std::size_t>(m - 1)];
}

Eigen::ArrayXi window_excess_counts(const Eigen::Ref<const Eigen::ArrayXd>& x,
                                    Eigen::Index r, double u) {
  const Eigen::Index n = x.size();
  if (r < 1 || r > n) {
    throw InvalidConfigError("block size r must satisfy 1 <= r <= n");
  }
  // prefix[i] = #{j < i : X_j > u}; window count over [i, i+r) by difference
  std::vector<int> prefix(static_cast<std::size_t>(n + 1), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    prefix[static_cast<std::size_t>(i + 1)] =
        prefix[static_cast<std::size_t>(i)] + (x[i] > u ? 1 : 0);
  }
  Eigen::ArrayXi counts(n - r + 1);
  for (Eigen::Index i = 0; i + r <= n; ++i) {
    counts[i] = prefix[static_cast<std::size_t>(i + r)] -
                prefix[static_cast<std::size_t>(i)];
  }
  return counts;
}

ExcessVariance sliding_excess_variance(const TimeSeries& series,
                                       const BlockConfig& cfg) {
  check_series_config(series, cfg);
  const Eigen::Index n = series.n();
  const Eigen::Index r = cfg.r;
  if (n < 2 * r) {
    throw InsufficientDataError(
        "sliding-window variance needs n >= 2r (denominator n - 2r + 1)");
  }

  const Eigen::ArrayXi counts = window_excess_counts(series.values, r, cfg.u);
  const double nbar =
      counts.cast<double>().sum() / static_cast<double>(counts.size());
  const double ss = (counts.cast<double>() - nbar).square().sum();
  return ExcessVariance{nbar, ss / static_cast<double>(n - 2 * r + 1)};
}

double c2_hat(const TimeSeries& series, const BlockConfig& cfg) {
  const BlockStats st = compute_block_stats(series, cfg);
  if (!st.has_dispersion) {
    throw InsufficientDataError(
        "sliding-window variance needs n >= 2r (denominator n - 2r + 1)");
  }
  // same degeneracy contract as the sliding-blocks estimator itself
  theta_from_stats(st, Scheme::sliding, cfg.k);
  return st.c2_hat;
}

ThetaEstimate intervals_estimator(const TimeSeries& series, double u) {
  std::vector<Eigen::Index> pos;
  for (Eigen::Index i = 0; i < series.n(); ++i) {
    if (series.values[i] > u) {
      pos.push_back(i);
    }
  }
  const auto count = static_cast<Eigen::Index>(pos.size());
  if (count < 2) {
    throw InsufficientExceedancesError(
        "intervals estimator needs at least two exceedances");
  }

  double sum_t = 0.0, sum_t2 = 0.0, sum_s = 0.0, sum_s12 = 0.0;
  Eigen::Index max_gap = 0;
  for (std::size_t i = 0; i + 1 < pos.size(); ++i) {
    const Eigen::Index t = pos[i + 1] - pos[i];
    max_gap = std::max(max_gap, t);
    const double td = static_cast<double>(t);
    sum_t += td;
    sum_t2 += td * td;
    sum_s += td - 1.0;
    sum_s12 += (td - 1.0) * (td - 2.0);
  }
  const double pairs = static_cast<double>(count - 1);
  const double theta_star = max_gap <= 2
                                ? 2.0 * sum_t * sum_t / (pairs * sum_t2)
                                : 2.0 * sum_s * sum_s / (pairs * sum_s12);

  ThetaEstimate est;
  est.mode = Mode::intervals;
  est.theta_raw = theta_star;
  est.theta_clipped = std::min(theta_star, 1.0);
  est.k = count;
  return est;
}

}  // namespace extremal
