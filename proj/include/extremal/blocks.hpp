#pragma once

#include <Eigen/Dense>

#include "extremal/errors.hpp"
#include "extremal/series.hpp"

namespace extremal {

// Block maxima can be taken over the k = floor(n/r) disjoint blocks or over
// all n - r + 1 sliding windows.
enum class Scheme { disjoint, sliding };

// Estimator identity as reported downstream; `intervals` is the
// inter-exceedance-time comparison estimator.
enum class Mode { disjoint, sliding, intervals };

constexpr Mode to_mode(Scheme s) {
  return s == Scheme::disjoint ? Mode::disjoint : Mode::sliding;
}
const char* name(Scheme s);
const char* name(Mode m);

// Tuning state of one estimation run: block size r, threshold u and the
// derived disjoint-block count k = floor(n/r).
struct BlockConfig {
  Eigen::Index r = 1;
  double u = 0.0;
  Eigen::Index k = 0;
};

// Throws InvalidConfigError unless 1 <= r <= n and u is finite.
BlockConfig make_block_config(Eigen::Index r, double u, Eigen::Index n);

// Finite-sample statistics of one (series, r, u) combination.
//
// Exceedance is strict (X > u) and the block-maximum comparison is weak
// (M <= u); ties with u count as non-exceedances. tau_hat ignores the
// trailing partial block (sums over the first r*k positions only).
struct BlockStats {
  double f_dj = 0.0;       // fraction of disjoint block maxima <= u
  double f_sl = 0.0;       // fraction of sliding window maxima <= u
  double tau_hat = 0.0;    // mean exceedance count per disjoint block
  double nbar = 0.0;       // mean sliding-window exceedance count
  double sigma2_hat = 0.0; // sliding-window count variance, denominator n-2r+1
  double c2_hat = 0.0;     // (theta_sl/tau_hat)*sigma2_hat - 1, unclipped
  // nbar/sigma2_hat/c2_hat need n >= 2r; they hold NaN when this is false.
  bool has_dispersion = false;
};

struct ThetaEstimate {
  Mode mode = Mode::disjoint;
  double theta_raw = 0.0;     // -log(Fhat)/tauhat, may exceed 1
  double theta_clipped = 0.0; // min(theta_raw, 1)
  Eigen::Index k = 0;         // disjoint blocks used (exceedance count for intervals)
  BlockStats stats;
};

// Maxima of consecutive length-r blocks. Disjoint: k maxima, trailing
// remainder discarded. Sliding: n - r + 1 window maxima via an O(n)
// monotone-queue kernel.
Eigen::ArrayXd block_maxima(const Eigen::Ref<const Eigen::ArrayXd>& x,
                            Eigen::Index r, Scheme scheme);

// Exceedance counts of all n - r + 1 sliding windows, O(n) by prefix sums.
Eigen::ArrayXi window_excess_counts(const Eigen::Ref<const Eigen::ArrayXd>& x,
                                    Eigen::Index r, double u);

// Empirical distribution of the block maximum at u under the chosen scheme.
double fhat(const TimeSeries& series, const BlockConfig& cfg, Scheme scheme);

// Mean exceedance count per block over the first r*k observations.
double tau_hat(const TimeSeries& series, const BlockConfig& cfg);

// All statistics of BlockStats in one pass over the series.
BlockStats compute_block_stats(const TimeSeries& series, const BlockConfig& cfg);

// Builds the estimate from precomputed statistics; throws
// DegenerateThresholdError when tau_hat = 0 (no exceedances; decrease u) or
// Fhat = 0 (every block maximum exceeds; increase u).
ThetaEstimate theta_from_stats(const BlockStats& stats, Scheme scheme,
                               Eigen::Index k);

// Blocks estimator of the extremal index. theta_raw = -log(Fhat)/tauhat.
ThetaEstimate theta_hat(const TimeSeries& series, const BlockConfig& cfg,
                        Scheme scheme);

// The floor(k*tau)-th largest order statistic of the full series, the order
// clamped to [1, n]. Taking the floor is this library's convention for a
// non-integer k*tau.
double select_threshold(const TimeSeries& series, Eigen::Index r, double tau);

struct ExcessVariance {
  double nbar = 0.0;
  double sigma2_hat = 0.0;
};

// Mean and variance of the n - r + 1 sliding-window exceedance counts; the
// variance denominator is n - 2r + 1, so n >= 2r is required.
ExcessVariance sliding_excess_variance(const TimeSeries& series,
                                       const BlockConfig& cfg);

// Sliding-blocks estimator of the squared coefficient of variation of the
// cluster size distribution. May be negative at finite samples; returned
// unclipped.
double c2_hat(const TimeSeries& series, const BlockConfig& cfg);

// Floor applied before feeding c2 into variance/bias formulas.
constexpr double floored_c2(double c2) { return c2 > 0.0 ? c2 : 0.0; }

// Inter-exceedance-time estimator used as a comparison baseline. With
// exceedance positions S_1 < ... < S_N and gaps T_i = S_{i+1} - S_i:
//   max T <= 2:  2 (sum T)^2 / ((N-1) sum T^2)
//   otherwise:   2 (sum (T-1))^2 / ((N-1) sum (T-1)(T-2))
// clipped to (0, 1]. Needs at least two exceedances.
ThetaEstimate intervals_estimator(const TimeSeries& series, double u);

}  // namespace extremal
