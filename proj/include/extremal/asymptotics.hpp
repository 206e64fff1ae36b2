#pragma once

#include <Eigen/Dense>

#include "extremal/blocks.hpp"
#include "extremal/errors.hpp"

namespace extremal {

// The triple (theta, tau, c2) driving every closed-form variance and bias
// expression; alpha = theta * tau is the limiting mean number of clusters
// per block.
struct AsymptoticParams {
  double theta = 1.0;
  double tau = 1.0;
  double c2 = 0.0;

  double alpha() const { return theta * tau; }
  double m1() const { return 1.0 / theta; }
  double m2() const { return (c2 + 1.0) / (theta * theta); }
};

// Validates theta in (0,1], tau > 0, c2 >= 0.
AsymptoticParams make_params(double theta, double tau, double c2);

// Plug-in parameters from an estimate: (theta_clipped, tau_hat, floored c2).
AsymptoticParams plugin_params(const ThetaEstimate& est);

using CovMatrix3 = Eigen::Matrix3d;
using VarMatrix2 = Eigen::Matrix2d;

// Search interval and tolerances shared with the tests.
inline constexpr double kAlphaSearchLo = 0.05;
inline constexpr double kAlphaSearchHi = 10.0;
inline constexpr double kAlphaSearchTol = 1e-6;
inline constexpr double kC2BoundaryCut = 1e-6;
inline constexpr double kCorrectionFloor = 1e-6;

// Limiting covariance of sqrt(k) * (Fhat_dj, Fhat_sl, tauhat):
//   s11 = e^-a (1 - e^-a)
//   s22 = s12 = 2 a^-1 e^-a (1 - (1+a) e^-a)
//   s31 = s32 = -tau e^-a
//   s33 = a m2
CovMatrix3 sigma_matrix(const AsymptoticParams& p);

// Limiting variance of sqrt(k) * (theta_dj - theta, theta_sl - theta):
//   v11 = (theta^2/a^2)(e^a - 1 - a) + theta^2 c2 / a
//   v22 = v12 = (2 theta^2/a^3)(e^a - 1 - a - a^2/2) + theta^2 c2 / a
VarMatrix2 v_matrix(const AsymptoticParams& p);

// Asymptotic variance of sqrt(k)(theta_hat/theta - 1) as a function of
// alpha for fixed c2:
//   disjoint: a^-2 (e^a - 1 - a) + c2/a
//   sliding:  2 a^-3 (e^a - 1 - a - a^2/2) + c2/a
// Switches to a Taylor expansion below alpha = 1e-4 where the direct form
// cancels catastrophically.
double variance_fn(Scheme mode, double alpha, double c2);

struct AlphaOpt {
  double alpha_star = 0.0;
  double min_value = 0.0;
  // True when the minimum sits on the search boundary [0.05, 10]; always the
  // case for c2 ~ 0, where the variance functions are monotone increasing
  // and the infimum is the left endpoint.
  bool at_boundary = false;
};

// Minimizes variance_fn over alpha in [0.05, 10] by golden-section search to
// absolute tolerance 1e-6 in alpha.
AlphaOpt optimal_alpha(Scheme mode, double c2);

struct TauOpt {
  double tau_opt = 0.0;
  double alpha_star = 0.0;
  bool at_boundary = false;
};

// One-shot variance-minimizing tau: optimal alpha divided by the pilot
// theta estimate (taken at tau = 1).
TauOpt optimal_tau(Scheme mode, double theta_pilot, double c2_pilot);

// First-order asymptotic bias k (E[theta_hat] - theta_r):
//   mu_dj = theta (2a)^-1 (e^a - 1) + a^-1 theta c2
//   mu_sl = theta a^-2 (e^a - 1 - a) + a^-1 theta c2
// Always 0 <= mu_sl <= mu_dj.
struct BiasPair {
  double mu_dj = 0.0;
  double mu_sl = 0.0;

  double mu(Mode m) const;
};

BiasPair asymptotic_bias(const AsymptoticParams& p);

struct CorrectedEstimate {
  ThetaEstimate base;          // uncorrected estimate, retained
  double mu = 0.0;             // plug-in asymptotic bias
  double theta_corrected = 0.0;// theta_clipped - mu/k, floored at epsilon
  bool floored = false;        // correction drove the value to <= 0
};

// Subtracts mu_hat/k from the clipped estimate. Values driven to <= 0 are
// floored at epsilon and flagged.
CorrectedEstimate bias_corrected(const ThetaEstimate& est,
                                 const AsymptoticParams& p_hat,
                                 double epsilon = kCorrectionFloor);

struct ConfidenceInterval {
  double lo_raw = 0.0;  // theta_hat - z * sqrt(v/k)
  double hi_raw = 0.0;
  double lo = 0.0;      // raw endpoints intersected with [0, 1]
  double hi = 0.0;
  double half_width = 0.0;
  double level = 0.0;
};

// Normal interval theta_hat +- z_{(1+level)/2} sqrt(v_mode(p_hat)/k), with
// v_mode = v11 (disjoint) or v22 (sliding).
ConfidenceInterval confidence_interval(const ThetaEstimate& est,
                                       const AsymptoticParams& p_hat,
                                       double level);

// Standard normal quantile by Acklam's rational approximation; absolute
// error below 1e-8 over the levels used here.
double normal_quantile(double p);

}  // namespace extremal
