#include "extremal/asymptotics.hpp"

#include <algorithm>
#include <cmath>

namespace extremal {

namespace {

constexpr double kTaylorCut = 1e-4;

// (e^a - 1 - a) / a^2, Taylor-expanded below the cut where the direct form
// loses all significant digits.
double exp_rem2(double a) {
  if (a < kTaylorCut) {
    return 0.5 + a / 6.0 + a * a / 24.0 + a * a * a / 120.0;
  }
  return (std::expm1(a) - a) / (a * a);
}

// 2 (e^a - 1 - a - a^2/2) / a^3
double exp_rem3(double a) {
  if (a < kTaylorCut) {
    return 1.0 / 3.0 + a / 12.0 + a * a / 60.0 + a * a * a / 360.0;
  }
  return 2.0 * (std::expm1(a) - a - 0.5 * a * a) / (a * a * a);
}

void check_params(const AsymptoticParams& p) {
  if (!(p.theta > 0.0) || p.theta > 1.0) {
    throw InvalidConfigError("theta must lie in (0, 1]");
  }
  if (!(p.tau > 0.0)) {
    throw InvalidConfigError("tau must be positive");
  }
  if (p.c2 < 0.0) {
    throw InvalidConfigError("c2 must be non-negative (floor upstream)");
  }
}

}  // namespace

AsymptoticParams make_params(double theta, double tau, double c2) {
  AsymptoticParams p{theta, tau, c2};
  check_params(p);
  return p;
}

AsymptoticParams plugin_params(const ThetaEstimate& est) {
  return make_params(est.theta_clipped, est.stats.tau_hat,
                     floored_c2(est.stats.c2_hat));
}

CovMatrix3 sigma_matrix(const AsymptoticParams& p) {
  check_params(p);
  const double a = p.alpha();
  const double ea = std::exp(-a);
  const double s11 = ea * (1.0 - ea);
  // 1 - (1+a)e^-a rewritten as -expm1(-a) - a e^-a; stable down to tiny a
  const double s22 = 2.0 / a * ea * (-std::expm1(-a) - a * ea);
  const double s31 = -p.tau * ea;
  const double s33 = a * p.m2();

  CovMatrix3 sigma;
  sigma << s11, s22, s31,
           s22, s22, s31,
           s31, s31, s33;
  return sigma;
}

VarMatrix2 v_matrix(const AsymptoticParams& p) {
  check_params(p);
  const double a = p.alpha();
  const double th2 = p.theta * p.theta;

  double v11, v22;
  if (a < kTaylorCut) {
    v11 = th2 * (0.5 + a / 6.0 + a * a / 24.0 + a * a * a / 120.0);
    v22 = th2 * (1.0 / 3.0 + a / 12.0 + a * a / 60.0 + a * a * a / 360.0);
  } else {
    v11 = th2 / (a * a) * (std::expm1(a) - a);
    v22 = 2.0 * th2 / (a * a * a) * (std::expm1(a) - a - 0.5 * a * a);
  }
  const double shared = th2 * p.c2 / a;
  v11 += shared;
  v22 += shared;

  VarMatrix2 v;
  v << v11, v22,
       v22, v22;
  return v;
}

double variance_fn(Scheme mode, double alpha, double c2) {
  if (!(alpha > 0.0)) {
    throw InvalidConfigError("variance function needs alpha > 0");
  }
  if (c2 < 0.0) {
    throw InvalidConfigError("c2 must be non-negative");
  }
  const double base =
      mode == Scheme::disjoint ? exp_rem2(alpha) : exp_rem3(alpha);
  return base + c2 / alpha;
}

AlphaOpt optimal_alpha(Scheme mode, double c2) {
  if (c2 < 0.0) {
    throw InvalidConfigError("c2 must be non-negative");
  }
  const double lo = kAlphaSearchLo;
  const double hi = kAlphaSearchHi;
  if (c2 < kC2BoundaryCut) {
    // both variance functions are increasing at c2 = 0; left boundary wins
    return AlphaOpt{lo, variance_fn(mode, lo, c2), true};
  }

  const auto f = [&](double a) { return variance_fn(mode, a, c2); };
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > kAlphaSearchTol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  const double star = 0.5 * (a + b);
  AlphaOpt out{star, f(star), false};
  out.at_boundary = (star - lo) < 10.0 * kAlphaSearchTol ||
                    (hi - star) < 10.0 * kAlphaSearchTol;
  return out;
}

TauOpt optimal_tau(Scheme mode, double theta_pilot, double c2_pilot) {
  if (!(theta_pilot > 0.0) || theta_pilot > 1.0) {
    throw InvalidConfigError("pilot theta must lie in (0, 1]");
  }
  const AlphaOpt opt = optimal_alpha(mode, c2_pilot);
  return TauOpt{opt.alpha_star / theta_pilot, opt.alpha_star, opt.at_boundary};
}

double BiasPair::mu(Mode m) const {
  switch (m) {
    case Mode::disjoint: return mu_dj;
    case Mode::sliding: return mu_sl;
    default:
      throw InvalidConfigError("no asymptotic bias for the intervals estimator");
  }
}

BiasPair asymptotic_bias(const AsymptoticParams& p) {
  check_params(p);
  const double a = p.alpha();
  const double shared = p.theta * p.c2 / a;
  // expm1(a)/(2a) is cancellation-free; the mu_sl remainder is not
  const double mu_dj = p.theta * std::expm1(a) / (2.0 * a) + shared;
  const double mu_sl = p.theta * exp_rem2(a) + shared;
  return BiasPair{mu_dj, mu_sl};
}

CorrectedEstimate bias_corrected(const ThetaEstimate& est,
                                 const AsymptoticParams& p_hat,
                                 double epsilon) {
  if (est.k < 1) {
    throw InvalidConfigError("bias correction needs k >= 1");
  }
  if (!(epsilon > 0.0)) {
    throw InvalidConfigError("correction floor must be positive");
  }
  const double mu = asymptotic_bias(p_hat).mu(est.mode);
  double corrected = est.theta_clipped - mu / static_cast<double>(est.k);
  bool floored = false;
  if (corrected <= 0.0) {
    corrected = epsilon;
    floored = true;
  }
  corrected = std::min(corrected, 1.0);
  return CorrectedEstimate{est, mu, corrected, floored};
}

ConfidenceInterval confidence_interval(const ThetaEstimate& est,
                                       const AsymptoticParams& p_hat,
                                       double level) {
  if (!(level > 0.0) || !(level < 1.0)) {
    throw InvalidConfigError("confidence level must lie in (0, 1)");
  }
  if (est.k < 1) {
    throw InvalidConfigError("confidence interval needs k >= 1");
  }
  if (est.mode == Mode::intervals) {
    throw InvalidConfigError("no variance formula for the intervals estimator");
  }
  const VarMatrix2 v = v_matrix(p_hat);
  const double var = est.mode == Mode::disjoint ? v(0, 0) : v(1, 1);
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double half = z * std::sqrt(var / static_cast<double>(est.k));

  ConfidenceInterval ci;
  ci.level = level;
  ci.half_width = half;
  ci.lo_raw = est.theta_clipped - half;
  ci.hi_raw = est.theta_clipped + half;
  ci.lo = std::clamp(ci.lo_raw, 0.0, 1.0);
  ci.hi = std::clamp(ci.hi_raw, 0.0, 1.0);
  return ci;
}

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw InvalidConfigError("quantile level must lie in (0, 1)");
  }
  // Acklam's rational approximation, |relative error| < 1.15e-9
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace extremal
