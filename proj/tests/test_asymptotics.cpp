#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "extremal/asymptotics.hpp"
#include "extremal/processes.hpp"
#include "extremal/rng.hpp"
#include "oracles.hpp"

using namespace extremal;

namespace {

const double kE = std::exp(1.0);

ThetaEstimate fake_estimate(Mode mode, double theta_raw, Eigen::Index k,
                            double tau = 1.0, double c2 = 0.0) {
  ThetaEstimate est;
  est.mode = mode;
  est.theta_raw = theta_raw;
  est.theta_clipped = std::min(theta_raw, 1.0);
  est.k = k;
  est.stats.tau_hat = tau;
  est.stats.c2_hat = c2;
  est.stats.has_dispersion = true;
  return est;
}

}  // namespace

TEST_CASE("sigma matrix frozen values") {
  const CovMatrix3 s = sigma_matrix(make_params(0.5, 1.0, 0.5));
  CHECK(std::abs(s(0, 0) - 0.238652) < 1e-6);      // e^-0.5 (1 - e^-0.5)
  CHECK(std::abs(s(2, 0) - (-0.606531)) < 1e-6);   // -e^-0.5
  CHECK(s(1, 1) == s(0, 1));                       // sigma22 = sigma12
  CHECK(s(2, 0) == s(2, 1));                       // sigma31 = sigma32
  const CovMatrix3 st = s.transpose().eval();
  CHECK((s.array() == st.array()).all());
  // sigma33 = alpha * m2 = 0.5 * (1.5 / 0.25)
  CHECK(std::abs(s(2, 2) - 3.0) < 1e-12);
}

TEST_CASE("sigma matrix small-alpha limits") {
  // both Fhat variances vanish and agree at first order as alpha -> 0
  double prev11 = 1.0;
  for (const double alpha : {1e-2, 1e-3, 1e-4}) {
    const CovMatrix3 s = sigma_matrix(make_params(1.0, alpha, 0.0));
    CHECK(s(0, 0) < prev11);
    CHECK(std::abs(s(1, 1) / s(0, 0) - 1.0) < 2.0 * alpha);
    prev11 = s(0, 0);
  }
}

TEST_CASE("v matrix frozen values") {
  const VarMatrix2 v = v_matrix(make_params(0.5, 1.0, 0.5));
  CHECK(std::abs(v(0, 0) - 0.398721) < 1e-6);
  CHECK(std::abs(v(1, 1) - 0.344885) < 1e-6);
  CHECK(v(0, 1) == v(1, 1));  // v12 = v22
  CHECK(v(1, 0) == v(1, 1));
}

TEST_CASE("v matrix small-alpha limits") {
  const VarMatrix2 v = v_matrix(make_params(1.0, 1e-9, 0.0));
  CHECK(std::abs(v(0, 0) - 0.5) < 1e-8);
  CHECK(std::abs(v(1, 1) - 1.0 / 3.0) < 1e-8);
}

TEST_CASE("variance function frozen values") {
  CHECK(std::abs(variance_fn(Scheme::disjoint, 1.0, 0.0) - (kE - 2.0)) <
        1e-12);
  CHECK(std::abs(variance_fn(Scheme::sliding, 1.0, 0.0) -
                 2.0 * (kE - 2.5)) < 1e-12);
  CHECK(std::abs(variance_fn(Scheme::disjoint, 1e-8, 0.0) - 0.5) < 1e-7);
  CHECK(std::abs(variance_fn(Scheme::sliding, 1e-8, 0.0) - 1.0 / 3.0) < 1e-7);
  CHECK_THROWS_AS(variance_fn(Scheme::disjoint, 0.0, 0.0), InvalidConfigError);
  CHECK_THROWS_AS(variance_fn(Scheme::sliding, -1.0, 0.0), InvalidConfigError);
}

TEST_CASE("variance function is continuous across the Taylor cut") {
  // the direct form keeps ~1e-8 absolute accuracy right above the cut, so
  // the seam cannot be tighter than that
  for (const Scheme mode : {Scheme::disjoint, Scheme::sliding}) {
    const double below = variance_fn(mode, 0.99999e-4, 0.0);
    const double above = variance_fn(mode, 1.00001e-4, 0.0);
    CHECK(std::abs(below - above) < 1e-7);
  }
}

TEST_CASE("optimal alpha agrees with a 1e-4 grid search") {
  for (const Scheme mode : {Scheme::disjoint, Scheme::sliding}) {
    for (const double c2 : {0.25, 0.5, 1.0, 2.0}) {
      const AlphaOpt got = optimal_alpha(mode, c2);
      const oracle::GridMin want = oracle::grid_min(
          [&](double a) { return variance_fn(mode, a, c2); },
          kAlphaSearchLo, kAlphaSearchHi, 1e-4);
      CHECK(std::abs(got.alpha_star - want.x) < 2e-4);
      CHECK(std::abs(got.min_value - want.f) < 1e-6);
      CHECK_FALSE(got.at_boundary);
    }
  }
  // reference point from an independent pre-build grid search
  const AlphaOpt dj1 = optimal_alpha(Scheme::disjoint, 1.0);
  CHECK(std::abs(dj1.alpha_star - 1.59) < 0.02);
  CHECK(std::abs(dj1.min_value - 1.544) < 0.002);
  // sliding minimum is strictly smaller
  CHECK(optimal_alpha(Scheme::sliding, 1.0).min_value < dj1.min_value);
}

TEST_CASE("optimal alpha boundary behaviour at c2 = 0") {
  for (const Scheme mode : {Scheme::disjoint, Scheme::sliding}) {
    const AlphaOpt opt = optimal_alpha(mode, 0.0);
    CHECK(opt.at_boundary);
    CHECK(opt.alpha_star == kAlphaSearchLo);
    CHECK(opt.min_value == variance_fn(mode, kAlphaSearchLo, 0.0));
  }
}

TEST_CASE("optimal tau") {
  const TauOpt boundary = optimal_tau(Scheme::sliding, 1.0, 0.0);
  CHECK(boundary.tau_opt == kAlphaSearchLo);
  CHECK(boundary.at_boundary);

  const TauOpt dj = optimal_tau(Scheme::disjoint, 0.5, 1.0);
  CHECK(std::abs(dj.tau_opt - 3.18) < 0.05);

  const TauOpt sl = optimal_tau(Scheme::sliding, 0.25, 0.75);
  const oracle::GridMin want = oracle::grid_min(
      [&](double a) { return variance_fn(Scheme::sliding, a, 0.75); },
      kAlphaSearchLo, kAlphaSearchHi, 1e-4);
  CHECK(std::abs(sl.tau_opt - want.x / 0.25) < 1e-3);

  CHECK_THROWS_AS(optimal_tau(Scheme::sliding, 0.0, 0.5), InvalidConfigError);
  CHECK_THROWS_AS(optimal_tau(Scheme::sliding, 1.5, 0.5), InvalidConfigError);
}

TEST_CASE("asymptotic bias frozen values") {
  const BiasPair b = asymptotic_bias(make_params(1.0, 1.0, 0.0));
  CHECK(std::abs(b.mu_dj - (kE - 1.0) / 2.0) < 1e-12);
  CHECK(std::abs(b.mu_dj - 0.859141) < 1e-6);
  CHECK(std::abs(b.mu_sl - (kE - 2.0)) < 1e-12);
  CHECK(std::abs(b.mu_sl - 0.718282) < 1e-6);
}

TEST_CASE("asymptotic bias difference identity") {
  // mu_dj - mu_sl = (theta/alpha) [ (e^a - 1)/2 - (e^a - 1 - a)/a ]
  const AsymptoticParams p = make_params(0.5, 2.0, 0.5);
  const double a = p.alpha();
  const BiasPair b = asymptotic_bias(p);
  const double gap = (p.theta / a) *
                     (std::expm1(a) / 2.0 - (std::expm1(a) - a) / a);
  CHECK(std::abs((b.mu_dj - b.mu_sl) - gap) < 1e-12);
}

TEST_CASE("ordering and symmetry across the parameter grid") {
  int checked = 0;
  for (int ti = 1; ti <= 10; ++ti) {
    for (int si = 0; si < 10; ++si) {
      for (int ci = 0; ci <= 6; ++ci) {
        const double theta = 0.1 * ti;
        const double tau = 0.1 + (5.0 - 0.1) * si / 9.0;
        const double c2 = 0.5 * ci;
        const AsymptoticParams p = make_params(theta, tau, c2);

        const VarMatrix2 v = v_matrix(p);
        REQUIRE(v(1, 1) <= v(0, 0));
        REQUIRE(v(1, 1) > 0.0);
        REQUIRE(v(0, 1) == v(1, 1));

        const BiasPair b = asymptotic_bias(p);
        REQUIRE(b.mu_sl <= b.mu_dj);
        REQUIRE(b.mu_sl >= 0.0);

        const CovMatrix3 s = sigma_matrix(p);
        REQUIRE(s(0, 1) == s(1, 1));
        REQUIRE(s(2, 0) == s(2, 1));
        const CovMatrix3 st = s.transpose().eval();
        REQUIRE((s.array() == st.array()).all());
        REQUIRE(s(0, 0) >= 0.0);
        REQUIRE(s(1, 1) >= 0.0);
        REQUIRE(s(2, 2) >= 0.0);
        ++checked;
      }
    }
  }
  CHECK(checked == 700);
}

TEST_CASE("variance function orderings and consistency with V") {
  // sliding <= disjoint on a log grid of alpha
  for (int i = 0; i <= 60; ++i) {
    const double alpha = 1e-3 * std::pow(20.0 / 1e-3, i / 60.0);
    for (const double c2 : {0.0, 0.5, 2.0}) {
      REQUIRE(variance_fn(Scheme::sliding, alpha, c2) <=
              variance_fn(Scheme::disjoint, alpha, c2));
    }
  }
  // theta^2 * variance_fn(mode, theta tau, c2) equals the V entries
  for (const double theta : {0.2, 0.5, 0.9, 1.0}) {
    for (const double tau : {0.3, 1.0, 4.0}) {
      for (const double c2 : {0.0, 0.5, 2.0}) {
        const AsymptoticParams p = make_params(theta, tau, c2);
        const VarMatrix2 v = v_matrix(p);
        const double th2 = theta * theta;
        const double dj = th2 * variance_fn(Scheme::disjoint, p.alpha(), c2);
        const double sl = th2 * variance_fn(Scheme::sliding, p.alpha(), c2);
        REQUIRE(std::abs(dj - v(0, 0)) <= 1e-12 * std::abs(v(0, 0)));
        REQUIRE(std::abs(sl - v(1, 1)) <= 1e-12 * std::abs(v(1, 1)));
      }
    }
  }
}

TEST_CASE("variance function convexity and flat derivative at the minimum") {
  for (const Scheme mode : {Scheme::disjoint, Scheme::sliding}) {
    for (const double c2 : {0.25, 1.0, 2.0}) {
      // discrete second differences on a fine grid
      const double h = 0.005;
      double prev = variance_fn(mode, kAlphaSearchLo, c2);
      double curr = variance_fn(mode, kAlphaSearchLo + h, c2);
      for (double a = kAlphaSearchLo + 2 * h; a <= kAlphaSearchHi; a += h) {
        const double next = variance_fn(mode, a, c2);
        REQUIRE(next - 2.0 * curr + prev >= -1e-9);
        prev = curr;
        curr = next;
      }
      // central difference at the interior minimizer
      const AlphaOpt opt = optimal_alpha(mode, c2);
      const double fd = (variance_fn(mode, opt.alpha_star + 1e-5, c2) -
                         variance_fn(mode, opt.alpha_star - 1e-5, c2)) /
                        2e-5;
      CHECK(std::abs(fd) < 1e-4);
    }
  }
}

TEST_CASE("bias corrected estimate") {
  // theta = 1, k = 100, params (1, 1, 0): subtract mu_sl/k = 0.00718282
  const ThetaEstimate est = fake_estimate(Mode::sliding, 1.2, 100);
  const CorrectedEstimate corr =
      bias_corrected(est, make_params(1.0, 1.0, 0.0));
  CHECK(std::abs(corr.theta_corrected - (1.0 - 0.718282 / 100.0)) < 1e-6);
  CHECK(corr.base.theta_clipped == 1.0);  // uncorrected retained
  CHECK_FALSE(corr.floored);

  // negligible correction at huge k leaves the estimate effectively unchanged
  const ThetaEstimate big = fake_estimate(Mode::disjoint, 0.7, 1000000000);
  const CorrectedEstimate tiny =
      bias_corrected(big, make_params(0.7, 1.0, 0.0));
  CHECK(std::abs(tiny.theta_corrected - 0.7) < 1e-8);

  // correction driving the value below zero floors and flags
  const ThetaEstimate small = fake_estimate(Mode::disjoint, 0.001, 1);
  const CorrectedEstimate floored =
      bias_corrected(small, make_params(1.0, 1.0, 0.0));
  CHECK(floored.floored);
  CHECK(floored.theta_corrected == kCorrectionFloor);
}

TEST_CASE("confidence interval half width") {
  const ThetaEstimate est = fake_estimate(Mode::sliding, 0.5, 100);
  const ConfidenceInterval ci =
      confidence_interval(est, make_params(0.5, 1.0, 0.5), 0.90);
  // z_0.95 * sqrt(v22 / k) = 1.644854 * sqrt(0.344885 / 100)
  CHECK(std::abs(ci.half_width - 0.096598) < 1e-6);
  CHECK(std::abs(ci.lo_raw - (0.5 - ci.half_width)) < 1e-15);
  CHECK(ci.lo >= 0.0);
  CHECK(ci.hi <= 1.0);

  // level -> 0 collapses onto the point estimate
  const ConfidenceInterval point =
      confidence_interval(est, make_params(0.5, 1.0, 0.5), 1e-12);
  CHECK(std::abs(point.half_width) < 1e-10);

  CHECK_THROWS_AS(confidence_interval(est, make_params(0.5, 1.0, 0.5), 0.0),
                  InvalidConfigError);
  const ThetaEstimate iv = fake_estimate(Mode::intervals, 0.5, 10);
  CHECK_THROWS_AS(confidence_interval(iv, make_params(0.5, 1.0, 0.5), 0.9),
                  InvalidConfigError);
}

TEST_CASE("normal quantile against table values") {
  struct Row {
    double p, z;
  };
  // frozen from a standard normal quantile table
  const Row table[] = {
      {0.5, 0.0},
      {0.9, 1.2815515655446004},
      {0.95, 1.6448536269514722},
      {0.975, 1.959963984540054},
      {0.99, 2.3263478740408408},
      {0.995, 2.5758293035489004},
      {0.999, 3.090232306167813},
      {0.0001, -3.719016485455709},
  };
  for (const Row& row : table) {
    CHECK(std::abs(normal_quantile(row.p) - row.z) < 1e-8);
  }
  CHECK(std::abs(normal_quantile(0.025) + normal_quantile(0.975)) < 1e-9);
  CHECK_THROWS_AS(normal_quantile(0.0), InvalidConfigError);
  CHECK_THROWS_AS(normal_quantile(1.0), InvalidConfigError);
}

TEST_CASE("plugin params floor c2 and validate") {
  ThetaEstimate est = fake_estimate(Mode::sliding, 1.4, 50, 0.8, -0.2);
  const AsymptoticParams p = plugin_params(est);
  CHECK(p.theta == 1.0);  // clipped
  CHECK(p.tau == 0.8);
  CHECK(p.c2 == 0.0);  // floored
  CHECK(std::abs(p.m2() - 1.0) < 1e-15);

  CHECK_THROWS_AS(make_params(0.0, 1.0, 0.0), InvalidConfigError);
  CHECK_THROWS_AS(make_params(1.1, 1.0, 0.0), InvalidConfigError);
  CHECK_THROWS_AS(make_params(0.5, 0.0, 0.0), InvalidConfigError);
  CHECK_THROWS_AS(make_params(0.5, 1.0, -0.1), InvalidConfigError);
}

TEST_CASE("confidence interval coverage on mar(0.5)") {
  // 2000 replicates, n = 10^4, r = 100, sliding, level 0.90; the paper
  // reports degraded coverage at finite samples, hence the wide band
  const int reps = 2000;
  const Eigen::Index n = 10000, r = 100;
  int covered = 0;
  for (int i = 0; i < reps; ++i) {
    const TimeSeries s = simulate(mar(0.5), n, derive_stream(4242, 1, i));
    const double u = select_threshold(s, r, 1.0);
    const BlockConfig cfg = make_block_config(r, u, n);
    const ThetaEstimate est = theta_hat(s, cfg, Scheme::sliding);
    const ConfidenceInterval ci =
        confidence_interval(est, plugin_params(est), 0.90);
    if (ci.lo_raw <= 0.5 && 0.5 <= ci.hi_raw) ++covered;
  }
  const double coverage = static_cast<double>(covered) / reps;
  CHECK(coverage >= 0.75);
  CHECK(coverage <= 0.95);
}
