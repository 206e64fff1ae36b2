#pragma once

#include <cstdint>
#include <string>

#include "extremal/series.hpp"

namespace extremal {

// Simulatable stationary processes with known extremal behaviour:
//   iid_uniform  U_i on (0,1), extremal index 1
//   iid_frechet  unit-Frechet W_i, extremal index 1
//   mar          X_1 = W_1/theta, X_i = max((1-theta) X_{i-1}, W_i); index theta
//   mm           X_1 = 2 W_1, X_i = max(W_{i-1}, W_i); index 1/2
enum class ProcessKind { iid_uniform, iid_frechet, mar, mm };

struct ProcessSpec {
  ProcessKind kind = ProcessKind::iid_uniform;
  double theta_param = 1.0;  // mar only

  double theoretical_theta() const;
  std::string label() const;  // e.g. "mar(0.5)", "iid-uniform"
};

ProcessSpec iid_uniform();
ProcessSpec iid_frechet();
ProcessSpec mar(double theta);  // theta outside (0,1] -> InvalidConfigError
ProcessSpec mm();

// Parses a label produced by ProcessSpec::label(), e.g. "mar:0.5" or
// "mar(0.5)" or "iid-uniform".
ProcessSpec parse_process(const std::string& text);

// First two moments of the limiting cluster size distribution and its
// squared coefficient of variation c2 = (m2 - m1^2)/m1^2.
struct ClusterTheory {
  double m1 = 1.0;
  double m2 = 1.0;
  double c2 = 0.0;
};

// iid: (1, 1, 0). mm: (2, 4, 0), every cluster has exactly two exceedances.
// mar theta: geometric cluster sizes, (1/theta, (2-theta)/theta^2, 1-theta).
ClusterTheory cluster_theory(const ProcessSpec& spec);

// Exact simulation; deterministic and reproducible given (spec, n, seed).
// Unit-Frechet variates are drawn by inverse CDF W = -1/log(U) with U
// uniform on the open interval (0,1).
TimeSeries simulate(const ProcessSpec& spec, Eigen::Index n,
                    std::uint64_t seed);

// Closed-form P(max(X_1..X_r) <= u):
//   iid: F(u)^r   mar: exp(-1/(theta u) - (r-1)/u)   mm: exp(-2/u - (r-1)/u)
double theoretical_Fr(const ProcessSpec& spec, Eigen::Index r, double u);

// Finite-sample theta_r(u_r) at the exact-tau threshold, i.e. u_r solving
// r * (1 - marginal CDF(u_r)) = tau by closed-form inversion, then
// -log F_r(u_r) / tau. Requires 0 < tau < r.
double theoretical_theta_r(const ProcessSpec& spec, Eigen::Index r, double tau);

}  // namespace extremal
