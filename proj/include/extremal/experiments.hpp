#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "extremal/blocks.hpp"
#include "extremal/processes.hpp"

namespace extremal {

enum class TauRule { default_1, optimal };
enum class Correction { none, subtract_mu };

const char* name(TauRule t);
const char* name(Correction c);

// Monte Carlo study grid. Each (process, r, tau_rule) triple is one
// simulation cell; correction variants are derived from the same simulated
// replicates so corrected/uncorrected comparisons are paired.
struct StudyConfig {
  std::vector<ProcessSpec> processes;
  Eigen::Index n = 10000;
  std::vector<Eigen::Index> r_grid;
  std::vector<TauRule> tau_rules = {TauRule::default_1};
  std::vector<Correction> corrections = {Correction::none};
  int replicates = 2000;
  std::uint64_t base_seed = 1;
  double ci_level = 0.90;
  int threads = 1;  // 0 = hardware concurrency
};

// Throws InvalidConfigError listing every violated constraint.
void validate(const StudyConfig& cfg);

// One estimator's record for a single replicate. Clipped and raw pipelines
// are both kept: the raw values mirror the estimators as defined (no
// clipping at 1), which is what large-block bias comparisons need.
struct EstimatorOutcome {
  bool ok = false;
  std::string error;           // reason when !ok
  double theta_raw = 0.0;
  double theta_clipped = 0.0;
  double theta_corrected = 0.0;      // clipped pipeline: clip(clipped - mu/k)
  double theta_corrected_raw = 0.0;  // raw - mu/k
  double half_width = 0.0;           // CI half width; NaN for intervals
  double tau_used = 0.0;             // tau of the rule actually applied
  double threshold = 0.0;
  double tau_opt = 0.0;              // NaN unless the optimal rule ran
};

struct ReplicateResult {
  EstimatorOutcome dj, sl, iv;
  double c2_pilot = 0.0;  // unclipped c2 estimate at the tau = 1 threshold

  const EstimatorOutcome& by_mode(Mode m) const;
};

// Estimates theta on an existing series with all three estimators. Under
// the optimal rule, pilot (theta, c2) estimates at tau = 1 feed the
// variance-minimizing tau, one threshold per blocks mode; the intervals
// estimator always uses the tau = 1 threshold. Degenerate thresholds are
// recorded in the outcome, not thrown. This is the sweep workflow; the
// study harness runs the same path on simulated series.
ReplicateResult estimate_series(const TimeSeries& series, Eigen::Index r,
                                TauRule tau_rule, double ci_level);

// simulate(spec, n, seed) followed by estimate_series.
ReplicateResult run_replicate(const ProcessSpec& spec, Eigen::Index n,
                              Eigen::Index r, TauRule tau_rule,
                              double ci_level, std::uint64_t seed);

// Summary of one (process, r, tau_rule, correction, estimator) cell.
struct CellResult {
  std::string process;
  double theta_true = 0.0;
  Eigen::Index n = 0;
  Eigen::Index r = 0;
  TauRule tau_rule = TauRule::default_1;
  Correction correction = Correction::none;
  Mode estimator = Mode::disjoint;

  double mean_theta = 0.0;
  double bias = 0.0;        // mean_theta - theta_true
  double std_err = 0.0;     // sample sd across replicates
  double mc_error = 0.0;    // std_err / sqrt(replicates_ok); NaN if undefined
  double coverage = 0.0;    // CI around the reported value; NaN for intervals
  int n_failed = 0;
  int replicates = 0;
  bool quality_flag = false;  // more than half the replicates failed
  bool mc_error_defined = true;

  // Raw-pipeline diagnostics (logged, not part of the CSV table).
  double mean_theta_raw = 0.0;
  double bias_raw = 0.0;
  double std_err_raw = 0.0;
  double coverage_raw = 0.0;  // CI centered at the raw value
  double mean_tau_opt = 0.0;  // NaN unless the optimal rule ran
};

// Runs the full grid. Replicate seeds derive from (base_seed, simulation
// cell index, replicate index), so output is bitwise identical across runs
// and across thread counts.
std::vector<CellResult> run_study(const StudyConfig& cfg);

// One row per cell, grid order, 6 significant digits:
// process,theta_true,n,r,tau_rule,correction,estimator,mean_theta,bias,
// stderr,mc_error,coverage,n_failed
std::string summarize_to_csv(const std::vector<CellResult>& results);

// Same rows plus the raw-pipeline diagnostics.
std::string summarize_to_json(const std::vector<CellResult>& results);

// Parses the key=value study config format, e.g.
//   processes = mar:0.25, mar:0.5
//   n = 10000
//   r_grid = 25,50,100
//   tau_rules = default_1, optimal
//   corrections = none, subtract_mu
//   replicates = 2000
//   base_seed = 42
//   ci_level = 0.90
//   threads = 2
// '#' starts a comment. Every violated constraint is reported at once.
StudyConfig parse_study_config(const std::string& text);

}  // namespace extremal
