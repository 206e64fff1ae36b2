#include "extremal/experiments.hpp"

#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "extremal/asymptotics.hpp"
#include "extremal/rng.hpp"
#include "extremal/textnum.hpp"

namespace extremal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

EstimatorOutcome blocks_outcome(const TimeSeries& series, Eigen::Index r,
                                TauRule rule, Scheme scheme, double ci_level,
                                const BlockStats& pilot_stats, double pilot_u) {
  const Eigen::Index n = series.n();
  const Eigen::Index k = n / r;
  EstimatorOutcome out;
  out.tau_opt = kNaN;
  try {
    ThetaEstimate est = theta_from_stats(pilot_stats, scheme, k);
    out.tau_used = 1.0;
    out.threshold = pilot_u;
    if (rule == TauRule::optimal) {
      const double c2_pilot = floored_c2(pilot_stats.c2_hat);
      const TauOpt opt = optimal_tau(scheme, est.theta_clipped, c2_pilot);
      out.tau_opt = opt.tau_opt;
      out.tau_used = opt.tau_opt;
      out.threshold = select_threshold(series, r, opt.tau_opt);
      est = theta_hat(series, make_block_config(r, out.threshold, n), scheme);
    }
    const AsymptoticParams p_hat = plugin_params(est);
    const CorrectedEstimate corr = bias_corrected(est, p_hat);
    const ConfidenceInterval ci = confidence_interval(est, p_hat, ci_level);

    out.ok = true;
    out.theta_raw = est.theta_raw;
    out.theta_clipped = est.theta_clipped;
    out.theta_corrected = corr.theta_corrected;
    out.theta_corrected_raw =
        est.theta_raw - corr.mu / static_cast<double>(est.k);
    out.half_width = ci.half_width;
  } catch (const DegenerateThresholdError& e) {
    out.error = e.what();
  } catch (const InsufficientDataError& e) {
    out.error = e.what();
  }
  return out;
}

EstimatorOutcome intervals_outcome(const TimeSeries& series, double u) {
  EstimatorOutcome out;
  out.tau_used = 1.0;
  out.threshold = u;
  out.half_width = kNaN;
  out.tau_opt = kNaN;
  try {
    const ThetaEstimate est = intervals_estimator(series, u);
    out.ok = true;
    out.theta_raw = est.theta_raw;
    out.theta_clipped = est.theta_clipped;
    // no first-order bias formula for this estimator; report it uncorrected
    out.theta_corrected = est.theta_clipped;
    out.theta_corrected_raw = est.theta_raw;
  } catch (const InsufficientExceedancesError& e) {
    out.error = e.what();
  }
  return out;
}

struct Accumulator {
  double sum = 0.0, sum_sq = 0.0;
  long n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return n > 0 ? sum / static_cast<double>(n) : kNaN; }
  double sample_sd() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var =
        (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return var > 0.0 ? std::sqrt(var) : 0.0;
  }
};

CellResult aggregate_cell(const ProcessSpec& spec, const StudyConfig& cfg,
                          Eigen::Index r, TauRule rule, Correction corr,
                          Mode est_mode,
                          const std::vector<ReplicateResult>& reps) {
  CellResult cell;
  cell.process = spec.label();
  cell.theta_true = spec.theoretical_theta();
  cell.n = cfg.n;
  cell.r = r;
  cell.tau_rule = rule;
  cell.correction = corr;
  cell.estimator = est_mode;
  cell.replicates = static_cast<int>(reps.size());

  Accumulator theta, theta_raw, tau_opt;
  long covered = 0, covered_raw = 0, with_ci = 0;
  for (const ReplicateResult& rep : reps) {
    const EstimatorOutcome& o = rep.by_mode(est_mode);
    if (!o.ok) {
      ++cell.n_failed;
      continue;
    }
    const double v =
        corr == Correction::none ? o.theta_clipped : o.theta_corrected;
    const double v_raw =
        corr == Correction::none ? o.theta_raw : o.theta_corrected_raw;
    theta.add(v);
    theta_raw.add(v_raw);
    if (std::isfinite(o.tau_opt)) tau_opt.add(o.tau_opt);
    if (std::isfinite(o.half_width)) {
      ++with_ci;
      if (std::abs(v - cell.theta_true) <= o.half_width) ++covered;
      if (std::abs(v_raw - cell.theta_true) <= o.half_width) ++covered_raw;
    }
  }

  cell.mean_theta = theta.mean();
  cell.bias = cell.mean_theta - cell.theta_true;
  cell.std_err = theta.sample_sd();
  cell.mc_error_defined = theta.n > 1;
  cell.mc_error = cell.mc_error_defined
                      ? cell.std_err / std::sqrt(static_cast<double>(theta.n))
                      : kNaN;
  cell.coverage = with_ci > 0 ? static_cast<double>(covered) /
                                    static_cast<double>(with_ci)
                              : kNaN;
  cell.coverage_raw = with_ci > 0 ? static_cast<double>(covered_raw) /
                                        static_cast<double>(with_ci)
                                  : kNaN;
  cell.quality_flag = 2 * cell.n_failed > cell.replicates;
  cell.mean_theta_raw = theta_raw.mean();
  cell.bias_raw = cell.mean_theta_raw - cell.theta_true;
  cell.std_err_raw = theta_raw.sample_sd();
  cell.mean_tau_opt = tau_opt.n > 0 ? tau_opt.mean() : kNaN;
  return cell;
}

}  // namespace

const char* name(TauRule t) {
  return t == TauRule::default_1 ? "default_1" : "optimal";
}

const char* name(Correction c) {
  return c == Correction::none ? "none" : "subtract_mu";
}

const EstimatorOutcome& ReplicateResult::by_mode(Mode m) const {
  switch (m) {
    case Mode::disjoint: return dj;
    case Mode::sliding: return sl;
    default: return iv;
  }
}

void validate(const StudyConfig& cfg) {
  std::vector<std::string> problems;
  if (cfg.processes.empty()) problems.push_back("process grid is empty");
  if (cfg.n < 1) problems.push_back("n must be >= 1");
  if (cfg.r_grid.empty()) problems.push_back("r_grid is empty");
  for (const Eigen::Index r : cfg.r_grid) {
    if (r < 1) {
      problems.push_back("block size " + std::to_string(r) + " is < 1");
    } else if (cfg.n < 2 * r) {
      problems.push_back("block size " + std::to_string(r) +
                         " violates n >= 2r (n = " + std::to_string(cfg.n) +
                         ")");
    }
  }
  if (cfg.tau_rules.empty()) problems.push_back("tau_rules is empty");
  if (cfg.corrections.empty()) problems.push_back("corrections is empty");
  if (cfg.replicates < 1) problems.push_back("replicates must be >= 1");
  if (!(cfg.ci_level > 0.0) || !(cfg.ci_level < 1.0)) {
    problems.push_back("ci_level must lie in (0, 1)");
  }
  if (cfg.threads < 0) problems.push_back("threads must be >= 0");
  if (!problems.empty()) {
    std::string msg = "invalid study config:";
    for (const std::string& p : problems) msg += "\n  - " + p;
    throw InvalidConfigError(msg);
  }
}

ReplicateResult estimate_series(const TimeSeries& series, Eigen::Index r,
                                TauRule tau_rule, double ci_level) {
  const Eigen::Index n = series.n();
  if (n < 2 * r) {
    throw InsufficientDataError(
        "estimation needs n >= 2r (sliding-window variance denominator)");
  }
  const double u1 = select_threshold(series, r, 1.0);
  const BlockStats pilot =
      compute_block_stats(series, make_block_config(r, u1, n));

  ReplicateResult rep;
  rep.c2_pilot = pilot.c2_hat;
  rep.dj = blocks_outcome(series, r, tau_rule, Scheme::disjoint, ci_level,
                          pilot, u1);
  rep.sl = blocks_outcome(series, r, tau_rule, Scheme::sliding, ci_level,
                          pilot, u1);
  rep.iv = intervals_outcome(series, u1);
  return rep;
}

ReplicateResult run_replicate(const ProcessSpec& spec, Eigen::Index n,
                              Eigen::Index r, TauRule tau_rule,
                              double ci_level, std::uint64_t seed) {
  if (n < 2 * r) {
    throw InvalidConfigError("run_replicate needs n >= 2r");
  }
  return estimate_series(simulate(spec, n, seed), r, tau_rule, ci_level);
}

std::vector<CellResult> run_study(const StudyConfig& cfg) {
  validate(cfg);

  int threads = cfg.threads;
  if (threads == 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
  }
  threads = std::max(1, std::min(threads, cfg.replicates));

  std::vector<CellResult> results;
  std::uint64_t sim_cell = 0;
  for (const ProcessSpec& spec : cfg.processes) {
    for (const Eigen::Index r : cfg.r_grid) {
      for (const TauRule rule : cfg.tau_rules) {
        std::vector<ReplicateResult> reps(
            static_cast<std::size_t>(cfg.replicates));

        const auto worker = [&](int lo, int hi) {
          for (int i = lo; i < hi; ++i) {
            reps[static_cast<std::size_t>(i)] = run_replicate(
                spec, cfg.n, r, rule, cfg.ci_level,
                derive_stream(cfg.base_seed, sim_cell,
                              static_cast<std::uint64_t>(i)));
          }
        };

        if (threads == 1) {
          worker(0, cfg.replicates);
        } else {
          std::vector<std::thread> pool;
          std::exception_ptr failure;
          std::mutex failure_mutex;
          const int chunk = (cfg.replicates + threads - 1) / threads;
          for (int t = 0; t < threads; ++t) {
            const int lo = t * chunk;
            const int hi = std::min(cfg.replicates, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] {
              try {
                worker(lo, hi);
              } catch (...) {
                const std::lock_guard<std::mutex> hold(failure_mutex);
                if (!failure) failure = std::current_exception();
              }
            });
          }
          for (std::thread& th : pool) th.join();
          if (failure) std::rethrow_exception(failure);
        }

        for (const Correction corr : cfg.corrections) {
          for (const Mode est :
               {Mode::disjoint, Mode::sliding, Mode::intervals}) {
            results.push_back(
                aggregate_cell(spec, cfg, r, rule, corr, est, reps));
          }
        }
        ++sim_cell;
      }
    }
  }
  return results;
}

std::string summarize_to_csv(const std::vector<CellResult>& results) {
  if (results.empty()) {
    throw InvalidConfigError("cannot summarize an empty result set");
  }
  std::ostringstream out;
  out << "process,theta_true,n,r,tau_rule,correction,estimator,mean_theta,"
         "bias,stderr,mc_error,coverage,n_failed\n";
  for (const CellResult& c : results) {
    out << c.process << ',' << format_g6(c.theta_true) << ',' << c.n << ','
        << c.r << ',' << name(c.tau_rule) << ',' << name(c.correction) << ','
        << name(c.estimator) << ',' << format_g6(c.mean_theta) << ','
        << format_g6(c.bias) << ',' << format_g6(c.std_err) << ','
        << format_g6(c.mc_error) << ',' << format_g6(c.coverage) << ','
        << c.n_failed << '\n';
  }
  return out.str();
}

StudyConfig parse_study_config(const std::string& text) {
  StudyConfig cfg;
  cfg.tau_rules.clear();
  cfg.corrections.clear();
  std::vector<std::string> problems;

  const auto trim = [](std::string s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && is_space(s.front())) s.erase(s.begin());
    while (!s.empty() && is_space(s.back())) s.pop_back();
    return s;
  };
  const auto split = [&](const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= s.size()) {
      const std::size_t pos = s.find(',', start);
      const std::string part = trim(
          pos == std::string::npos ? s.substr(start) : s.substr(start, pos - start));
      if (!part.empty()) parts.push_back(part);
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return parts;
  };
  const auto parse_index = [&](const std::string& v,
                               const std::string& key) -> Eigen::Index {
    const auto d = parse_double(v);
    if (!d || *d != std::floor(*d)) {
      problems.push_back(key + ": '" + v + "' is not an integer");
      return 0;
    }
    return static_cast<Eigen::Index>(*d);
  };

  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line without '=': '" + line + "'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "processes") {
      for (const std::string& p : split(value)) {
        try {
          cfg.processes.push_back(parse_process(p));
        } catch (const InvalidConfigError& e) {
          problems.push_back(std::string("processes: ") + e.what());
        }
      }
    } else if (key == "n") {
      cfg.n = parse_index(value, key);
    } else if (key == "r_grid") {
      for (const std::string& r : split(value)) {
        cfg.r_grid.push_back(parse_index(r, key));
      }
    } else if (key == "tau_rules") {
      for (const std::string& t : split(value)) {
        if (t == "default_1" || t == "1" || t == "1.0") {
          cfg.tau_rules.push_back(TauRule::default_1);
        } else if (t == "optimal") {
          cfg.tau_rules.push_back(TauRule::optimal);
        } else {
          problems.push_back("tau_rules: unknown rule '" + t + "'");
        }
      }
    } else if (key == "corrections") {
      for (const std::string& c : split(value)) {
        if (c == "none") {
          cfg.corrections.push_back(Correction::none);
        } else if (c == "subtract_mu") {
          cfg.corrections.push_back(Correction::subtract_mu);
        } else {
          problems.push_back("corrections: unknown value '" + c + "'");
        }
      }
    } else if (key == "replicates") {
      cfg.replicates = static_cast<int>(parse_index(value, key));
    } else if (key == "base_seed") {
      std::uint64_t s = 0;
      const char* first = value.data();
      const char* last = first + value.size();
      const auto [ptr, ec] = std::from_chars(first, last, s);
      if (ec != std::errc{} || ptr != last) {
        problems.push_back("base_seed: '" + value + "' is not a valid seed");
      } else {
        cfg.base_seed = s;
      }
    } else if (key == "ci_level") {
      const auto d = parse_double(value);
      if (!d) {
        problems.push_back("ci_level: '" + value + "' is not a number");
      } else {
        cfg.ci_level = *d;
      }
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_index(value, key));
    } else {
      problems.push_back("unknown key '" + key + "'");
    }
  }

  if (cfg.tau_rules.empty()) cfg.tau_rules.push_back(TauRule::default_1);
  if (cfg.corrections.empty()) cfg.corrections.push_back(Correction::none);

  if (!problems.empty()) {
    std::string msg = "invalid study config:";
    for (const std::string& p : problems) msg += "\n  - " + p;
    throw InvalidConfigError(msg);
  }
  validate(cfg);
  return cfg;
}

std::string summarize_to_json(const std::vector<CellResult>& results) {
  if (results.empty()) {
    throw InvalidConfigError("cannot summarize an empty result set");
  }
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  const auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  for (const CellResult& c : results) {
    nlohmann::ordered_json row;
    row["process"] = c.process;
    row["theta_true"] = c.theta_true;
    row["n"] = c.n;
    row["r"] = c.r;
    row["tau_rule"] = name(c.tau_rule);
    row["correction"] = name(c.correction);
    row["estimator"] = name(c.estimator);
    row["mean_theta"] = num(c.mean_theta);
    row["bias"] = num(c.bias);
    row["stderr"] = num(c.std_err);
    row["mc_error"] = num(c.mc_error);
    row["coverage"] = num(c.coverage);
    row["n_failed"] = c.n_failed;
    row["replicates"] = c.replicates;
    row["quality_flag"] = c.quality_flag;
    row["mean_theta_raw"] = num(c.mean_theta_raw);
    row["bias_raw"] = num(c.bias_raw);
    row["stderr_raw"] = num(c.std_err_raw);
    row["coverage_raw"] = num(c.coverage_raw);
    row["mean_tau_opt"] = num(c.mean_tau_opt);
    rows.push_back(std::move(row));
  }
  return rows.dump(2) + "\n";
}

}  // namespace extremal
