#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "extremal/asymptotics.hpp"
#include "extremal/blocks.hpp"
#include "extremal/experiments.hpp"
#include "extremal/ingest.hpp"
#include "extremal/processes.hpp"
#include "extremal/textnum.hpp"

namespace {

using namespace extremal;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

ProcessSpec resolve_process(const std::string& process, double theta) {
  if (process == "mar") return mar(theta);
  return parse_process(process);
}

struct SimulateArgs {
  std::string process = "iid-uniform";
  double theta = 0.5;
  long long n = 10000;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_simulate(const SimulateArgs& args) {
  const ProcessSpec spec = resolve_process(args.process, args.theta);
  const TimeSeries series = simulate(spec, args.n, args.seed);
  std::ostringstream meta;
  meta << "extremal simulate process=" << spec.label() << " n=" << args.n
       << " seed=" << args.seed;
  write_series_file(args.out, meta.str(), series.values);
  std::cerr << "wrote " << args.n << " values to " << args.out << "\n";
  return kExitOk;
}

struct SweepArgs {
  std::string input;
  int column = 0;
  std::string delimiter = ",";
  bool skip_header = false;
  bool negate = false;
  bool log_returns = false;
  std::vector<long long> r_grid;
  std::string tau = "1.0";
  double level = 0.90;
  bool bias_correct = false;
  std::string out;
  std::string format = "csv";
};

struct SweepRow {
  Eigen::Index r = 0, k = 0;
  std::string status = "ok";
  ReplicateResult rep;
};

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     bool bias_correct) {
  out << "r,k,status,u_dj,tau_dj,theta_dj_raw,theta_dj,theta_dj_corrected,"
         "ci_dj_lo,ci_dj_hi,u_sl,tau_sl,theta_sl_raw,theta_sl,"
         "theta_sl_corrected,ci_sl_lo,ci_sl_hi,theta_intervals,c2_hat,"
         "tau_opt_dj,tau_opt_sl\n";
  const auto ci_lo = [&](const EstimatorOutcome& o) {
    const double center = bias_correct ? o.theta_corrected : o.theta_clipped;
    return std::clamp(center - o.half_width, 0.0, 1.0);
  };
  const auto ci_hi = [&](const EstimatorOutcome& o) {
    const double center = bias_correct ? o.theta_corrected : o.theta_clipped;
    return std::clamp(center + o.half_width, 0.0, 1.0);
  };
  for (const SweepRow& row : rows) {
    const EstimatorOutcome& dj = row.rep.dj;
    const EstimatorOutcome& sl = row.rep.sl;
    const EstimatorOutcome& iv = row.rep.iv;
    out << row.r << ',' << row.k << ',' << row.status << ',';
    if (dj.ok) {
      out << format_g6(dj.threshold) << ',' << format_g6(dj.tau_used) << ','
          << format_g6(dj.theta_raw) << ',' << format_g6(dj.theta_clipped)
          << ',' << format_g6(dj.theta_corrected) << ',' << format_g6(ci_lo(dj))
          << ',' << format_g6(ci_hi(dj)) << ',';
    } else {
      out << ",,,,,,,";
    }
    if (sl.ok) {
      out << format_g6(sl.threshold) << ',' << format_g6(sl.tau_used) << ','
          << format_g6(sl.theta_raw) << ',' << format_g6(sl.theta_clipped)
          << ',' << format_g6(sl.theta_corrected) << ',' << format_g6(ci_lo(sl))
          << ',' << format_g6(ci_hi(sl)) << ',';
    } else {
      out << ",,,,,,,";
    }
    out << (iv.ok ? format_g6(iv.theta_clipped) : std::string()) << ','
        << format_g6(row.rep.c2_pilot) << ','
        << (dj.ok && std::isfinite(dj.tau_opt) ? format_g6(dj.tau_opt)
                                               : std::string())
        << ','
        << (sl.ok && std::isfinite(sl.tau_opt) ? format_g6(sl.tau_opt)
                                               : std::string())
        << '\n';
  }
}

void write_sweep_json(std::ostream& out, const std::vector<SweepRow>& rows,
                      bool bias_correct) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  const auto num = [](double v) -> nlohmann::ordered_json {
    if (!std::isfinite(v)) return nullptr;
    return v;
  };
  const auto estimator = [&](const EstimatorOutcome& o) {
    nlohmann::ordered_json e;
    e["ok"] = o.ok;
    if (!o.ok) {
      e["error"] = o.error;
      return e;
    }
    e["u"] = num(o.threshold);
    e["tau"] = num(o.tau_used);
    e["theta_raw"] = num(o.theta_raw);
    e["theta"] = num(o.theta_clipped);
    e["theta_corrected"] = num(o.theta_corrected);
    const double center = bias_correct ? o.theta_corrected : o.theta_clipped;
    if (std::isfinite(o.half_width)) {
      e["ci_lo"] = num(std::clamp(center - o.half_width, 0.0, 1.0));
      e["ci_hi"] = num(std::clamp(center + o.half_width, 0.0, 1.0));
      e["ci_lo_raw"] = num(center - o.half_width);
      e["ci_hi_raw"] = num(center + o.half_width);
    }
    e["tau_opt"] = num(o.tau_opt);
    return e;
  };
  for (const SweepRow& row : rows) {
    nlohmann::ordered_json r;
    r["r"] = row.r;
    r["k"] = row.k;
    r["status"] = row.status;
    r["disjoint"] = estimator(row.rep.dj);
    r["sliding"] = estimator(row.rep.sl);
    r["intervals"] = estimator(row.rep.iv);
    r["c2_hat"] = num(row.rep.c2_pilot);
    doc.push_back(std::move(r));
  }
  out << doc.dump(2) << "\n";
}

int cmd_sweep(const SweepArgs& args) {
  if (args.delimiter.size() != 1) {
    throw InvalidConfigError("--delimiter must be a single character");
  }
  if (args.r_grid.empty()) {
    throw InvalidConfigError("--r-grid must name at least one block size");
  }
  TauRule rule = TauRule::default_1;
  if (args.tau == "optimal") {
    rule = TauRule::optimal;
  } else {
    const auto t = parse_double(args.tau);
    if (!t || *t != 1.0) {
      throw InvalidConfigError("--tau accepts 1.0 or optimal");
    }
  }

  IngestSpec ingest;
  ingest.path = args.input;
  ingest.column = args.column;
  ingest.delimiter = args.delimiter[0];
  ingest.skip_header = args.skip_header;
  ingest.negate = args.negate;
  ingest.log_returns = args.log_returns;
  const IngestReport report = ingest_csv(ingest);
  if (report.rows_failed > 0) {
    std::cerr << "warning: " << report.rows_failed << " of "
              << report.rows_total << " rows failed to parse\n";
  }

  const Eigen::Index n = report.series.n();
  Eigen::Index r_max = 0;
  for (const long long r : args.r_grid) r_max = std::max<Eigen::Index>(r_max, r);
  if (n < 2 * r_max) {
    throw InsufficientDataError(
        "series length n = " + std::to_string(n) +
        " violates n >= 2*max(r_grid) = " + std::to_string(2 * r_max));
  }

  std::vector<SweepRow> rows;
  int failures = 0;
  for (const long long r : args.r_grid) {
    SweepRow row;
    row.r = r;
    row.k = n / r;
    row.rep = estimate_series(report.series, r, rule, args.level);
    if (!row.rep.dj.ok || !row.rep.sl.ok) {
      row.status = "degenerate:" +
                   (row.rep.dj.ok ? row.rep.sl.error : row.rep.dj.error);
      ++failures;
    } else if (!row.rep.iv.ok) {
      row.status = "intervals-failed:" + row.rep.iv.error;
    }
    rows.push_back(std::move(row));
  }

  std::ostringstream body;
  if (args.format == "json") {
    write_sweep_json(body, rows, args.bias_correct);
  } else {
    write_sweep_csv(body, rows, args.bias_correct);
  }
  if (args.out.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream file(args.out);
    if (!file) throw IngestError("cannot open '" + args.out + "' for writing");
    file << body.str();
  }

  if (failures == static_cast<int>(rows.size())) {
    std::cerr << "error: every block size produced a degenerate estimate\n";
    return kExitData;
  }
  return kExitOk;
}

struct StudyArgs {
  std::string config;
  std::string out_dir;
  int threads_override = -1;
  std::string format = "csv";
};

int cmd_study(const StudyArgs& args) {
  std::ifstream in(args.config);
  if (!in) throw IngestError("cannot open '" + args.config + "' for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();

  StudyConfig cfg = parse_study_config(buffer.str());
  if (args.threads_override >= 0) cfg.threads = args.threads_override;

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<CellResult> results = run_study(cfg);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  namespace fs = std::filesystem;
  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  {
    std::ofstream csv(dir / "results.csv");
    if (!csv) throw IngestError("cannot write results.csv");
    csv << summarize_to_csv(results);
  }
  if (args.format == "json") {
    std::ofstream json(dir / "results.json");
    if (!json) throw IngestError("cannot write results.json");
    json << summarize_to_json(results);
  }
  {
    std::ofstream meta(dir / "run_meta.txt");
    if (!meta) throw IngestError("cannot write run_meta.txt");
    meta << "command = study\n";
    meta << "config_file = " << args.config << "\n";
    meta << "n = " << cfg.n << "\n";
    std::string procs;
    for (const ProcessSpec& p : cfg.processes) {
      procs += (procs.empty() ? "" : ", ") + p.label();
    }
    meta << "processes = " << procs << "\n";
    std::string rs;
    for (const Eigen::Index r : cfg.r_grid) {
      rs += (rs.empty() ? "" : ",") + std::to_string(r);
    }
    meta << "r_grid = " << rs << "\n";
    std::string taus;
    for (const TauRule t : cfg.tau_rules) {
      taus += std::string(taus.empty() ? "" : ", ") + name(t);
    }
    meta << "tau_rules = " << taus << "\n";
    std::string corrs;
    for (const Correction c : cfg.corrections) {
      corrs += std::string(corrs.empty() ? "" : ", ") + name(c);
    }
    meta << "corrections = " << corrs << "\n";
    meta << "replicates = " << cfg.replicates << "\n";
    meta << "base_seed = " << cfg.base_seed << "\n";
    meta << "ci_level = " << format_g6(cfg.ci_level) << "\n";
    meta << "threads = " << cfg.threads << "\n";
    meta << "wall_seconds = " << format_g6(wall) << "\n";
    meta << "cells = " << results.size() << "\n";
    meta << "\n# raw-pipeline diagnostics (no clipping at 1)\n";
    meta << "process,r,tau_rule,correction,estimator,mean_theta_raw,bias_raw,"
            "stderr_raw,coverage_raw,mean_tau_opt,quality_flag\n";
    for (const CellResult& c : results) {
      meta << c.process << ',' << c.r << ',' << name(c.tau_rule) << ','
           << name(c.correction) << ',' << name(c.estimator) << ','
           << format_g6(c.mean_theta_raw) << ',' << format_g6(c.bias_raw)
           << ',' << format_g6(c.std_err_raw) << ','
           << format_g6(c.coverage_raw) << ',' << format_g6(c.mean_tau_opt)
           << ',' << (c.quality_flag ? 1 : 0) << '\n';
    }
  }
  std::cerr << "wrote " << results.size() << " cells to " << args.out_dir
            << " in " << format_g6(wall) << " s\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Extremal index estimation with disjoint and sliding block maxima"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate_cmd = app.add_subcommand(
      "simulate", "Simulate a process and write one value per line");
  simulate_cmd
      ->add_option("--process", sim.process,
                   "iid-uniform | iid-frechet | mar | mm (or mar:0.5)")
      ->capture_default_str();
  simulate_cmd->add_option("--theta", sim.theta, "mar parameter in (0,1]")
      ->capture_default_str();
  simulate_cmd->add_option("--n", sim.n, "series length")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate_cmd->add_option("--seed", sim.seed, "RNG seed")
      ->capture_default_str();
  simulate_cmd->add_option("--out", sim.out, "output path")->required();

  SweepArgs sweep;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep",
      "Estimate the extremal index on a CSV series over a block-size grid.\n"
      "Report columns: r,k,status, then per blocks estimator the threshold "
      "u, the tau actually used, theta (raw / clipped to (0,1] / "
      "bias-corrected) and the confidence interval clipped to [0,1]; then "
      "the intervals estimator at the tau=1 threshold, the pilot c2 "
      "estimate, and the estimated optimal tau per mode (optimal rule "
      "only). --bias-correct centers the intervals on the corrected "
      "estimate.");
  sweep_cmd->add_option("--input", sweep.input, "CSV file to read")
      ->required();
  sweep_cmd->add_option("--column", sweep.column, "zero-based column index")
      ->capture_default_str();
  sweep_cmd->add_option("--delimiter", sweep.delimiter, "field delimiter")
      ->capture_default_str();
  sweep_cmd->add_flag("--skip-header", sweep.skip_header,
                      "skip the first data line");
  sweep_cmd->add_flag("--negate", sweep.negate, "negate the series");
  sweep_cmd->add_flag("--log-returns", sweep.log_returns,
                      "transform prices p_t to log(p_t/p_{t-1})");
  sweep_cmd->add_option("--r-grid", sweep.r_grid, "block sizes, e.g. 50,100,200")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--tau", sweep.tau, "1.0 | optimal")
      ->capture_default_str();
  sweep_cmd->add_option("--level", sweep.level, "confidence level in (0,1)")
      ->capture_default_str();
  sweep_cmd->add_flag("--bias-correct", sweep.bias_correct,
                      "center confidence intervals on the corrected estimate");
  sweep_cmd->add_option("--out", sweep.out, "output path (default stdout)");
  sweep_cmd->add_option("--format", sweep.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  StudyArgs study;
  CLI::App* study_cmd = app.add_subcommand(
      "study", "Run a Monte Carlo study from a key=value config file");
  study_cmd->add_option("--config", study.config, "config file")->required();
  study_cmd->add_option("--out-dir", study.out_dir, "output directory")
      ->required();
  study_cmd->add_option("--threads", study.threads_override,
                        "override the config's thread count (0 = hardware)");
  study_cmd->add_option("--format", study.format, "csv | json (json adds results.json)")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate_cmd->parsed()) return cmd_simulate(sim);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep);
    if (study_cmd->parsed()) return cmd_study(study);
  } catch (const InvalidConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
