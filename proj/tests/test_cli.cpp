// Drives the installed CLI binary end to end. The binary path arrives in
// the EXTREMAL_CLI environment variable (set by the ctest registration).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "extremal/experiments.hpp"
#include "extremal/ingest.hpp"
#include "extremal/processes.hpp"
#include "extremal/textnum.hpp"

using namespace extremal;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* env = std::getenv("EXTREMAL_CLI");
  REQUIRE_MESSAGE(env != nullptr, "EXTREMAL_CLI not set");
  return env;
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "extremal_cli_test";
  fs::create_directories(dir);
  return dir;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args) {
  const fs::path dir = work_dir();
  const fs::path out_path = dir / "stdout.txt";
  const fs::path err_path = dir / "stderr.txt";
  const std::string cmd = '"' + cli_path() + "\" " + args + " > " +
                          out_path.string() + " 2> " + err_path.string();
  const int status = std::system(cmd.c_str());

  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (start <= line.size()) {
    const std::size_t pos = line.find(',', start);
    fields.push_back(pos == std::string::npos
                         ? line.substr(start)
                         : line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

int column_index(const std::string& header, const std::string& name) {
  const std::vector<std::string> cols = split_csv_line(header);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  CHECK(run_cli("frobnicate").exit_code == 1);
  CHECK(run_cli("sweep --no-such-flag").exit_code == 1);
  CHECK(run_cli("simulate --process mar --theta 0 --n 10 --out /tmp/x.csv")
            .exit_code == 1);
}

TEST_CASE("help exits cleanly") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("sweep --help").exit_code == 0);
}

TEST_CASE("simulate writes identical files on re-run") {
  const fs::path dir = work_dir();
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string flags = "simulate --process mar:0.5 --n 10 --seed 7 --out ";
  REQUIRE(run_cli(flags + (dir / "s1.csv").string()).exit_code == 0);
  REQUIRE(run_cli(flags + (dir / "s2.csv").string()).exit_code == 0);
  const std::string a = slurp(dir / "s1.csv");
  CHECK(a == slurp(dir / "s2.csv"));
  // metadata line plus one value per line
  CHECK(a.rfind("# extremal simulate process=mar(0.5) n=10 seed=7\n", 0) == 0);
  long lines = 0;
  for (const char c : a) {
    if (c == '\n') ++lines;
  }
  CHECK(lines == 11);
}

TEST_CASE("simulate then sweep, mm sanity band") {
  const fs::path dir = work_dir();
  const fs::path series = dir / "mm.csv";
  const RunResult sim = run_cli("simulate --process mm --n 10000 --seed 5 --out " +
                                series.string());
  REQUIRE(sim.exit_code == 0);

  const RunResult sweep =
      run_cli("sweep --input " + series.string() + " --r-grid 100 --tau 1.0");
  REQUIRE(sweep.exit_code == 0);

  std::istringstream lines(sweep.out);
  std::string header, row;
  REQUIRE(std::getline(lines, header));
  REQUIRE(std::getline(lines, row));
  const int col = column_index(header, "theta_sl");
  REQUIRE(col >= 0);
  const auto theta = parse_double(split_csv_line(row)[col]);
  REQUIRE(theta.has_value());
  CHECK(*theta > 0.3);
  CHECK(*theta < 0.7);
}

TEST_CASE("sweep report matches the in-process estimates bit for bit") {
  const fs::path dir = work_dir();
  const fs::path series = dir / "mar_rt.csv";
  REQUIRE(run_cli("simulate --process mar:0.5 --n 6000 --seed 21 --out " +
                  series.string())
              .exit_code == 0);

  const RunResult sweep = run_cli("sweep --input " + series.string() +
                                  " --r-grid 50,100 --tau 1.0 --level 0.9");
  REQUIRE(sweep.exit_code == 0);

  // the same numbers, computed in process on the same simulated series
  const TimeSeries s = simulate(mar(0.5), 6000, 21);
  std::istringstream lines(sweep.out);
  std::string header;
  REQUIRE(std::getline(lines, header));
  const int sl_col = column_index(header, "theta_sl");
  const int dj_raw_col = column_index(header, "theta_dj_raw");
  const int c2_col = column_index(header, "c2_hat");
  for (const Eigen::Index r : {50, 100}) {
    std::string row;
    REQUIRE(std::getline(lines, row));
    const std::vector<std::string> fields = split_csv_line(row);
    const ReplicateResult rep =
        estimate_series(s, r, TauRule::default_1, 0.9);
    CHECK(fields[static_cast<std::size_t>(sl_col)] ==
          format_g6(rep.sl.theta_clipped));
    CHECK(fields[static_cast<std::size_t>(dj_raw_col)] ==
          format_g6(rep.dj.theta_raw));
    CHECK(fields[static_cast<std::size_t>(c2_col)] ==
          format_g6(rep.c2_pilot));
  }
}

TEST_CASE("sweep on a too-short series exits 2 naming the constraint") {
  const fs::path dir = work_dir();
  const fs::path series = dir / "short.csv";
  REQUIRE(run_cli("simulate --process iid-uniform --n 120 --seed 1 --out " +
                  series.string())
              .exit_code == 0);
  const RunResult sweep =
      run_cli("sweep --input " + series.string() + " --r-grid 100");
  CHECK(sweep.exit_code == 2);
  CHECK(sweep.err.find("n >= 2*max(r_grid)") != std::string::npos);
}

TEST_CASE("negate flag equals manually negated input") {
  const fs::path dir = work_dir();
  const fs::path series = dir / "pos.csv";
  REQUIRE(run_cli("simulate --process mar:0.4 --n 4000 --seed 3 --out " +
                  series.string())
              .exit_code == 0);

  // manually negated copy
  IngestSpec spec;
  spec.path = series.string();
  const IngestReport plain = ingest_csv(spec);
  const fs::path negated = dir / "neg.csv";
  write_series_file(negated.string(), "manually negated",
                    (-plain.series.values).eval());

  const std::string flags = " --r-grid 40,80 --tau 1.0";
  const RunResult via_flag = run_cli("sweep --input " + series.string() +
                                     " --negate" + flags);
  const RunResult via_file =
      run_cli("sweep --input " + negated.string() + flags);
  REQUIRE(via_flag.exit_code == 0);
  REQUIRE(via_file.exit_code == 0);
  CHECK(via_flag.out == via_file.out);
}

TEST_CASE("sweep json output") {
  const fs::path dir = work_dir();
  const fs::path series = dir / "json.csv";
  REQUIRE(run_cli("simulate --process mar:0.5 --n 3000 --seed 9 --out " +
                  series.string())
              .exit_code == 0);
  const RunResult sweep = run_cli("sweep --input " + series.string() +
                                  " --r-grid 50 --format json");
  REQUIRE(sweep.exit_code == 0);
  CHECK(sweep.out.find("\"disjoint\"") != std::string::npos);
  CHECK(sweep.out.find("\"theta\"") != std::string::npos);
}

TEST_CASE("sweep with the optimal rule emits tau_opt columns") {
  const fs::path dir = work_dir();
  const fs::path series = dir / "opt.csv";
  REQUIRE(run_cli("simulate --process mar:0.5 --n 8000 --seed 17 --out " +
                  series.string())
              .exit_code == 0);
  const RunResult sweep = run_cli("sweep --input " + series.string() +
                                  " --r-grid 100 --tau optimal");
  REQUIRE(sweep.exit_code == 0);
  std::istringstream lines(sweep.out);
  std::string header, row;
  REQUIRE(std::getline(lines, header));
  REQUIRE(std::getline(lines, row));
  const int col = column_index(header, "tau_opt_sl");
  REQUIRE(col >= 0);
  const auto tau_opt = parse_double(split_csv_line(row)[col]);
  REQUIRE(tau_opt.has_value());
  CHECK(*tau_opt > 0.0);
}

TEST_CASE("price series workflow: log returns, negation, sweep") {
  // synthetic price path whose negated log returns are a strictly
  // increasing transform of a mar series (same exceedance structure)
  const TimeSeries noise = simulate(mar(0.5), 6001, 33);
  Eigen::ArrayXd prices(noise.n() + 1);
  prices[0] = 100.0;
  for (Eigen::Index i = 0; i < noise.n(); ++i) {
    prices[i + 1] = prices[i] * std::exp(-std::log1p(noise.values[i]) / 20.0);
  }
  const fs::path dir = work_dir();
  const fs::path csv = dir / "prices.csv";
  {
    std::ofstream out(csv);
    out << "date,close\n";
    for (Eigen::Index i = 0; i < prices.size(); ++i) {
      out << i << ',' << format_full(prices[i]) << "\n";
    }
  }
  const RunResult sweep = run_cli(
      "sweep --input " + csv.string() +
      " --column 1 --skip-header --log-returns --negate --r-grid 50,100"
      " --tau 1.0 --level 0.90");
  REQUIRE(sweep.exit_code == 0);

  std::istringstream lines(sweep.out);
  std::string header, row;
  REQUIRE(std::getline(lines, header));
  const int status_col = column_index(header, "status");
  const int sl_col = column_index(header, "theta_sl");
  while (std::getline(lines, row)) {
    const std::vector<std::string> fields = split_csv_line(row);
    CHECK(fields[static_cast<std::size_t>(status_col)] == "ok");
    const auto theta = parse_double(fields[static_cast<std::size_t>(sl_col)]);
    REQUIRE(theta.has_value());
    // negated log returns recover the mar clustering up to sampling noise
    CHECK(*theta > 0.25);
    CHECK(*theta < 0.85);
  }
}

TEST_CASE("study happy path writes csv, metadata and json mirror") {
  const fs::path dir = work_dir();
  const fs::path cfg = dir / "ok.cfg";
  {
    std::ofstream out(cfg);
    out << "processes = mar:0.5\nn = 2000\nr_grid = 40\nreplicates = 20\n"
           "base_seed = 8\nthreads = 2\n";
  }
  const fs::path out_dir = dir / "study_out";
  const RunResult study = run_cli("study --config " + cfg.string() +
                                  " --out-dir " + out_dir.string() +
                                  " --format json");
  REQUIRE(study.exit_code == 0);
  CHECK(fs::exists(out_dir / "results.csv"));
  CHECK(fs::exists(out_dir / "results.json"));
  CHECK(fs::exists(out_dir / "run_meta.txt"));

  std::ifstream meta(out_dir / "run_meta.txt");
  std::stringstream ss;
  ss << meta.rdbuf();
  CHECK(ss.str().find("base_seed = 8") != std::string::npos);
  CHECK(ss.str().find("wall_seconds") != std::string::npos);
}

TEST_CASE("study config validation exits 1 listing violations") {
  const fs::path dir = work_dir();
  const fs::path cfg = dir / "bad.cfg";
  {
    std::ofstream out(cfg);
    out << "processes = mm\nn = 100\nr_grid =\n";
  }
  const RunResult study = run_cli("study --config " + cfg.string() +
                                  " --out-dir " + (dir / "out").string());
  CHECK(study.exit_code == 1);
  CHECK(study.err.find("r_grid") != std::string::npos);
}
