#pragma once

#include <string>

#include "extremal/series.hpp"

namespace extremal {

// Column selection and transforms for CSV ingestion. Transforms apply in
// order: log_returns first (prices p_t -> log(p_t / p_{t-1})), then negate.
struct IngestSpec {
  std::string path;
  int column = 0;
  char delimiter = ',';
  bool skip_header = false;
  bool negate = false;
  bool log_returns = false;
};

struct IngestReport {
  TimeSeries series;
  long rows_total = 0;   // data rows seen (comments and header excluded)
  long rows_parsed = 0;
  long rows_failed = 0;  // rows whose selected column did not parse
};

// Reads one column of a delimited text file. Lines starting with '#' are
// comments (simulate output round-trips). Decimal point only, scientific
// notation accepted; parsing is locale-independent.
IngestReport ingest_csv(const IngestSpec& spec);

// Writes one value per line, preceded by a '#' metadata line; values use
// shortest round-trip formatting so re-ingestion is bit-exact.
void write_series_file(const std::string& path, const std::string& meta,
                       const Eigen::ArrayXd& values);

}  // namespace extremal
