#include "extremal/ingest.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "extremal/errors.hpp"
#include "extremal/textnum.hpp"

namespace extremal {

namespace {

// Returns the column'th field of a delimited line, or nullopt when the line
// has too few fields.
std::optional<std::string_view> select_field(std::string_view line,
                                             char delimiter, int column) {
  int current = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    const std::string_view field =
        pos == std::string_view::npos
            ? line.substr(start)
            : line.substr(start, pos - start);
    if (current == column) return field;
    if (pos == std::string_view::npos) return std::nullopt;
    start = pos + 1;
    ++current;
  }
}

}  // namespace

IngestReport ingest_csv(const IngestSpec& spec) {
  if (spec.column < 0) {
    throw InvalidConfigError("column index must be non-negative");
  }
  std::ifstream in(spec.path);
  if (!in) {
    throw IngestError("cannot open '" + spec.path + "' for reading");
  }

  IngestReport report;
  std::vector<double> values;
  std::string line;
  bool header_pending = spec.skip_header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    ++report.rows_total;
    const auto field = select_field(line, spec.delimiter, spec.column);
    const auto value = field ? parse_double(*field) : std::nullopt;
    if (value && std::isfinite(*value)) {
      values.push_back(*value);
      ++report.rows_parsed;
    } else {
      ++report.rows_failed;
    }
  }
  if (values.empty()) {
    throw IngestError("no parseable values in '" + spec.path + "' (column " +
                      std::to_string(spec.column) + ")");
  }

  Eigen::ArrayXd x =
      Eigen::Map<const Eigen::ArrayXd>(values.data(),
                                       static_cast<Eigen::Index>(values.size()));
  if (spec.log_returns) {
    if (x.size() < 2) {
      throw IngestError("log-returns transform needs at least two prices");
    }
    if ((x <= 0.0).any()) {
      throw IngestError("log-returns transform needs strictly positive prices");
    }
    Eigen::ArrayXd returns(x.size() - 1);
    for (Eigen::Index i = 1; i < x.size(); ++i) {
      returns[i - 1] = std::log(x[i] / x[i - 1]);
    }
    x = std::move(returns);
  }
  if (spec.negate) {
    x = -x;
  }
  report.series = make_series(std::move(x), spec.path, spec.negate);
  return report;
}

void write_series_file(const std::string& path, const std::string& meta,
                       const Eigen::ArrayXd& values) {
  std::ofstream out(path);
  if (!out) {
    throw IngestError("cannot open '" + path + "' for writing");
  }
  out << "# " << meta << "\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out << format_full(values[i]) << "\n";
  }
  if (!out) {
    throw IngestError("write failed for '" + path + "'");
  }
}

}  // namespace extremal
