#include "charvol/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace charvol {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r\"");
    const auto last = field.find_last_not_of(" \t\r\"");
    fields.push_back(first == std::string::npos ? "" : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, std::size_t row, const std::string& column) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw DataError("row " + std::to_string(row) + ": cannot parse " + column + " value '" + text + "'");
  }
  return v;
}

// Snap a spacing to 1/N when it matches an integer number of steps per day.
double snap_delta(double delta) {
  const double n = 1.0 / delta;
  const double r = std::round(n);
  if (r >= 1.0 && std::abs(n - r) <= 1e-9 * r) return 1.0 / r;
  return delta;
}

}  // namespace

SampledPath ingest_csv(std::istream& in, const CsvColumns& columns) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV input");
  const auto header = split_csv_line(line);
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  bool log_scale = true;
  std::optional<std::size_t> value_col;
  if (!columns.value.empty()) {
    value_col = find(columns.value);
    log_scale = columns.value != "price";
  } else if ((value_col = find("logprice"))) {
    log_scale = true;
  } else if ((value_col = find("price"))) {
    log_scale = false;
  }
  if (!value_col) throw DataError("CSV header has no price/logprice column");

  std::optional<std::size_t> time_col;
  if (columns.time != "index") time_col = find(columns.time);
  if (!time_col && !columns.delta) {
    throw DataError("CSV has no '" + columns.time + "' column; supply the grid spacing explicitly");
  }

  std::vector<double> times;
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    const auto fields = split_csv_line(line);
    const std::size_t need = std::max(*value_col, time_col.value_or(0)) + 1;
    if (fields.size() < need) throw DataError("row " + std::to_string(row) + ": too few fields");
    double v = parse_number(fields[*value_col], row, header[*value_col]);
    if (!log_scale) {
      if (!(v > 0.0)) throw DataError("row " + std::to_string(row) + ": nonpositive price");
      v = std::log(v);
    }
    if (!std::isfinite(v)) throw DataError("row " + std::to_string(row) + ": non-finite value");
    values.push_back(v);
    if (time_col) times.push_back(parse_number(fields[*time_col], row, header[*time_col]));
  }
  if (values.size() < 2) throw DataError("CSV needs at least 2 data rows");

  double delta = 0.0;
  double t0 = 0.0;
  if (time_col) {
    t0 = times.front();
    const double step = columns.delta ? *columns.delta : times[1] - times[0];
    if (!(step > 0.0)) throw DataError("row 2: time not strictly increasing");
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double gap = times[i] - times[i - 1];
      // Rounding of printed timestamps contributes a few ulps of the time value.
      const double tol = 1e-9 * step + 8.0 * std::numeric_limits<double>::epsilon() * std::abs(times[i]);
      if (!(std::abs(gap - step) <= tol)) {
        std::ostringstream os;
        os << "non-uniform time grid at row " << (i + 1) << " (spacing " << format_double(gap)
           << ", expected " << format_double(step) << ")";
        throw DataError(os.str());
      }
    }
    delta = columns.delta ? *columns.delta
                          : snap_delta((times.back() - t0) / static_cast<double>(times.size() - 1));
  } else {
    delta = *columns.delta;
  }
  if (!(delta > 0.0)) throw DataError("grid spacing must be positive");
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return SampledPath(std::move(x), delta, t0);
}

SampledPath ingest_csv_file(const std::string& filename, const CsvColumns& columns) {
  std::ifstream in(filename);
  if (!in) throw DataError("cannot open '" + filename + "'");
  return ingest_csv(in, columns);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_path_csv(std::ostream& out, const SampledPath& path) {
  out << "time,logprice\n";
  const auto& x = path.values();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out << format_double(path.t0() + static_cast<double>(i) * path.delta()) << ',' << format_double(x[i])
        << '\n';
  }
}

void write_truth_csv(std::ostream& out, const std::vector<double>& true_iv) {
  out << "day,integrated_variance\n";
  for (std::size_t d = 0; d < true_iv.size(); ++d) out << (d + 1) << ',' << format_double(true_iv[d]) << '\n';
}

void write_estimate_header(std::ostream& out) {
  out << "day,estimator,value,avar,ci_low,ci_high,u_used,flags\n";
}

void write_estimate_rows(std::ostream& out, std::string_view estimator,
                         const std::vector<IVEstimate>& estimates) {
  for (std::size_t d = 0; d < estimates.size(); ++d) {
    const auto& e = estimates[d];
    out << (d + 1) << ',' << estimator << ',' << format_double(e.value) << ',' << format_double(e.avar) << ','
        << format_double(e.ci_low) << ',' << format_double(e.ci_high) << ',' << format_double(e.u_used) << ','
        << flags_to_string(e.flags) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<McSummary>& rows, bool include_timing) {
  out << "scenario,estimator,replications,n_errors,median_bias,mad,median_bias_se,coverage,z_mean,z_var";
  if (include_timing) out << ",mean_runtime_ms";
  out << '\n';
  for (const auto& r : rows) {
    out << r.scenario_id << ',' << r.estimator_tag << ',' << r.replications << ',' << r.n_errors << ','
        << format_double(r.median_bias) << ',' << format_double(r.mad) << ',' << format_double(r.median_bias_se)
        << ',' << format_double(r.coverage) << ',' << format_double(r.z_mean) << ','
        << format_double(r.z_var);
    if (include_timing) out << ',' << format_double(r.mean_runtime_ms);
    out << '\n';
  }
}

nlohmann::json study_errors_json(const StudyResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    rows.push_back({{"scenario", result.rows[i].scenario_id},
                    {"estimator", result.rows[i].estimator_tag},
                    {"errors", result.errors[i]}});
  }
  return rows;
}

}  // namespace charvol
