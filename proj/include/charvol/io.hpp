#pragma once

#include "charvol/core.hpp"
#include "charvol/estimators.hpp"
#include "charvol/montecarlo.hpp"
#include "charvol/simulation.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace charvol {

/// Problems with input data files (as opposed to configuration).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which columns of a price CSV to read. The file must have a header row.
struct CsvColumns {
  std::string time = "time";  ///< "index" (or absent) means integer row index
  std::string value;          ///< empty: "logprice" if present, else "price"
  std::optional<double> delta;  ///< overrides the spacing inferred from time
};

/// Reads a uniformly sampled price CSV into a log-price path. Prices are
/// converted with the natural log; "logprice" columns are used as-is.
/// Throws DataError naming the first offending data row (1-based) when the
/// grid is not uniform to 1e-9 relative, or a price is not positive.
SampledPath ingest_csv(std::istream& in, const CsvColumns& columns = {});
SampledPath ingest_csv_file(const std::string& filename, const CsvColumns& columns = {});

/// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double x);

/// Columns: time,logprice.
void write_path_csv(std::ostream& out, const SampledPath& path);
/// Columns: day,integrated_variance.
void write_truth_csv(std::ostream& out, const std::vector<double>& true_iv);

/// Header for write_estimate_rows.
void write_estimate_header(std::ostream& out);
/// One row per day: day,estimator,value,avar,ci_low,ci_high,u_used,flags.
void write_estimate_rows(std::ostream& out, std::string_view estimator,
                         const std::vector<IVEstimate>& estimates);

/// One row per scenario x estimator; runtime column only when requested.
void write_summary_csv(std::ostream& out, const std::vector<McSummary>& rows, bool include_timing);

/// Per-replication errors for every row of a study.
nlohmann::json study_errors_json(const StudyResult& result);

}  // namespace charvol
