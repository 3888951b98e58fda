#pragma once

#include "charvol/estimators.hpp"
#include "charvol/simulation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace charvol {

enum class EstimatorKind {
  kRealized,    ///< "rv"
  kTruncated,   ///< "trv", threshold 4 sqrt(BV) delta^0.49
  kBipower,     ///< "bv"
  kCf,          ///< "cf", nonsymmetrized CF estimator at the daily u
  kCfDebiased,  ///< "cf-debiased", per-day three-argument debiasing
  kCfPanel,     ///< "cf-panel", pooled-ratio daily debiasing
};

/// Throws InvalidInput naming the tag when it is unknown.
EstimatorKind parse_estimator(std::string_view tag);
std::string_view estimator_tag(EstimatorKind kind);

/// Block size for a grid: 240 at 1/2400, 320 at 1/4800; otherwise the
/// nearest integer to 4.9 / sqrt(delta) (about 10 blocks per day at 1/2400).
int default_block_size(double delta);

/// How each daily estimator is tuned.
struct DailyOptions {
  int k_n = 0;                       ///< 0 selects default_block_size
  double zeta = 1.5;
  int kappa = 1;
  std::optional<double> u;           ///< fixed CF argument instead of the BV rule
  std::optional<double> threshold;   ///< fixed truncation level instead of the BV rule
  double level = 0.95;
  PanelOptions panel;
};

/// Daily estimates for a sequence of day paths. Data-driven tuning uses the
/// previous day's bipower variation (the first day uses its own).
std::vector<IVEstimate> daily_estimates(EstimatorKind kind, const std::vector<SampledPath>& days,
                                        const DailyOptions& opts);

struct ErrorSummary {
  double median_bias;
  double mad;
};

/// Median of errors and median of absolute errors; even-sized samples use
/// the midpoint of the two central order statistics.
ErrorSummary summarize(std::vector<double> errors);

/// Median of a sample (midpoint convention). Throws on empty input.
double median(std::vector<double> values);

/// Fraction of estimates whose interval contains the truth.
double coverage_test(const std::vector<IVEstimate>& estimates, const std::vector<double>& truths);

struct StudyScenario {
  std::string id;
  SimScenario sim;
};

struct StudySpec {
  std::vector<StudyScenario> scenarios;
  std::vector<EstimatorKind> estimators;
  int reps = 500;
  std::uint64_t master_seed = 0;
  DailyOptions daily;
  int threads = 1;
};

struct McSummary {
  std::string scenario_id;
  std::string estimator_tag;
  int replications = 0;
  std::size_t n_errors = 0;
  double median_bias = 0.0;
  double mad = 0.0;
  double median_bias_se = 0.0;  ///< order-statistic standard error of the median
  double coverage = 0.0;        ///< NaN when the estimator has no interval
  double z_mean = 0.0;
  double z_var = 0.0;
  double mean_runtime_ms = 0.0;
};

struct StudyResult {
  std::vector<McSummary> rows;
  /// errors[row][rep] = per-day errors of replication rep.
  std::vector<std::vector<std::vector<double>>> errors;
};

/// Seed of replication `rep` of scenario `scenario_index`.
std::uint64_t replication_seed(std::uint64_t master, std::size_t scenario_index, int rep);

/// Runs every scenario x estimator. All estimators in a replication see the
/// same simulated panel. Output is independent of the thread count.
StudyResult run_study(const StudySpec& spec);

/// Parses a study document: {"scenarios": [...], "estimators": [...],
/// "reps": n, "seed": s, "kn": k, "zeta": z, "level": l}.
StudySpec study_from_json(const nlohmann::json& j);

}  // namespace charvol
