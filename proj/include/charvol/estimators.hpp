#pragma once

#include "charvol/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace charvol {

/// Bit flags attached to an estimate.
enum EstimateFlag : std::uint32_t {
  kFlagNone = 0,
  kFlagCorrectionSkipped = 1u << 0,  ///< debias denominator degenerate
  kFlagRetried = 1u << 1,            ///< negative value, recomputed at 2u/3
  kFlagClampedZero = 1u << 2,        ///< still negative after retries, set to 0
  kFlagBvFloored = 1u << 3,          ///< bipower variation <= 0 replaced by floor
  kFlagClippedBlocks = 1u << 4,      ///< at least one block hit the 1/sqrt(k_n) floor
};

/// "none" or a '|'-joined list of flag names.
std::string flags_to_string(std::uint32_t flags);

struct SpotBlock {
  BlockIndex block;
  double L = 1.0;       ///< block-average cosine, in [-1, 1]
  double c_hat = 0.0;   ///< spot variance estimate
  bool clipped = false; ///< L <= 1/sqrt(k_n)
};

/// Per-block spot volatility estimates at one CF argument.
struct SpotSeries {
  double u = 0.0;
  int kappa = 1;
  int k_n = 0;
  std::vector<SpotBlock> blocks;
};

struct IVEstimate {
  double value = 0.0;
  double avar = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  double level = 0.95;
  double u_used = std::numeric_limits<double>::quiet_NaN();
  std::string method;
  std::uint32_t flags = kFlagNone;
};

/// Two-sided standard normal quantile z with P(|Z| <= z) = level.
double normal_two_sided_quantile(double level);

/// Fills ci_low/ci_high as value -/+ z * sqrt(avar * delta).
void attach_interval(IVEstimate& est, double delta, double level);

// ---------------------------------------------------------------------------
// Characteristic-function estimators

/// Block average of cos(u * increment / sqrt(delta)) (kappa = 1) or of
/// cos(u * (consecutive increment difference) / sqrt(delta)) (kappa = 2).
double local_cf(const Eigen::Ref<const Eigen::VectorXd>& incs, double delta, double u,
                const BlockIndex& block, int kappa);

struct SpotVol {
  double c_hat;
  bool clipped;
};

/// Inverts a block-average cosine into a spot variance, with the log argument
/// floored at 1/sqrt(k_n). Result lies in [0, log(k_n) / (kappa * u^2)].
SpotVol spot_vol(double L_value, double u, int k_n, int kappa);

/// Upper bound on spot_vol: log(k_n) / u^2 for kappa = 1, log(k_n) / (2 u^2)
/// for kappa = 2.
double spot_vol_bound(double u, int k_n, int kappa);

/// Spot estimates on all whole blocks inside the horizon.
SpotSeries spot_series(const Eigen::Ref<const Eigen::VectorXd>& incs, double delta, double u,
                       int k_n, int kappa, Eigen::Index horizon_increments);

/// Integrated variance from a spot series, including the sinh correction for
/// the log-transform bias.
double integrated_from_spot(const SpotSeries& spot, double delta);

/// kappa * v_n * sum_j c_hat_j^power, an estimate of the integral of c^power
/// over the covered blocks. `power` must be 2 or 4.
double avar_plugin(const SpotSeries& spot, double delta, int power);

/// Asymptotic-variance constant: 2 for kappa = 1, 4 for kappa = 2.
inline double clt_constant(int kappa) { return kappa == 2 ? 4.0 : 2.0; }

/// CF estimate of the integrated variance over [0, horizon_t].
IVEstimate integrated_vol(const SampledPath& path, const EstimatorConfig& cfg, double horizon_t,
                          double level = 0.95);

struct DebiasResult {
  double value;
  bool skipped;
};

/// c_u - (c_zu - c_u)^2 / (c_zzu - 2 c_zu + c_u), skipped when the
/// denominator is negligible relative to max(|c_u|, 1e-12).
DebiasResult debias_combine(double c_u, double c_zu, double c_zzu);

inline constexpr double kDebiasRelTol = 1e-8;
inline constexpr double kDebiasAbsFloor = 1e-12;

/// Debiased CF estimate from the three arguments u, zeta u, zeta^2 u.
IVEstimate debiased_iv(const SampledPath& path, const EstimatorConfig& cfg, double horizon_t,
                       double level = 0.95);

// ---------------------------------------------------------------------------
// Baseline competitors on raw increment vectors

template <typename Derived>
double realized_variance(const Eigen::DenseBase<Derived>& incs) {
  return incs.derived().array().square().sum();
}

template <typename Derived>
double truncated_variance(const Eigen::DenseBase<Derived>& incs, double threshold) {
  const auto a = incs.derived().array();
  return (a.abs() <= threshold).select(a.square(), 0.0).sum();
}

/// (pi/2) sum_{i>=1} |x_{i-1}| |x_i| over the given increments.
template <typename Derived>
double bipower(const Eigen::DenseBase<Derived>& incs) {
  const auto a = incs.derived().array().abs();
  const Eigen::Index n = a.size();
  if (n < 2) throw InvalidInput("bipower variation needs at least 2 increments");
  return std::numbers::pi / 2.0 * (a.head(n - 1) * a.tail(n - 1)).sum();
}

// Path-level wrappers. Times are elapsed time since the path start.

double realized_vol(const SampledPath& path, double horizon_t);
double truncated_rv(const SampledPath& path, double horizon_t, double threshold);
double bipower_variation(const SampledPath& path, double t_start, double t_end);

// ---------------------------------------------------------------------------
// Daily tuning rules

/// u = (log(1/delta))^(-1/30) / sqrt(bv_prev).
double mc_adaptive_u(double bv_prev, double delta);

/// v = 4 sqrt(bv_prev) delta^0.49.
double mc_truncation_threshold(double bv_prev, double delta);

struct PanelOptions {
  double level = 0.95;
  int max_retries = 3;
  double bv_floor = 1e-8;
  double pooled_scale = 0.3;  ///< u multiplier for the pooled slope ratio
};

/// Pooled slope ratio S_T and its per-day inputs.
struct PanelRatio {
  double value = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  bool degenerate = false;
};

/// Daily debiased estimates for a panel of day paths. The bias slope ratio is
/// pooled over all days at the smaller argument pooled_scale * u_t; the daily
/// bias level comes from each day's own difference at u_t and zeta u_t.
std::vector<IVEstimate> panel_debiased_daily(const std::vector<SampledPath>& days, int k_n,
                                             double zeta, const PanelOptions& opts = {});

/// Same as above, also returning the pooled ratio.
std::vector<IVEstimate> panel_debiased_daily(const std::vector<SampledPath>& days, int k_n,
                                             double zeta, const PanelOptions& opts,
                                             PanelRatio& ratio_out);

/// Bipower variation of each whole day path, floored at `floor` (flag set in
/// `floored` where applied).
std::vector<double> daily_bipower(const std::vector<SampledPath>& days, double floor,
                                  std::vector<bool>* floored = nullptr);

}  // namespace charvol
