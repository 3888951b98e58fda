#include "charvol/estimators.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace charvol {

namespace {

// Mean of 1 - cos(theta) = 2 sin^2(theta / 2) over the block. Working with
// the complement keeps full relative precision when u is small.
double block_cf_complement(const Eigen::Ref<const Eigen::VectorXd>& incs, double scale,
                           const BlockIndex& block, int kappa) {
  if (block.first_increment < 0 || block.count < 1 ||
      block.first_increment + block.count > incs.size()) {
    throw std::out_of_range("local_cf: block outside increment range");
  }
  if (block.count % kappa != 0) {
    throw InvalidInput("local_cf: block count not a multiple of kappa");
  }
  const Eigen::Index k = block.count / kappa;
  double acc = 0.0;
  if (kappa == 1) {
    for (Eigen::Index l = 0; l < k; ++l) {
      const double s = std::sin(0.5 * scale * incs[block.first_increment + l]);
      acc += s * s;
    }
  } else {
    for (Eigen::Index l = 0; l < k; ++l) {
      const Eigen::Index i = block.first_increment + 2 * l;
      const double s = std::sin(0.5 * scale * (incs[i] - incs[i + 1]));
      acc += s * s;
    }
  }
  return 2.0 * acc / static_cast<double>(k);
}

void check_kappa(int kappa) {
  if (kappa != 1 && kappa != 2) throw InvalidInput("kappa must be 1 or 2");
}

std::string cf_method(const char* name, int kappa, double u) {
  std::ostringstream os;
  os << name << "(kappa=" << kappa << ",u=" << u << ")";
  return os.str();
}

struct CfEval {
  double value;
  SpotSeries spot;
};

CfEval evaluate_cf(const Eigen::Ref<const Eigen::VectorXd>& incs, double delta, double u, int k_n,
                   int kappa, Eigen::Index horizon) {
  SpotSeries spot = spot_series(incs, delta, u, k_n, kappa, horizon);
  if (spot.blocks.empty()) throw InvalidInput("horizon shorter than one block");
  const double value = integrated_from_spot(spot, delta);
  return {value, std::move(spot)};
}

std::uint32_t clipped_flag(const SpotSeries& spot) {
  for (const auto& b : spot.blocks) {
    if (b.clipped) return kFlagClippedBlocks;
  }
  return kFlagNone;
}

}  // namespace

std::string flags_to_string(std::uint32_t flags) {
  static constexpr std::pair<std::uint32_t, const char*> kNames[] = {
      {kFlagCorrectionSkipped, "correction_skipped"},
      {kFlagRetried, "retried"},
      {kFlagClampedZero, "clamped_zero"},
      {kFlagBvFloored, "bv_floored"},
      {kFlagClippedBlocks, "clipped_blocks"},
  };
  std::string out;
  for (const auto& [bit, name] : kNames) {
    if (flags & bit) {
      if (!out.empty()) out += '|';
      out += name;
    }
  }
  return out.empty() ? "none" : out;
}

double normal_two_sided_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("confidence level must lie in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>{}, 0.5 + 0.5 * level);
}

void attach_interval(IVEstimate& est, double delta, double level) {
  est.level = level;
  if (!(est.avar >= 0.0)) {
    est.ci_low = est.ci_high = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  const double half = normal_two_sided_quantile(level) * std::sqrt(est.avar * delta);
  est.ci_low = est.value - half;
  est.ci_high = est.value + half;
}

double local_cf(const Eigen::Ref<const Eigen::VectorXd>& incs, double delta, double u,
                const BlockIndex& block, int kappa) {
  check_kappa(kappa);
  if (!(delta > 0.0)) throw InvalidInput("local_cf: delta must be positive");
  if (!(u > 0.0)) throw InvalidInput("local_cf: u must be positive");
  return 1.0 - block_cf_complement(incs, u / std::sqrt(delta), block, kappa);
}

double spot_vol_bound(double u, int k_n, int kappa) {
  return kappa == 2 ? std::log(static_cast<double>(k_n)) / (2.0 * u * u)
                    : std::log(static_cast<double>(k_n)) / (u * u);
}

SpotVol spot_vol(double L_value, double u, int k_n, int kappa) {
  check_kappa(kappa);
  if (k_n < 2) throw InvalidInput("spot_vol: k_n must be >= 2");
  if (!(u > 0.0)) throw InvalidInput("spot_vol: u must be positive");
  if (!(L_value >= -1.0 && L_value <= 1.0)) {
    throw InvalidInput("spot_vol: L value outside [-1, 1]");
  }
  const double floor = 1.0 / std::sqrt(static_cast<double>(k_n));
  const double bound = spot_vol_bound(u, k_n, kappa);
  if (L_value <= floor) return {bound, true};
  const double scale = kappa == 2 ? 1.0 / (u * u) : 2.0 / (u * u);
  const double c = -scale * std::log(L_value);
  return {std::clamp(c, 0.0, bound) + 0.0, false};
}

SpotSeries spot_series(const Eigen::Ref<const Eigen::VectorXd>& incs, double delta, double u,
                       int k_n, int kappa, Eigen::Index horizon_increments) {
  check_kappa(kappa);
  if (!(u > 0.0)) throw InvalidInput("spot_series: u must be positive");
  if (!(delta > 0.0)) throw InvalidInput("spot_series: delta must be positive");
  SpotSeries out{u, kappa, k_n, {}};
  const auto blocks = block_partition(incs.size(), k_n, kappa, horizon_increments);
  out.blocks.reserve(blocks.size());

  const double arg_scale = u / std::sqrt(delta);
  const double floor = 1.0 / std::sqrt(static_cast<double>(k_n));
  const double bound = spot_vol_bound(u, k_n, kappa);
  const double log_scale = kappa == 2 ? 1.0 / (u * u) : 2.0 / (u * u);
  for (const auto& b : blocks) {
    const double d = block_cf_complement(incs, arg_scale, b, kappa);
    const double L = 1.0 - d;
    SpotBlock sb{b, L, bound, true};
    if (L > floor) {
      sb.c_hat = std::clamp(-log_scale * std::log1p(-d), 0.0, bound) + 0.0;
      sb.clipped = false;
    }
    out.blocks.push_back(sb);
  }
  return out;
}

double integrated_from_spot(const SpotSeries& spot, double delta) {
  const double u2 = spot.u * spot.u;
  const double k = static_cast<double>(spot.k_n);
  const double v_n = k * delta;
  double acc = 0.0;
  if (spot.kappa == 2) {
    for (const auto& b : spot.blocks) {
      const double s = std::sinh(u2 * b.c_hat);
      acc += b.c_hat - s * s / (u2 * k);
    }
    return 2.0 * v_n * acc;
  }
  for (const auto& b : spot.blocks) {
    const double s = std::sinh(0.5 * u2 * b.c_hat);
    acc += b.c_hat - 2.0 * s * s / (u2 * k);
  }
  return v_n * acc;
}

double avar_plugin(const SpotSeries& spot, double delta, int power) {
  if (power != 2 && power != 4) throw InvalidInput("avar_plugin: power must be 2 or 4");
  if (spot.blocks.empty()) throw InvalidInput("avar_plugin: empty spot series");
  double acc = 0.0;
  for (const auto& b : spot.blocks) {
    const double c2 = b.c_hat * b.c_hat;
    acc += power == 2 ? c2 : c2 * c2;
  }
  return static_cast<double>(spot.kappa) * static_cast<double>(spot.k_n) * delta * acc;
}

IVEstimate integrated_vol(const SampledPath& path, const EstimatorConfig& cfg, double horizon_t,
                          double level) {
  cfg.validate();
  const Eigen::VectorXd incs = increments(path);
  const Eigen::Index horizon = horizon_increments(path, horizon_t);
  auto [value, spot] = evaluate_cf(incs, path.delta(), cfg.u, cfg.k_n, cfg.kappa, horizon);

  IVEstimate est;
  est.value = value;
  est.avar = clt_constant(cfg.kappa) * avar_plugin(spot, path.delta(), 2);
  est.u_used = cfg.u;
  est.method = cf_method("cf", cfg.kappa, cfg.u);
  est.flags = clipped_flag(spot);
  attach_interval(est, path.delta(), level);
  return est;
}

DebiasResult debias_combine(double c_u, double c_zu, double c_zzu) {
  const double num = c_zu - c_u;
  const double den = c_zzu - 2.0 * c_zu + c_u;
  if (!(std::abs(den) >= kDebiasRelTol * std::max(std::abs(c_u), kDebiasAbsFloor))) {
    return {c_u, true};
  }
  return {c_u - num * num / den, false};
}

IVEstimate debiased_iv(const SampledPath& path, const EstimatorConfig& cfg, double horizon_t,
                       double level) {
  cfg.validate();
  const Eigen::VectorXd incs = increments(path);
  const Eigen::Index horizon = horizon_increments(path, horizon_t);
  const double delta = path.delta();
  auto base = evaluate_cf(incs, delta, cfg.u, cfg.k_n, cfg.kappa, horizon);
  const double c_zu = evaluate_cf(incs, delta, cfg.zeta * cfg.u, cfg.k_n, cfg.kappa, horizon).value;
  const double c_zzu =
      evaluate_cf(incs, delta, cfg.zeta * cfg.zeta * cfg.u, cfg.k_n, cfg.kappa, horizon).value;
  const auto combined = debias_combine(base.value, c_zu, c_zzu);

  IVEstimate est;
  est.value = combined.value;
  est.avar = clt_constant(cfg.kappa) * avar_plugin(base.spot, delta, 2);
  est.u_used = cfg.u;
  est.method = cf_method("cf-debiased", cfg.kappa, cfg.u);
  est.flags = clipped_flag(base.spot) | (combined.skipped ? kFlagCorrectionSkipped : kFlagNone);
  attach_interval(est, delta, level);
  return est;
}

double realized_vol(const SampledPath& path, double horizon_t) {
  const Eigen::Index m = horizon_increments(path, horizon_t);
  return realized_variance(increments(path).head(m));
}

double truncated_rv(const SampledPath& path, double horizon_t, double threshold) {
  if (!(threshold > 0.0)) throw InvalidInput("truncated_rv: threshold must be positive");
  const Eigen::Index m = horizon_increments(path, horizon_t);
  return truncated_variance(increments(path).head(m), threshold);
}

double bipower_variation(const SampledPath& path, double t_start, double t_end) {
  if (!(t_end > t_start)) throw InvalidInput("bipower_variation: empty window");
  const Eigen::Index first = horizon_increments(path, t_start);
  const Eigen::Index last = horizon_increments(path, t_end);
  if (last - first < 2) throw InvalidInput("bipower_variation: window holds fewer than 2 increments");
  return bipower(increments(path).segment(first, last - first));
}

double mc_adaptive_u(double bv_prev, double delta) {
  if (!(bv_prev > 0.0)) throw InvalidInput("mc_adaptive_u: bipower variation must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("mc_adaptive_u: delta must lie in (0,1)");
  return std::pow(std::log(1.0 / delta), -1.0 / 30.0) / std::sqrt(bv_prev);
}

double mc_truncation_threshold(double bv_prev, double delta) {
  if (!(bv_prev > 0.0)) throw InvalidInput("mc_truncation_threshold: bipower variation must be positive");
  if (!(delta > 0.0)) throw InvalidInput("mc_truncation_threshold: delta must be positive");
  return 4.0 * std::sqrt(bv_prev) * std::pow(delta, 0.49);
}

std::vector<double> daily_bipower(const std::vector<SampledPath>& days, double floor,
                                  std::vector<bool>* floored) {
  std::vector<double> bv;
  bv.reserve(days.size());
  if (floored) floored->assign(days.size(), false);
  for (std::size_t t = 0; t < days.size(); ++t) {
    double b = bipower(increments(days[t]));
    if (!(b > 0.0)) {
      b = floor;
      if (floored) (*floored)[t] = true;
    }
    bv.push_back(b);
  }
  return bv;
}

std::vector<IVEstimate> panel_debiased_daily(const std::vector<SampledPath>& days, int k_n,
                                             double zeta, const PanelOptions& opts) {
  PanelRatio ignored;
  return panel_debiased_daily(days, k_n, zeta, opts, ignored);
}

std::vector<IVEstimate> panel_debiased_daily(const std::vector<SampledPath>& days, int k_n,
                                             double zeta, const PanelOptions& opts,
                                             PanelRatio& ratio_out) {
  if (days.size() < 2) throw InvalidInput("panel_debiased_daily: need at least 2 days");
  if (!(zeta > 1.0)) throw InvalidInput("panel_debiased_daily: zeta must be > 1");
  if (k_n < 2) throw InvalidInput("panel_debiased_daily: k_n must be >= 2");
  if (opts.max_retries < 0) throw InvalidInput("panel_debiased_daily: max_retries must be >= 0");

  std::vector<bool> floored;
  const auto bv = daily_bipower(days, opts.bv_floor, &floored);

  const std::size_t T = days.size();
  std::vector<Eigen::VectorXd> incs(T);
  std::vector<double> u(T);
  for (std::size_t t = 0; t < T; ++t) {
    incs[t] = increments(days[t]);
    u[t] = mc_adaptive_u(bv[t == 0 ? 0 : t - 1], days[t].delta());
  }

  auto cf = [&](std::size_t t, double arg) {
    const Eigen::Index horizon = days[t].n_increments();
    return evaluate_cf(incs[t], days[t].delta(), arg, k_n, 1, horizon);
  };

  // Pooled slope ratio at the reduced argument.
  double num = 0.0;
  double den = 0.0;
  double level_sum = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double a = opts.pooled_scale * u[t];
    const double c1 = cf(t, a).value;
    const double c2 = cf(t, zeta * a).value;
    const double c3 = cf(t, zeta * zeta * a).value;
    num += c2 - c1;
    den += c3 - 2.0 * c2 + c1;
    level_sum += c1;
  }
  ratio_out = PanelRatio{0.0, num, den, false};
  if (!(std::abs(den) >= kDebiasRelTol * std::max(std::abs(level_sum), kDebiasAbsFloor))) {
    ratio_out.degenerate = true;
  } else {
    ratio_out.value = std::min(num / den, 0.0) + 0.0;
  }
  const double S = ratio_out.value;

  std::vector<IVEstimate> out;
  out.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double delta = days[t].delta();
    double arg = u[t];
    std::uint32_t flags = floored[t] ? kFlagBvFloored : kFlagNone;
    if (ratio_out.degenerate) flags |= kFlagCorrectionSkipped;

    auto base = cf(t, arg);
    double value = base.value - S * std::min(cf(t, zeta * arg).value - base.value, 0.0);
    for (int attempt = 0; value < 0.0 && attempt < opts.max_retries; ++attempt) {
      arg *= 2.0 / 3.0;
      base = cf(t, arg);
      value = base.value - S * std::min(cf(t, zeta * arg).value - base.value, 0.0);
      flags |= kFlagRetried;
    }
    if (value < 0.0) {
      value = 0.0;
      flags |= kFlagClampedZero;
    }

    IVEstimate est;
    est.value = value;
    est.avar = clt_constant(1) * avar_plugin(base.spot, delta, 2);
    est.u_used = arg;
    est.method = cf_method("cf-panel", 1, arg);
    est.flags = flags | clipped_flag(base.spot);
    attach_interval(est, delta, opts.level);
    out.push_back(std::move(est));
  }
  return out;
}

}  // namespace charvol
