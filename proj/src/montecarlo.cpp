#include "charvol/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace charvol {

namespace {

constexpr std::pair<EstimatorKind, std::string_view> kTags[] = {
    {EstimatorKind::kRealized, "rv"},           {EstimatorKind::kTruncated, "trv"},
    {EstimatorKind::kBipower, "bv"},            {EstimatorKind::kCf, "cf"},
    {EstimatorKind::kCfDebiased, "cf-debiased"}, {EstimatorKind::kCfPanel, "cf-panel"},
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// (1 / (3 delta)) sum x^4 over |x| <= threshold: estimate of int c^2.
double quarticity(const Eigen::VectorXd& incs, double delta, double threshold) {
  const auto a = incs.array();
  return (a.abs() <= threshold).select(a.square().square(), 0.0).sum() / (3.0 * delta);
}

IVEstimate baseline_estimate(double value, double avar, double delta, double level, const char* method,
                             std::uint32_t flags) {
  IVEstimate e;
  e.value = value;
  e.avar = avar;
  e.method = method;
  e.flags = flags;
  attach_interval(e, delta, level);
  return e;
}

}  // namespace

EstimatorKind parse_estimator(std::string_view tag) {
  for (const auto& [kind, name] : kTags) {
    if (name == tag) return kind;
  }
  throw InvalidInput("unknown estimator '" + std::string(tag) +
                     "' (expected rv, trv, bv, cf, cf-debiased or cf-panel)");
}

std::string_view estimator_tag(EstimatorKind kind) {
  for (const auto& [k, name] : kTags) {
    if (k == kind) return name;
  }
  return "?";
}

int default_block_size(double delta) {
  const double n = 1.0 / delta;
  if (std::abs(n - 2400.0) < 1e-6) return 240;
  if (std::abs(n - 4800.0) < 1e-6) return 320;
  return std::max(2, static_cast<int>(std::lround(4.9 * std::sqrt(n))));
}

std::vector<IVEstimate> daily_estimates(EstimatorKind kind, const std::vector<SampledPath>& days,
                                        const DailyOptions& opts) {
  if (days.empty()) throw InvalidInput("daily_estimates: no days");
  const double delta = days.front().delta();
  const int k_n = opts.k_n > 0 ? opts.k_n : default_block_size(delta);

  std::vector<bool> floored;
  std::vector<double> bv;
  const bool needs_bv = (kind == EstimatorKind::kTruncated && !opts.threshold) ||
                        ((kind == EstimatorKind::kCf || kind == EstimatorKind::kCfDebiased) && !opts.u);
  if (needs_bv) bv = daily_bipower(days, opts.panel.bv_floor, &floored);
  auto prev_bv = [&](std::size_t t) { return bv[t == 0 ? 0 : t - 1]; };
  auto bv_flag = [&](std::size_t t) { return floored[t == 0 ? 0 : t - 1] ? kFlagBvFloored : kFlagNone; };

  std::vector<IVEstimate> out;
  out.reserve(days.size());
  switch (kind) {
    case EstimatorKind::kCfPanel: {
      PanelOptions p = opts.panel;
      p.level = opts.level;
      return panel_debiased_daily(days, k_n, opts.zeta, p);
    }
    case EstimatorKind::kRealized:
      for (const auto& day : days) {
        const Eigen::VectorXd incs = increments(day);
        const double q = quarticity(incs, day.delta(), std::numeric_limits<double>::infinity());
        out.push_back(baseline_estimate(realized_variance(incs), 2.0 * q, day.delta(), opts.level, "rv",
                                        kFlagNone));
      }
      return out;
    case EstimatorKind::kTruncated:
      for (std::size_t t = 0; t < days.size(); ++t) {
        const Eigen::VectorXd incs = increments(days[t]);
        const double v = opts.threshold ? *opts.threshold
                                        : mc_truncation_threshold(prev_bv(t), days[t].delta());
        if (!(v > 0.0)) throw InvalidInput("truncation threshold must be positive");
        const double q = quarticity(incs, days[t].delta(), v);
        out.push_back(baseline_estimate(truncated_variance(incs, v), 2.0 * q, days[t].delta(),
                                        opts.level, "trv", opts.threshold ? kFlagNone : bv_flag(t)));
      }
      return out;
    case EstimatorKind::kBipower:
      for (const auto& day : days) {
        out.push_back(baseline_estimate(bipower(increments(day)), kNaN, day.delta(), opts.level, "bv",
                                        kFlagNone));
      }
      return out;
    case EstimatorKind::kCf:
    case EstimatorKind::kCfDebiased:
      for (std::size_t t = 0; t < days.size(); ++t) {
        EstimatorConfig cfg;
        cfg.k_n = k_n;
        cfg.zeta = opts.zeta;
        cfg.kappa = opts.kappa;
        cfg.u = opts.u ? *opts.u : mc_adaptive_u(prev_bv(t), days[t].delta());
        const double horizon = days[t].duration();
        IVEstimate e = kind == EstimatorKind::kCf ? integrated_vol(days[t], cfg, horizon, opts.level)
                                                  : debiased_iv(days[t], cfg, horizon, opts.level);
        if (!opts.u) e.flags |= bv_flag(t);
        out.push_back(std::move(e));
      }
      return out;
  }
  throw InvalidInput("daily_estimates: unhandled estimator");
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("median of empty sample");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

ErrorSummary summarize(std::vector<double> errors) {
  if (errors.empty()) throw InvalidInput("summarize: empty error sample");
  std::vector<double> abs_errors(errors.size());
  std::transform(errors.begin(), errors.end(), abs_errors.begin(), [](double e) { return std::abs(e); });
  return {median(std::move(errors)), median(std::move(abs_errors))};
}

double coverage_test(const std::vector<IVEstimate>& estimates, const std::vector<double>& truths) {
  if (estimates.size() != truths.size()) throw InvalidInput("coverage_test: length mismatch");
  if (estimates.empty()) throw InvalidInput("coverage_test: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (estimates[i].ci_low <= truths[i] && truths[i] <= estimates[i].ci_high) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truths.size());
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t scenario_index, int rep) {
  return derive_seed(derive_seed(master, scenario_index), static_cast<std::uint64_t>(rep));
}

namespace {

struct RepOutcome {
  std::vector<double> errors;
  std::vector<double> z;
  std::size_t with_ci = 0;
  std::size_t hits = 0;
  double runtime_ms = 0.0;
};

// Order-statistic standard error of the median from a sorted sample.
double median_standard_error(std::vector<double> sorted) {
  const std::size_t n = sorted.size();
  if (n < 4) return kNaN;
  std::sort(sorted.begin(), sorted.end());
  const double half_width = 0.5 * 1.959963984540054 * std::sqrt(static_cast<double>(n));
  const auto lo = static_cast<std::ptrdiff_t>(std::floor(0.5 * n - half_width));
  const auto hi = static_cast<std::ptrdiff_t>(std::ceil(0.5 * n + half_width));
  const auto clamp = [&](std::ptrdiff_t i) {
    return sorted[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1))];
  };
  return (clamp(hi) - clamp(lo)) / (2.0 * 1.959963984540054);
}

}  // namespace

StudyResult run_study(const StudySpec& spec) {
  if (spec.reps < 1) throw InvalidInput("run_study: reps must be >= 1");
  if (spec.scenarios.empty()) throw InvalidInput("run_study: no scenarios");
  if (spec.estimators.empty()) throw InvalidInput("run_study: no estimators");
  for (const auto& s : spec.scenarios) s.sim.validate();

  const std::size_t n_est = spec.estimators.size();
  const auto reps = static_cast<std::size_t>(spec.reps);
  StudyResult result;

  for (std::size_t si = 0; si < spec.scenarios.size(); ++si) {
    const auto& scenario = spec.scenarios[si];
    // outcomes[rep][estimator]
    std::vector<std::vector<RepOutcome>> outcomes(reps, std::vector<RepOutcome>(n_est));

    auto run_rep = [&](std::size_t r) {
      SimScenario sim = scenario.sim;
      sim.seed = replication_seed(spec.master_seed, si, static_cast<int>(r));
      const SimOutput out = simulate_sv_path(sim);
      const auto days = split_days(out.path, sim.steps_per_day());
      for (std::size_t e = 0; e < n_est; ++e) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto est = daily_estimates(spec.estimators[e], days, spec.daily);
        const auto t1 = std::chrono::steady_clock::now();
        RepOutcome& o = outcomes[r][e];
        o.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        for (std::size_t d = 0; d < est.size(); ++d) {
          const double err = est[d].value - out.true_iv[d];
          o.errors.push_back(err);
          if (std::isfinite(est[d].ci_low)) {
            ++o.with_ci;
            if (est[d].ci_low <= out.true_iv[d] && out.true_iv[d] <= est[d].ci_high) ++o.hits;
            const double sd = std::sqrt(est[d].avar * days[d].delta());
            if (sd > 0.0) o.z.push_back(err / sd);
          }
        }
      }
    };

    const int workers = std::max(1, std::min<int>(spec.threads, spec.reps));
    if (workers == 1) {
      for (std::size_t r = 0; r < reps; ++r) run_rep(r);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t r = next++; r < reps; r = next++) run_rep(r);
          } catch (...) {
            failures[static_cast<std::size_t>(w)] = std::current_exception();
            next = reps;
          }
        });
      }
      pool.clear();
      for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
      }
    }

    // Ordered reduction by replication index.
    for (std::size_t e = 0; e < n_est; ++e) {
      McSummary row;
      row.scenario_id = scenario.id;
      row.estimator_tag = std::string(estimator_tag(spec.estimators[e]));
      row.replications = spec.reps;
      std::vector<double> pooled;
      std::vector<double> z;
      std::vector<std::vector<double>> per_rep;
      std::size_t with_ci = 0;
      std::size_t hits = 0;
      double runtime = 0.0;
      for (std::size_t r = 0; r < reps; ++r) {
        const RepOutcome& o = outcomes[r][e];
        pooled.insert(pooled.end(), o.errors.begin(), o.errors.end());
        z.insert(z.end(), o.z.begin(), o.z.end());
        with_ci += o.with_ci;
        hits += o.hits;
        runtime += o.runtime_ms;
        per_rep.push_back(o.errors);
      }
      row.n_errors = pooled.size();
      const auto s = summarize(pooled);
      row.median_bias = s.median_bias;
      row.mad = s.mad;
      row.median_bias_se = median_standard_error(pooled);
      row.coverage = with_ci > 0 ? static_cast<double>(hits) / static_cast<double>(with_ci) : kNaN;
      if (!z.empty()) {
        double mean = 0.0;
        for (double v : z) mean += v;
        mean /= static_cast<double>(z.size());
        double ss = 0.0;
        for (double v : z) ss += (v - mean) * (v - mean);
        row.z_mean = mean;
        row.z_var = z.size() > 1 ? ss / static_cast<double>(z.size() - 1) : kNaN;
      } else {
        row.z_mean = row.z_var = kNaN;
      }
      row.mean_runtime_ms = runtime / static_cast<double>(reps);
      result.rows.push_back(std::move(row));
      result.errors.push_back(std::move(per_rep));
    }
  }
  return result;
}

StudySpec study_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("study config must be a JSON object");
  StudySpec spec;
  if (!j.contains("scenarios") || !j.at("scenarios").is_array() || j.at("scenarios").empty()) {
    throw InvalidInput("study config: 'scenarios' must be a nonempty array");
  }
  std::size_t index = 0;
  for (const auto& sj : j.at("scenarios")) {
    StudyScenario sc;
    sc.sim = sj.get<SimScenario>();
    sc.id = sj.contains("id") ? sj.at("id").get<std::string>() : "scenario" + std::to_string(index);
    sc.sim.validate();
    spec.scenarios.push_back(std::move(sc));
    ++index;
  }
  if (j.contains("estimators")) {
    for (const auto& e : j.at("estimators")) spec.estimators.push_back(parse_estimator(e.get<std::string>()));
  } else {
    spec.estimators = {EstimatorKind::kCfPanel, EstimatorKind::kTruncated};
  }
  if (j.contains("reps")) spec.reps = j.at("reps").get<int>();
  if (j.contains("seed")) spec.master_seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("kn")) spec.daily.k_n = j.at("kn").get<int>();
  if (j.contains("zeta")) spec.daily.zeta = j.at("zeta").get<double>();
  if (j.contains("level")) spec.daily.level = j.at("level").get<double>();
  if (spec.reps < 1) throw InvalidInput("study config: reps must be >= 1");
  return spec;
}

}  // namespace charvol
