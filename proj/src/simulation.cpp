#include "charvol/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace charvol {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

double stable_variate(double beta, Engine& rng) {
  std::uniform_real_distribution<double> angle(-0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
  std::exponential_distribution<double> expo(1.0);
  const double v = angle(rng);
  const double w = expo(rng);
  const double cv = std::cos(v);
  return std::sin(beta * v) / std::pow(cv, 1.0 / beta) *
         std::pow(std::cos((1.0 - beta) * v) / w, (1.0 - beta) / beta);
}

Eigen::VectorXd sample_stable_increments(double beta, Eigen::Index n, double dt, std::uint64_t seed) {
  if (!(beta > 0.0 && beta <= 2.0)) throw InvalidInput("stable sampler: beta must lie in (0, 2]");
  if (n < 1) throw InvalidInput("stable sampler: n must be >= 1");
  if (!(dt > 0.0)) throw InvalidInput("stable sampler: dt must be positive");
  Engine rng = make_engine(seed, Stream::kStable);
  const double scale = std::pow(dt, 1.0 / beta);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = scale * stable_variate(beta, rng);
  return out;
}

void SimScenario::validate() const {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidInput("scenario: delta must lie in (0, 1]");
  if (days < 1) throw InvalidInput("scenario: days must be >= 1");
  if (!(beta > 1.0 && beta < 2.0)) throw InvalidInput("scenario: beta must lie in (1, 2)");
  if (!(eta >= 0.0)) throw InvalidInput("scenario: eta must be >= 0");
  if (!(c0 > 0.0)) throw InvalidInput("scenario: c0 must be positive");
  if (!(cir_kappa >= 0.0) || !(cir_theta >= 0.0) || !(cir_sigma >= 0.0)) {
    throw InvalidInput("scenario: CIR parameters must be nonnegative");
  }
  if (substeps < 1) throw InvalidInput("scenario: substeps must be >= 1");
  (void)steps_per_day();
}

std::vector<std::string> SimScenario::warnings() const {
  std::vector<std::string> w;
  if (cir_sigma * cir_sigma > 2.0 * cir_kappa * cir_theta) {
    w.emplace_back("Feller condition sigma^2 <= 2 kappa theta violated; variance may touch zero");
  }
  return w;
}

Eigen::Index SimScenario::steps_per_day() const { return charvol::steps_per_day(delta); }

void to_json(nlohmann::json& j, const SimScenario& s) {
  j = nlohmann::json{{"delta", s.delta},         {"days", s.days},
                     {"beta", s.beta},           {"eta", s.eta},
                     {"c0", s.c0},               {"cir_kappa", s.cir_kappa},
                     {"cir_theta", s.cir_theta}, {"cir_sigma", s.cir_sigma},
                     {"substeps", s.substeps},   {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SimScenario& s) {
  static const char* const kKnown[] = {"delta",     "days",      "beta",      "eta",
                                       "c0",        "cir_kappa", "cir_theta", "cir_sigma",
                                       "substeps",  "seed",      "id",        "grid"};
  if (!j.is_object()) throw InvalidInput("scenario JSON must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw InvalidInput("scenario JSON: unknown field '" + key + "'");
    }
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  if (j.contains("grid")) s.delta = 1.0 / j.at("grid").get<double>();
  get("delta", s.delta);
  get("days", s.days);
  get("beta", s.beta);
  get("eta", s.eta);
  get("c0", s.c0);
  get("cir_kappa", s.cir_kappa);
  get("cir_theta", s.cir_theta);
  get("cir_sigma", s.cir_sigma);
  get("substeps", s.substeps);
  get("seed", s.seed);
}

namespace {

// One full-truncation Euler step of the variance.
struct CirStepper {
  double kappa, theta, sigma, dt, sqrt_dt;
  std::normal_distribution<double> normal{0.0, 1.0};

  double step(double c, Engine& rng) {
    const double cp = std::max(c, 0.0);
    return c + kappa * (theta - cp) * dt + sigma * std::sqrt(cp) * sqrt_dt * normal(rng);
  }
};

CirStepper make_stepper(const SimScenario& s) {
  const double dt = s.fine_dt();
  return {s.cir_kappa, s.cir_theta, s.cir_sigma, dt, std::sqrt(dt)};
}

}  // namespace

Eigen::VectorXd simulate_cir(const SimScenario& scenario) {
  scenario.validate();
  const Eigen::Index n_fine = scenario.days * scenario.steps_per_day() * scenario.substeps;
  Engine rng = make_engine(scenario.seed, Stream::kVolBrownian);
  CirStepper stepper = make_stepper(scenario);
  Eigen::VectorXd c(n_fine + 1);
  c[0] = scenario.c0;
  for (Eigen::Index k = 0; k < n_fine; ++k) c[k + 1] = stepper.step(c[k], rng);
  return c;
}

std::vector<double> daily_integrals(const Eigen::VectorXd& fine_c, double fine_dt,
                                    Eigen::Index fine_steps_per_day) {
  const Eigen::Index days = (fine_c.size() - 1) / fine_steps_per_day;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(days));
  for (Eigen::Index d = 0; d < days; ++d) {
    const auto seg = fine_c.segment(d * fine_steps_per_day, fine_steps_per_day + 1).cwiseMax(0.0);
    out.push_back(fine_dt * (seg.sum() - 0.5 * (seg[0] + seg[fine_steps_per_day])));
  }
  return out;
}

SimOutput simulate_sv_path(const SimScenario& scenario, const SimOptions& opts) {
  scenario.validate();
  const Eigen::Index per_day = scenario.steps_per_day();
  const Eigen::Index n_obs = scenario.days * per_day;
  const int m = scenario.substeps;
  const double dt = scenario.fine_dt();
  const double sqrt_dt = std::sqrt(dt);
  const double stable_scale = std::pow(scenario.delta, 1.0 / scenario.beta);

  Engine rng_w = make_engine(scenario.seed, Stream::kPriceBrownian);
  Engine rng_c = make_engine(scenario.seed, Stream::kVolBrownian);
  Engine rng_y = make_engine(scenario.seed, Stream::kStable);
  std::normal_distribution<double> normal(0.0, 1.0);
  CirStepper stepper = make_stepper(scenario);

  Eigen::VectorXd x(n_obs + 1);
  x[0] = 0.0;
  std::optional<Eigen::VectorXd> spot;
  if (opts.record_spot) {
    spot.emplace(n_obs * m + 1);
    (*spot)[0] = scenario.c0;
  }
  std::vector<double> true_iv;
  true_iv.reserve(static_cast<std::size_t>(scenario.days));

  double c = scenario.c0;
  CompensatedSum level;
  CompensatedSum day_integral;
  day_integral.add(0.5 * std::max(c, 0.0));
  for (Eigen::Index i = 0; i < n_obs; ++i) {
    CompensatedSum inc;
    for (int s = 0; s < m; ++s) {
      inc.add(std::sqrt(std::max(c, 0.0)) * sqrt_dt * normal(rng_w));
      c = stepper.step(c, rng_c);
      if (spot) (*spot)[i * m + s + 1] = c;
      const bool day_end = s == m - 1 && (i + 1) % per_day == 0;
      day_integral.add(day_end ? 0.5 * std::max(c, 0.0) : std::max(c, 0.0));
    }
    // Stable increments over one observation step are drawn directly: the sum
    // of the substep increments has exactly this law.
    if (scenario.eta > 0.0) inc.add(scenario.eta * stable_scale * stable_variate(scenario.beta, rng_y));
    level.add(inc.value());
    x[i + 1] = level.value();
    if ((i + 1) % per_day == 0) {
      true_iv.push_back(dt * day_integral.value());
      day_integral = CompensatedSum{};
      day_integral.add(0.5 * std::max(c, 0.0));
    }
  }
  return {SampledPath(std::move(x), scenario.delta), std::move(true_iv), std::move(spot)};
}

SimOutput simulate_levy_const(double sigma, double gamma, double beta, double delta, Eigen::Index n,
                              std::uint64_t seed) {
  if (!(beta > 1.0 && beta < 2.0)) throw InvalidInput("levy: beta must lie in (1, 2)");
  if (!(sigma >= 0.0)) throw InvalidInput("levy: sigma must be >= 0");
  if (!(delta > 0.0)) throw InvalidInput("levy: delta must be positive");
  if (n < 1) throw InvalidInput("levy: n must be >= 1");
  Engine rng_w = make_engine(seed, Stream::kPriceBrownian);
  Engine rng_y = make_engine(seed, Stream::kStable);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = sigma * std::sqrt(delta);
  const double stable_scale = gamma * std::pow(delta, 1.0 / beta);

  Eigen::VectorXd x(n + 1);
  x[0] = 0.0;
  CompensatedSum level;
  for (Eigen::Index i = 0; i < n; ++i) {
    double inc = sd * normal(rng_w);
    if (gamma != 0.0) inc += stable_scale * stable_variate(beta, rng_y);
    level.add(inc);
    x[i + 1] = level.value();
  }

  std::vector<double> true_iv;
  const double duration = static_cast<double>(n) * delta;
  for (double start = 0.0; start < duration - 1e-12; start += 1.0) {
    true_iv.push_back(sigma * sigma * std::min(1.0, duration - start));
  }
  return {SampledPath(std::move(x), delta), std::move(true_iv), std::nullopt};
}

}  // namespace charvol
