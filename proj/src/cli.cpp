#include "charvol/cli.hpp"

#include "charvol/io.hpp"
#include "charvol/montecarlo.hpp"
#include "charvol/simulation.hpp"
#include "charvol/theory.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace charvol::cli {

namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("CHARVOL_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError("CHARVOL_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Writes via `write` to the file `path`, or to `fallback` when path is empty.
template <typename Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  write(f);
}

struct Common {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Master random seed (random and echoed when omitted)");
  sub->add_option("--threads", c.threads, "Worker threads (default: $CHARVOL_THREADS or all cores)");
  sub->add_option("--out", c.out, "Output file or directory");
  sub->add_option("--config", c.config, "JSON configuration; flags override its fields");
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  Common common;
  double beta = 0, eta = 0, grid = 0, delta = 0, c0 = 0, cir_kappa = 0, cir_theta = 0, cir_sigma = 0;
  int days = 0, substeps = 0;
};

int cmd_simulate(CLI::App* sub, SimulateArgs& a, std::ostream& out, std::ostream& err) {
  SimScenario s;
  if (!a.common.config.empty()) {
    try {
      s = load_json(a.common.config).get<SimScenario>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("scenario config: ") + e.what());
    }
  }
  auto given = [&](const char* flag) { return sub->count(flag) > 0; };
  if (given("--beta")) s.beta = a.beta;
  if (given("--eta")) s.eta = a.eta;
  if (given("--grid")) s.delta = 1.0 / a.grid;
  if (given("--delta")) s.delta = a.delta;
  if (given("--days")) s.days = a.days;
  if (given("--c0")) s.c0 = a.c0;
  if (given("--cir-kappa")) s.cir_kappa = a.cir_kappa;
  if (given("--cir-theta")) s.cir_theta = a.cir_theta;
  if (given("--cir-sigma")) s.cir_sigma = a.cir_sigma;
  if (given("--substeps")) s.substeps = a.substeps;
  if (a.common.seed) {
    s.seed = *a.common.seed;
  } else if (a.common.config.empty() || !load_json(a.common.config).contains("seed")) {
    s.seed = fresh_seed();
    err << "seed: " << s.seed << '\n';
  }
  s.validate();
  for (const auto& w : s.warnings()) err << "warning: " << w << '\n';

  const SimOutput sim = simulate_sv_path(s);
  nlohmann::json meta = {{"scenario", s}, {"warnings", s.warnings()}};
  if (a.common.out.empty()) {
    write_path_csv(out, sim.path);
    return kExitOk;
  }
  std::filesystem::create_directories(a.common.out);
  const std::filesystem::path dir(a.common.out);
  emit((dir / "path.csv").string(), out, [&](std::ostream& o) { write_path_csv(o, sim.path); });
  emit((dir / "truth.csv").string(), out, [&](std::ostream& o) { write_truth_csv(o, sim.true_iv); });
  emit((dir / "meta.json").string(), out, [&](std::ostream& o) { o << meta.dump(2) << '\n'; });
  return kExitOk;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
  Common common;
  std::string input;
  std::vector<std::string> estimators;
  int kn = 0;
  double u = 0, zeta = 1.5, threshold = 0, level = 0.95, delta = 0;
  int kappa = 1;
  std::string value_column, time_column = "time";
};

bool is_cf(EstimatorKind k) {
  return k == EstimatorKind::kCf || k == EstimatorKind::kCfDebiased || k == EstimatorKind::kCfPanel;
}

int cmd_estimate(CLI::App* sub, EstimateArgs& a, std::ostream& out, std::ostream& err) {
  auto given = [&](const char* flag) { return sub->count(flag) > 0; };
  DailyOptions opts;
  std::optional<int> kn;
  std::string input = a.input;
  std::vector<std::string> tags = a.estimators;
  std::optional<double> delta;

  if (!a.common.config.empty()) {
    const auto j = load_json(a.common.config);
    try {
      if (j.contains("input") && input.empty()) input = j.at("input").get<std::string>();
      if (j.contains("estimators") && tags.empty()) tags = j.at("estimators").get<std::vector<std::string>>();
      if (j.contains("estimator") && tags.empty()) tags = {j.at("estimator").get<std::string>()};
      if (j.contains("kn")) kn = j.at("kn").get<int>();
      if (j.contains("u")) opts.u = j.at("u").get<double>();
      if (j.contains("zeta")) opts.zeta = j.at("zeta").get<double>();
      if (j.contains("kappa")) opts.kappa = j.at("kappa").get<int>();
      if (j.contains("threshold")) opts.threshold = j.at("threshold").get<double>();
      if (j.contains("level")) opts.level = j.at("level").get<double>();
      if (j.contains("delta")) delta = j.at("delta").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("estimate config: ") + e.what());
    }
  }
  if (given("--kn")) kn = a.kn;
  if (given("--u")) opts.u = a.u;
  if (given("--zeta")) opts.zeta = a.zeta;
  if (given("--kappa")) opts.kappa = a.kappa;
  if (given("--threshold")) opts.threshold = a.threshold;
  if (given("--level")) opts.level = a.level;
  if (given("--delta")) delta = a.delta;

  if (input.empty()) throw ConfigError("missing required flag --input");
  if (tags.empty()) throw ConfigError("missing required flag --estimator");
  std::vector<EstimatorKind> kinds;
  for (const auto& t : tags) kinds.push_back(parse_estimator(t));
  for (auto k : kinds) {
    if (is_cf(k) && !kn) {
      throw ConfigError("missing required flag --kn for estimator '" + std::string(estimator_tag(k)) + "'");
    }
  }
  if (kn) opts.k_n = *kn;
  if (opts.kappa != 1 && opts.kappa != 2) throw ConfigError("--kappa must be 1 or 2");
  if (!(opts.zeta > 1.0)) throw ConfigError("--zeta must be > 1");

  CsvColumns cols;
  cols.time = a.time_column;
  cols.value = a.value_column;
  cols.delta = delta;
  const SampledPath path = ingest_csv_file(input, cols);

  std::vector<SampledPath> days;
  Eigen::Index per_day = 0;
  try {
    per_day = steps_per_day(path.delta());
  } catch (const InvalidInput&) {
    per_day = 0;
  }
  if (per_day > 0 && path.n_increments() >= per_day) {
    days = split_days(path, per_day);
    if (path.n_increments() % per_day != 0) err << "warning: trailing partial day dropped\n";
  } else {
    days = {path};
  }

  std::ostringstream body;
  write_estimate_header(body);
  for (auto k : kinds) {
    try {
      write_estimate_rows(body, estimator_tag(k), daily_estimates(k, days, opts));
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string(estimator_tag(k)) + ": " + e.what());
    }
  }
  emit(a.common.out, out, [&](std::ostream& o) { o << body.str(); });
  return kExitOk;
}

// ---------------------------------------------------------------------------
// montecarlo

struct MontecarloArgs {
  Common common;
  int reps = 0, kn = 0;
  double zeta = 1.5;
  bool full = false, timing = false;
};

int cmd_montecarlo(CLI::App* sub, MontecarloArgs& a, std::ostream& out, std::ostream& err) {
  if (a.common.config.empty()) throw ConfigError("missing required flag --config");
  const auto j = load_json(a.common.config);
  StudySpec spec;
  try {
    spec = study_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("study config: ") + e.what());
  }
  if (sub->count("--reps")) spec.reps = a.reps;
  if (sub->count("--kn")) spec.daily.k_n = a.kn;
  if (sub->count("--zeta")) spec.daily.zeta = a.zeta;
  if (a.common.seed) {
    spec.master_seed = *a.common.seed;
  } else if (!j.contains("seed")) {
    spec.master_seed = fresh_seed();
    err << "seed: " << spec.master_seed << '\n';
  }
  if (spec.reps < 1) throw ConfigError("--reps must be >= 1");
  spec.threads = resolve_threads(a.common.threads);
  if (a.full && a.common.out.empty()) throw ConfigError("--full requires --out");

  const StudyResult result = run_study(spec);
  emit(a.common.out, out, [&](std::ostream& o) { write_summary_csv(o, result.rows, a.timing); });
  if (a.full) {
    std::filesystem::path p(a.common.out);
    p.replace_extension(".json");
    nlohmann::json doc = {{"seed", spec.master_seed}, {"reps", spec.reps}, {"rows", study_errors_json(result)}};
    emit(p.string(), out, [&](std::ostream& o) { o << doc.dump() << '\n'; });
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// theory

struct TheoryArgs {
  Common common;
  double beta = 0, gamma = 0, gamma_plus = 0, gamma_minus = 0, u = 1.0, delta = 1.0 / 2400.0, t = 1.0;
  bool chi_only = false, cf_param = false;
  int kn = 0;
};

int cmd_theory(CLI::App* sub, TheoryArgs& a, std::ostream& out, std::ostream&) {
  auto given = [&](const char* flag) { return sub->count(flag) > 0; };
  const double beta = a.beta;
  nlohmann::json doc = {{"beta", beta}};
  if (beta > 0.0 && beta < 2.0) doc["chi"] = chi(beta);
  if (beta > 1.0 && beta < 3.0) doc["chi_prime"] = chi_prime(beta);
  if (!doc.contains("chi") && !doc.contains("chi_prime")) {
    throw ConfigError("--beta outside (0, 3): neither chi nor chi_prime defined");
  }

  const bool want_bias = !a.chi_only && (given("--gamma") || given("--gamma-plus") || given("--gamma-minus"));
  if (want_bias) {
    if (!(beta > 1.0 && beta < 2.0)) throw ConfigError("bias functionals need --beta in (1, 2)");
    BiasValue bias;
    if (a.cf_param) {
      if (!given("--gamma")) throw ConfigError("--cf-param needs the symmetric --gamma");
      bias = bias_functionals_cf(a.gamma, beta, a.u, a.delta, a.t);
      doc["parameterization"] = "cf";
      doc["cf_to_tail_scale"] = cf_to_tail_scale(beta);
    } else {
      StableTailParams p{beta, a.gamma_plus, a.gamma_minus};
      if (given("--gamma")) p = {beta, a.gamma, -a.gamma};
      bias = bias_functionals(p, a.u, a.delta, a.t);
      doc["parameterization"] = "tail";
    }
    doc["u"] = a.u;
    doc["delta"] = a.delta;
    doc["t"] = a.t;
    doc["A"] = bias.A;
    doc["A_prime"] = bias.A_prime;
  }
  if (given("--kn")) {
    const auto r = rate_diagnostics(a.kn, a.u, a.delta);
    doc["rates"] = {{"k_sqrt_delta", r.k_sqrt_delta},
                    {"k_delta_045", r.k_delta_045},
                    {"k_sqrt_delta_over_u4", r.k_sqrt_delta_over_u4},
                    {"warnings", r.warnings}};
  }
  emit(a.common.out, out, [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Characteristic-function estimators of integrated volatility", "charvol"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate the stochastic-volatility-plus-stable-jumps model");
  add_common(s, sim.common);
  s->add_option("--beta", sim.beta, "Stable index in (1,2)");
  s->add_option("--eta", sim.eta, "Jump scale");
  s->add_option("--grid", sim.grid, "Observations per day, 1/delta");
  s->add_option("--delta", sim.delta, "Grid spacing in days");
  s->add_option("--days", sim.days, "Number of days");
  s->add_option("--c0", sim.c0, "Initial variance");
  s->add_option("--cir-kappa", sim.cir_kappa, "Variance mean reversion");
  s->add_option("--cir-theta", sim.cir_theta, "Variance long-run mean");
  s->add_option("--cir-sigma", sim.cir_sigma, "Volatility of variance");
  s->add_option("--substeps", sim.substeps, "Euler substeps per observation");

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate daily integrated variance from a price CSV");
  add_common(e, est.common);
  e->add_option("--input", est.input, "Price CSV with header");
  e->add_option("--estimator", est.estimators, "rv, trv, bv, cf, cf-debiased, cf-panel")->delimiter(',');
  e->add_option("--kn", est.kn, "Block size (required for cf estimators)");
  e->add_option("--u", est.u, "Fixed CF argument (default: daily bipower rule)");
  e->add_option("--zeta", est.zeta, "Debias ratio");
  e->add_option("--kappa", est.kappa, "1 nonsymmetrized, 2 symmetrized");
  e->add_option("--threshold", est.threshold, "Fixed truncation level (default: daily bipower rule)");
  e->add_option("--level", est.level, "Confidence level");
  e->add_option("--delta", est.delta, "Grid spacing override");
  e->add_option("--value-column", est.value_column, "Price or log-price column name");
  e->add_option("--time-column", est.time_column, "Time column name, or 'index'");

  MontecarloArgs mc;
  auto* m = app.add_subcommand("montecarlo", "Run a replication study");
  add_common(m, mc.common);
  m->add_option("--reps", mc.reps, "Replications per scenario");
  m->add_option("--kn", mc.kn, "Block size override");
  m->add_option("--zeta", mc.zeta, "Debias ratio");
  m->add_flag("--full", mc.full, "Also write per-replication errors as JSON next to --out");
  m->add_flag("--timing", mc.timing, "Include mean runtime column");

  TheoryArgs th;
  auto* t = app.add_subcommand("theory", "Bias constants and functionals");
  add_common(t, th.common);
  t->add_option("--beta", th.beta, "Index beta")->required();
  t->add_flag("--chi", th.chi_only, "Only the chi constants");
  t->add_option("--gamma", th.gamma, "Symmetric jump scale (gamma+ = gamma, gamma- = -gamma)");
  t->add_option("--gamma-plus", th.gamma_plus, "Positive-jump scale");
  t->add_option("--gamma-minus", th.gamma_minus, "Negative-jump scale");
  t->add_flag("--cf-param", th.cf_param, "Interpret --gamma in CF standardization");
  t->add_option("--u", th.u, "CF argument");
  t->add_option("--delta", th.delta, "Grid spacing");
  t->add_option("--t", th.t, "Horizon");
  t->add_option("--kn", th.kn, "Block size for rate diagnostics");

  std::vector<std::string> argv_store{"charvol"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& x : argv_store) argv.push_back(x.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& pe) {
    err << "error: " << pe.what() << '\n';
    return kExitConfig;
  }

  try {
    if (s->parsed()) return cmd_simulate(s, sim, out, err);
    if (e->parsed()) return cmd_estimate(e, est, out, err);
    if (m->parsed()) return cmd_montecarlo(m, mc, out, err);
    if (t->parsed()) return cmd_theory(t, th, out, err);
  } catch (const DataError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kExitData;
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << '\n';
    return kExitConfig;
  } catch (const InvalidInput& ex) {
    err << "config error: " << ex.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& ex) {
    err << "config error: " << ex.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace charvol::cli
