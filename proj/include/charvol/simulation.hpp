#pragma once

#include "charvol/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace charvol {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer over (seed, stream): independent child seeds for
/// sub-streams and replications.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Sub-stream ids used by the simulators.
enum class Stream : std::uint64_t { kPriceBrownian = 1, kVolBrownian = 2, kStable = 3 };

inline Engine make_engine(std::uint64_t seed, Stream s) {
  return Engine(derive_seed(seed, static_cast<std::uint64_t>(s)));
}

/// One draw of a symmetric stable variable with characteristic function
/// exp(-|u|^beta), by the Chambers-Mallows-Stuck transformation.
double stable_variate(double beta, Engine& rng);

/// n i.i.d. increments over time dt: characteristic function
/// exp(-dt |u|^beta). beta in (0, 2]; beta = 2 gives Normal(0, 2 dt).
Eigen::VectorXd sample_stable_increments(double beta, Eigen::Index n, double dt, std::uint64_t seed);

/// Stochastic-volatility-plus-stable-jumps model:
///   dX = sqrt(c) dW + eta dY,   dc = kappa (theta - c) dt + sigma sqrt(c) dW'.
struct SimScenario {
  double delta = 1.0 / 2400.0;
  int days = 1;
  double beta = 1.5;
  double eta = 0.0;
  double c0 = 1.0;
  double cir_kappa = 0.03;
  double cir_theta = 1.0;
  double cir_sigma = 0.15;
  int substeps = 10;
  std::uint64_t seed = 0;

  void validate() const;
  /// Non-fatal remarks (e.g. Feller condition violated).
  std::vector<std::string> warnings() const;

  Eigen::Index steps_per_day() const;
  double fine_dt() const { return delta / substeps; }
};

void to_json(nlohmann::json& j, const SimScenario& s);
void from_json(const nlohmann::json& j, SimScenario& s);

struct SimOutput {
  SampledPath path;
  std::vector<double> true_iv;                 ///< daily integrated variance
  std::optional<Eigen::VectorXd> true_spot;    ///< fine-grid variance, if recorded
};

struct SimOptions {
  bool record_spot = false;
};

/// Full-truncation Euler for the variance on the refined grid
/// (step delta / substeps). Returns the raw scheme values, which may dip
/// below zero; drift and diffusion use the positive part.
Eigen::VectorXd simulate_cir(const SimScenario& scenario);

/// Daily trapezoid integrals of max(c, 0) over a fine variance path.
std::vector<double> daily_integrals(const Eigen::VectorXd& fine_c, double fine_dt,
                                    Eigen::Index fine_steps_per_day);

/// Simulates the stochastic-volatility model on the observation grid
/// together with the true daily integrated variance.
SimOutput simulate_sv_path(const SimScenario& scenario, const SimOptions& opts = {});

/// X = sigma W + gamma Y with Y symmetric stable in CF standardization;
/// n increments at spacing delta. true_iv holds sigma^2 times the covered
/// length of each (possibly partial) day.
SimOutput simulate_levy_const(double sigma, double gamma, double beta, double delta, Eigen::Index n,
                              std::uint64_t seed);

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace charvol
