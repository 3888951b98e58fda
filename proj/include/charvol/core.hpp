#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace charvol {

/// Raised for malformed inputs: bad paths, bad configs, out-of-domain values.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Log-price observations X_0, X_Δ, X_2Δ, ... on a uniform grid.
///
/// Time is measured in days. The grid spacing is stored explicitly and never
/// inferred from timestamps here; `ingest_csv` does the inference for files.
class SampledPath {
 public:
  SampledPath(Eigen::VectorXd values, double delta, double t0 = 0.0);

  const Eigen::VectorXd& values() const { return values_; }
  double delta() const { return delta_; }
  double t0() const { return t0_; }

  Eigen::Index n_increments() const { return values_.size() - 1; }
  double duration() const { return static_cast<double>(n_increments()) * delta_; }

  /// Sub-path covering increments [first, first + count).
  SampledPath slice(Eigen::Index first_increment, Eigen::Index count) const;

 private:
  Eigen::VectorXd values_;
  double delta_;
  double t0_;
};

/// Tuning for one characteristic-function estimation run.
struct EstimatorConfig {
  int k_n = 240;      ///< block size in increments
  double u = 1.0;     ///< characteristic-function argument
  double zeta = 1.5;  ///< debias ratio
  int kappa = 1;      ///< 1 = nonsymmetrized, 2 = symmetrized

  void validate() const;
};

/// One estimation block. Blocks are disjoint and ordered.
struct BlockIndex {
  Eigen::Index j = 0;
  Eigen::Index first_increment = 0;
  Eigen::Index count = 0;  ///< k_n for kappa = 1, 2 k_n for kappa = 2

  friend bool operator==(const BlockIndex&, const BlockIndex&) = default;
};

/// Δ_i X = X_i - X_{i-1}, i = 1..n.
Eigen::VectorXd increments(const SampledPath& path);

/// Disjoint blocks of kappa * k_n increments covering [0, horizon).
/// Trailing increments that do not fill a whole block are dropped.
std::vector<BlockIndex> block_partition(Eigen::Index n_increments, int k_n, int kappa,
                                        Eigen::Index horizon_increments);

/// Number of whole increments inside an elapsed time `horizon_t` from the path
/// start, i.e. [t / Δ]. Tolerates floating-point noise of a few ulps so that
/// horizon_t = m * Δ maps to m.
Eigen::Index horizon_increments(const SampledPath& path, double horizon_t);

/// Splits a multi-day path into consecutive day paths of `steps_per_day`
/// increments each. Adjacent days share their boundary observation.
std::vector<SampledPath> split_days(const SampledPath& path, Eigen::Index steps_per_day);

/// Observations per unit time, 1/Δ, when that is an integer (within 1e-6).
Eigen::Index steps_per_day(double delta);

}  // namespace charvol
