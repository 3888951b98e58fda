#include "charvol/core.hpp"

#include <cmath>
#include <utility>

namespace charvol {

SampledPath::SampledPath(Eigen::VectorXd values, double delta, double t0)
    : values_(std::move(values)), delta_(delta), t0_(t0) {
  if (values_.size() < 2) {
    throw InvalidInput("SampledPath: need at least 2 observations, got " +
                       std::to_string(values_.size()));
  }
  if (!(delta_ > 0.0) || !std::isfinite(delta_)) {
    throw InvalidInput("SampledPath: delta must be positive and finite");
  }
  if (!values_.allFinite()) {
    throw InvalidInput("SampledPath: all values must be finite");
  }
}

SampledPath SampledPath::slice(Eigen::Index first_increment, Eigen::Index count) const {
  if (first_increment < 0 || count < 1 || first_increment + count > n_increments()) {
    throw std::out_of_range("SampledPath::slice: range outside path");
  }
  return SampledPath(values_.segment(first_increment, count + 1), delta_,
                     t0_ + static_cast<double>(first_increment) * delta_);
}

void EstimatorConfig::validate() const {
  if (k_n < 2) throw InvalidInput("EstimatorConfig: k_n must be >= 2");
  if (!(u > 0.0) || !std::isfinite(u)) throw InvalidInput("EstimatorConfig: u must be > 0");
  if (!(zeta > 1.0) || !std::isfinite(zeta)) throw InvalidInput("EstimatorConfig: zeta must be > 1");
  if (kappa != 1 && kappa != 2) throw InvalidInput("EstimatorConfig: kappa must be 1 or 2");
}

Eigen::VectorXd increments(const SampledPath& path) {
  const auto& x = path.values();
  const Eigen::Index n = path.n_increments();
  return x.tail(n) - x.head(n);
}

std::vector<BlockIndex> block_partition(Eigen::Index n_increments, int k_n, int kappa,
                                        Eigen::Index horizon_increments) {
  if (k_n < 2) throw InvalidInput("block_partition: k_n must be >= 2");
  if (kappa != 1 && kappa != 2) throw InvalidInput("block_partition: kappa must be 1 or 2");
  if (horizon_increments < 0 || horizon_increments > n_increments) {
    throw InvalidInput("block_partition: horizon exceeds available increments");
  }
  const Eigen::Index width = static_cast<Eigen::Index>(kappa) * k_n;
  const Eigen::Index n_blocks = horizon_increments / width;
  std::vector<BlockIndex> blocks;
  blocks.reserve(static_cast<std::size_t>(n_blocks));
  for (Eigen::Index j = 0; j < n_blocks; ++j) {
    blocks.push_back({j, j * width, width});
  }
  return blocks;
}

Eigen::Index horizon_increments(const SampledPath& path, double horizon_t) {
  if (!(horizon_t >= 0.0)) throw InvalidInput("horizon must be nonnegative");
  const double steps = horizon_t / path.delta();
  const auto m = static_cast<Eigen::Index>(std::floor(steps * (1.0 + 1e-12) + 1e-9));
  if (m > path.n_increments()) {
    throw InvalidInput("horizon exceeds path duration");
  }
  return m;
}

std::vector<SampledPath> split_days(const SampledPath& path, Eigen::Index steps_per_day) {
  if (steps_per_day < 1) throw InvalidInput("split_days: steps_per_day must be >= 1");
  const Eigen::Index days = path.n_increments() / steps_per_day;
  std::vector<SampledPath> out;
  out.reserve(static_cast<std::size_t>(days));
  for (Eigen::Index d = 0; d < days; ++d) {
    out.push_back(path.slice(d * steps_per_day, steps_per_day));
  }
  return out;
}

Eigen::Index steps_per_day(double delta) {
  if (!(delta > 0.0)) throw InvalidInput("steps_per_day: delta must be positive");
  const double n = 1.0 / delta;
  const double r = std::round(n);
  if (r < 1.0 || std::abs(n - r) > 1e-6 * r) {
    throw InvalidInput("delta does not divide a day evenly");
  }
  return static_cast<Eigen::Index>(r);
}

}  // namespace charvol
