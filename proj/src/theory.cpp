#include "charvol/theory.hpp"

#include "charvol/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace charvol {

GaussLegendre::GaussLegendre(int n) {
  if (n < 1) throw InvalidInput("GaussLegendre: need at least one node");
  // Jacobi matrix of the Legendre recurrence; eigenvalues are the nodes and
  // the squared first eigenvector components (times 2) the weights.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes = es.eigenvalues();
  weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
}

namespace {

constexpr double kPi = std::numbers::pi;

void check_options(const QuadratureOptions& opts) {
  if (opts.nodes < 2 || opts.panels < 1 || opts.half_periods < 8 || !(opts.tail_tol > 0.0)) {
    throw InvalidInput("QuadratureOptions: invalid settings");
  }
}

// int_start^inf trig(y) y^-beta dy where `start` is a zero of trig and trig
// alternates sign on consecutive half-periods [start + k pi, start + (k+1) pi].
template <typename Trig>
double alternating_tail(Trig trig, double start, double beta, const QuadratureOptions& opts) {
  const GaussLegendre rule(opts.nodes);
  auto f = [&](double y) { return trig(y) * std::pow(y, -beta); };

  std::vector<double> partial;
  partial.reserve(static_cast<std::size_t>(opts.half_periods));
  double sum = 0.0;
  for (int k = 0; k < opts.half_periods; ++k) {
    const double lo = start + k * kPi;
    sum += rule.integrate(f, lo, lo + kPi, opts.panels);
    partial.push_back(sum);
  }

  // Euler transform by repeated averaging of the trailing partial sums.
  const std::size_t window = std::min<std::size_t>(partial.size(), 40);
  std::vector<double> level(partial.end() - static_cast<std::ptrdiff_t>(window), partial.end());
  double prev = level.back();
  while (level.size() > 1) {
    for (std::size_t i = 0; i + 1 < level.size(); ++i) level[i] = 0.5 * (level[i] + level[i + 1]);
    level.pop_back();
    const double cur = level.back();
    if (level.size() < window / 2 && std::abs(cur - prev) < opts.tail_tol) return cur;
    prev = cur;
  }
  return level.front();
}

// int_0^1 sin(y) / y^beta dy by term-wise integration of the sine series.
double sin_head(double beta) {
  double total = 0.0;
  double fact = 1.0;  // (2k+1)!
  for (int k = 0; k < 30; ++k) {
    if (k > 0) fact *= (2.0 * k) * (2.0 * k + 1.0);
    const double term = 1.0 / (fact * (2.0 * k + 2.0 - beta));
    total += (k % 2 == 0) ? term : -term;
    if (term < 1e-20) break;
  }
  return total;
}

// int_0^1 (1 - cos(y)) / y^beta dy by term-wise integration.
double one_minus_cos_head(double beta) {
  double total = 0.0;
  double fact = 1.0;  // (2k)!
  for (int k = 1; k < 30; ++k) {
    fact *= (2.0 * k - 1.0) * (2.0 * k);
    const double term = 1.0 / (fact * (2.0 * k + 1.0 - beta));
    total += (k % 2 == 1) ? term : -term;
    if (term < 1e-20) break;
  }
  return total;
}

double signed_power(double x, double beta) {
  return std::copysign(std::pow(std::abs(x), beta), x);
}

}  // namespace

double chi(double beta, const QuadratureOptions& opts) {
  if (!(beta > 0.0 && beta < 2.0)) throw InvalidInput("chi: beta must lie in (0, 2)");
  check_options(opts);
  const GaussLegendre rule(opts.nodes);
  auto f = [beta](double y) { return std::sin(y) * std::pow(y, -beta); };
  const double mid = rule.integrate(f, 1.0, kPi, opts.panels);
  const double tail = alternating_tail([](double y) { return std::sin(y); }, kPi, beta, opts);
  return sin_head(beta) + mid + tail;
}

double chi_prime(double beta, const QuadratureOptions& opts) {
  if (!(beta > 1.0 && beta < 3.0)) throw InvalidInput("chi_prime: beta must lie in (1, 3)");
  check_options(opts);
  const GaussLegendre rule(opts.nodes);
  auto f = [beta](double y) { return std::cos(y) * std::pow(y, -beta); };
  // int_1^inf (1 - cos y) y^-beta = 1/(beta - 1) - int_1^inf cos(y) y^-beta.
  const double cos_mid = rule.integrate(f, 1.0, 0.5 * kPi, opts.panels);
  const double cos_tail =
      alternating_tail([](double y) { return std::cos(y); }, 0.5 * kPi, beta, opts);
  return one_minus_cos_head(beta) + 1.0 / (beta - 1.0) - cos_mid - cos_tail;
}

BiasCoefficients bias_coefficients(const StableTailParams& p) {
  if (!(p.beta > 1.0 && p.beta < 2.0)) throw InvalidInput("bias: beta must lie in (1, 2)");
  BiasCoefficients c;
  const double abs_sum = std::pow(std::abs(p.gamma_plus), p.beta) +
                         std::pow(std::abs(p.gamma_minus), p.beta);
  const double signed_sum = signed_power(p.gamma_plus, p.beta) + signed_power(p.gamma_minus, p.beta);
  if (abs_sum != 0.0) c.a = chi(p.beta) * abs_sum;
  if (signed_sum != 0.0) c.a_prime = chi_prime(p.beta) * signed_sum;
  return c;
}

BiasValue bias_functionals(const StableTailParams& params, double u, double delta, double t) {
  if (!(u > 0.0)) throw InvalidInput("bias: u must be positive");
  if (!(delta > 0.0)) throw InvalidInput("bias: delta must be positive");
  if (!(t >= 0.0)) throw InvalidInput("bias: t must be nonnegative");
  const auto c = bias_coefficients(params);
  const double beta = params.beta;
  const double scale = std::pow(delta, 1.0 - beta / 2.0);
  const double cos_arg = scale * std::pow(u, beta) * c.a_prime;
  if (!(std::abs(cos_arg) < 0.5 * kPi)) {
    throw InvalidInput("bias formula outside validity: cosine argument reaches pi/2");
  }
  BiasValue out;
  out.A = 2.0 * std::pow(u, beta - 2.0) * scale * c.a * t;
  out.A_prime =
      2.0 / (u * u) * (scale * std::pow(u, beta) * c.a - std::log(std::cos(cos_arg))) * t;
  return out;
}

double tail_pair_cf_slope(double beta) {
  if (!(beta > 0.0 && beta < 2.0)) throw InvalidInput("tail_pair_cf_slope: beta must lie in (0, 2)");
  // Each one-sided driver has Levy density beta x^{-beta-1}, whose real log-CF
  // part is beta |u|^beta int (1 - cos y) y^{-beta-1} dy.
  return 2.0 * beta * chi_prime(beta + 1.0);
}

double cf_to_tail_scale(double beta) {
  return std::pow(tail_pair_cf_slope(beta), -1.0 / beta);
}

BiasValue bias_functionals_cf(double gamma, double beta, double u, double delta, double t) {
  const double g = gamma * cf_to_tail_scale(beta);
  return bias_functionals({beta, g, -g}, u, delta, t);
}

RateReport rate_diagnostics(int k_n, double u, double delta) {
  RateReport r;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (!(delta > 0.0)) {
    r.k_sqrt_delta = r.k_delta_045 = r.k_sqrt_delta_over_u4 = nan;
    r.warnings.emplace_back("delta must be positive");
    return r;
  }
  r.k_sqrt_delta = k_n * std::sqrt(delta);
  r.k_delta_045 = k_n * std::pow(delta, 0.45);
  if (u > 0.0) {
    r.k_sqrt_delta_over_u4 = r.k_sqrt_delta / std::pow(u, 4);
  } else {
    r.k_sqrt_delta_over_u4 = nan;
    r.warnings.emplace_back("division by zero: u must be positive for k_n*sqrt(delta)/u^4");
  }
  if (k_n < 2) r.warnings.emplace_back("k_n below 2");

  std::ostringstream os;
  if (r.k_sqrt_delta > 10.0 || r.k_sqrt_delta < 0.01) {
    os << "k_n*sqrt(delta) = " << r.k_sqrt_delta << " outside heuristic range [0.01, 10]";
    r.warnings.push_back(os.str());
  } else if (r.k_sqrt_delta >= 1.0) {
    os << "k_n*sqrt(delta) = " << r.k_sqrt_delta
       << " >= 1: finite-sample regime, asymptotic condition k_n*sqrt(delta) -> 0 not yet visible";
    r.warnings.push_back(os.str());
  }
  if (r.k_delta_045 < 1.0) {
    r.warnings.emplace_back("k_n*delta^0.45 < 1: blocks may be too short");
  }
  if (u > 0.0 && r.k_sqrt_delta_over_u4 > 100.0) {
    r.warnings.emplace_back("k_n*sqrt(delta)/u^4 > 100: u too small for block size");
  }
  return r;
}

}  // namespace charvol
