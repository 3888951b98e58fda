#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace charvol {

/// Gauss-Legendre rule on [-1, 1] (Golub-Welsch).
struct GaussLegendre {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  explicit GaussLegendre(int n);

  /// Integral of f over [a, b] split into `panels` equal panels.
  template <typename F>
  double integrate(F&& f, double a, double b, int panels = 1) const {
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double lo = a + p * h;
      const double mid = lo + 0.5 * h;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < nodes.size(); ++i) {
        acc += weights[i] * f(mid + 0.5 * h * nodes[i]);
      }
      total += 0.5 * h * acc;
    }
    return total;
  }
};

/// Controls for the oscillatory quadrature behind chi and chi_prime.
///
/// The integral over [1, inf) is split at the zeros of the trigonometric
/// factor; each half-period is integrated with `nodes`-point Gauss-Legendre
/// on `panels` equal panels. The alternating half-period series is summed
/// with `half_periods` explicit terms followed by repeated averaging of the
/// partial sums (Euler transform) until two successive levels agree to
/// `tail_tol`.
struct QuadratureOptions {
  int nodes = 24;
  int panels = 1;
  int half_periods = 64;
  double tail_tol = 1e-12;
};

/// int_0^inf sin(y) / y^beta dy for beta in (0, 2).
double chi(double beta, const QuadratureOptions& opts = {});

/// int_0^inf (1 - cos(y)) / y^beta dy for beta in (1, 3).
double chi_prime(double beta, const QuadratureOptions& opts = {});

/// Constant-coefficient jump scales for the positive- and negative-jump
/// stable-like drivers, in tail standardization (tail mass x^-beta near 0).
struct StableTailParams {
  double beta = 1.5;
  double gamma_plus = 0.0;
  double gamma_minus = 0.0;
};

struct BiasValue {
  double A = 0.0;        ///< symmetrized-estimator bias
  double A_prime = 0.0;  ///< nonsymmetrized-estimator bias
};

/// Coefficients a and a' for constant jump scales.
struct BiasCoefficients {
  double a = 0.0;
  double a_prime = 0.0;
};

BiasCoefficients bias_coefficients(const StableTailParams& params);

/// First-order jump biases of the symmetrized and nonsymmetrized CF
/// estimators of the integrated variance over [0, t], constant coefficients.
/// Throws InvalidInput when the cosine argument reaches pi/2.
BiasValue bias_functionals(const StableTailParams& params, double u, double delta, double t);

/// Scale s such that a symmetric stable variable with characteristic function
/// exp(-|u|^beta) has the law of s (Y+ - Y-), with Y+- independent one-sided
/// tail-standardized drivers. Obtained from the log-CF slope of the
/// tail-standardized pair, 2 beta chi'(beta + 1).
double cf_to_tail_scale(double beta);

/// Bias functionals for X = sigma W + gamma Y with Y symmetric stable in CF
/// standardization (characteristic function exp(-t |u|^beta)).
BiasValue bias_functionals_cf(double gamma, double beta, double u, double delta, double t);

/// Log-CF slope of the tail-standardized symmetric pair Y+ - Y-:
/// -log E cos(u (Y+_1 - Y-_1)) = slope * |u|^beta.
double tail_pair_cf_slope(double beta);

struct RateReport {
  double k_sqrt_delta = 0.0;         ///< should vanish asymptotically
  double k_delta_045 = 0.0;          ///< should diverge asymptotically
  double k_sqrt_delta_over_u4 = 0.0; ///< should stay bounded
  std::vector<std::string> warnings;
};

/// Advisory check of block size and CF argument against the asymptotic rate
/// conditions. Never throws; problems are reported as warnings.
RateReport rate_diagnostics(int k_n, double u, double delta);

}  // namespace charvol
