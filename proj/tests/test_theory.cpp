#include "charvol/core.hpp"
#include "charvol/theory.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>

using namespace charvol;

namespace {

// Closed forms via the Gamma function.
double chi_closed(double beta) { return std::tgamma(1.0 - beta) * std::cos(std::numbers::pi * beta / 2.0); }

double chi_prime_closed(double beta) {
  if (beta == 2.0) return std::numbers::pi / 2.0;
  return std::tgamma(2.0 - beta) * std::sin(std::numbers::pi * beta / 2.0) / (beta - 1.0);
}

}  // namespace

TEST_CASE("chi constants at known points") {
  CHECK(chi(1.0) == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-10));
  CHECK(chi_prime(2.0) == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-10));
  CHECK(chi(1.5) == doctest::Approx(2.5066282746310002).epsilon(1e-9));
  CHECK(chi(1.25) == doctest::Approx(1.8757866791075366).epsilon(1e-9));
  CHECK(chi(1.75) == doctest::Approx(4.466169049435128).epsilon(1e-9));
  CHECK(chi(1.9) == doctest::Approx(10.440422924596875).epsilon(1e-9));
  CHECK(chi_prime(1.5) == doctest::Approx(2.5066282746310002).epsilon(1e-9));
  CHECK(chi_prime(1.75) == doctest::Approx(1.849947792126984).epsilon(1e-9));
  CHECK(chi_prime(1.9) == doctest::Approx(1.6536005416637344).epsilon(1e-9));
  CHECK(chi_prime(2.5) == doctest::Approx(1.671085516420667).epsilon(1e-9));
}

TEST_CASE("chi matches Gamma closed forms across the domain") {
  for (int i = 2; i < 40; ++i) {
    const double beta = 0.05 * i;
    if (i == 20) continue;
    CAPTURE(beta);
    CHECK(chi(beta) == doctest::Approx(chi_closed(beta)).epsilon(1e-8));
  }
  for (int i = 1; i < 40; ++i) {
    const double beta = 1.0 + 0.05 * i;
    if (i == 20) continue;  // removable singularity of the closed form
    CAPTURE(beta);
    CHECK(chi_prime(beta) == doctest::Approx(chi_prime_closed(beta)).epsilon(1e-8));
  }
}

TEST_CASE("chi is stable under quadrature refinement") {
  QuadratureOptions fine;
  fine.panels = 2;
  fine.nodes = 32;
  fine.half_periods = 128;
  for (double beta : {0.3, 1.25, 1.5, 1.75, 1.9}) {
    CAPTURE(beta);
    CHECK(chi(beta, fine) == doctest::Approx(chi(beta)).epsilon(1e-10));
  }
  for (double beta : {1.2, 1.75, 2.5, 2.9}) {
    CAPTURE(beta);
    CHECK(chi_prime(beta, fine) == doctest::Approx(chi_prime(beta)).epsilon(1e-10));
  }
}

TEST_CASE("chi and chi_prime are linked by integration by parts") {
  for (double beta : {1.1, 1.5, 1.9}) {
    CAPTURE(beta);
    CHECK(std::abs(chi(beta)) == doctest::Approx(beta * chi_prime(beta + 1.0)).epsilon(1e-9));
  }
}

TEST_CASE("chi domain errors") {
  CHECK_THROWS_AS(chi(0.0), InvalidInput);
  CHECK_THROWS_AS(chi(2.0), InvalidInput);
  CHECK_THROWS_AS(chi_prime(1.0), InvalidInput);
  CHECK_THROWS_AS(chi_prime(3.0), InvalidInput);
  CHECK_THROWS_AS(chi(std::nan("")), InvalidInput);
}

TEST_CASE("GaussLegendre integrates polynomials exactly") {
  GaussLegendre g(5);
  CHECK(g.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(g.integrate([](double x) { return std::pow(x, 9) + x * x; }, 0.0, 2.0) ==
        doctest::Approx(1024.0 / 10.0 + 8.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("bias functionals vanish without jumps") {
  StableTailParams p{1.5, 0.0, 0.0};
  const auto b = bias_functionals(p, 1.0, 1.0 / 2400.0, 1.0);
  CHECK(b.A == 0.0);
  CHECK(b.A_prime == 0.0);
  CHECK(bias_functionals_cf(0.0, 1.5, 1.0, 1.0 / 2400.0, 1.0).A == 0.0);
}

TEST_CASE("symmetric jumps give equal biases") {
  // Negative jumps carry a negative scale.
  StableTailParams p{1.6, 0.7, -0.7};
  const auto b = bias_functionals(p, 0.8, 1.0 / 4800.0, 1.0);
  CHECK(b.A > 0.0);
  CHECK(b.A_prime == doctest::Approx(b.A).epsilon(1e-12));
  const auto c = bias_coefficients(p);
  CHECK(c.a_prime == 0.0);
}

TEST_CASE("asymmetric jumps make the nonsymmetrized bias differ") {
  StableTailParams p{1.6, 1.0, 0.2};
  const auto b = bias_functionals(p, 0.8, 1.0 / 4800.0, 1.0);
  CHECK(b.A > 0.0);
  CHECK(b.A_prime != doctest::Approx(b.A));
}

TEST_CASE("bias scaling laws (property)") {
  const double delta = 1.0 / 2400.0;
  for (double beta : {1.2, 1.5, 1.8}) {
    for (double u : {0.3, 0.7, 1.0}) {
      StableTailParams p{beta, 0.3, 0.2};
      CAPTURE(beta);
      CAPTURE(u);
      const double zeta = 1.5;
      const auto base = bias_functionals(p, u, delta, 1.0);
      const auto scaled = bias_functionals(p, zeta * u, delta, 1.0);
      CHECK(scaled.A == doctest::Approx(std::pow(zeta, beta - 2.0) * base.A).epsilon(1e-12));
      // Linear in t.
      CHECK(bias_functionals(p, u, delta, 2.5).A == doctest::Approx(2.5 * base.A).epsilon(1e-12));
      // Homogeneous of degree beta in the jump scales (symmetric part).
      StableTailParams p2{beta, 2.0 * 0.3, 2.0 * 0.2};
      CHECK(bias_functionals(p2, u, delta, 1.0).A ==
            doctest::Approx(std::pow(2.0, beta) * base.A).epsilon(1e-12));
      // Larger u, smaller bias.
      CHECK(scaled.A < base.A);
    }
  }
}

TEST_CASE("bias formula validity guard") {
  StableTailParams p{1.9, 1.0, 0.0};
  CHECK_THROWS_AS(bias_functionals(p, 1.0, 0.5, 1.0), InvalidInput);
  CHECK_THROWS_AS(bias_functionals({2.0, 1.0, 1.0}, 1.0, 0.01, 1.0), InvalidInput);
}

TEST_CASE("CF and tail standardizations agree") {
  for (double beta : {1.25, 1.5, 1.75}) {
    CAPTURE(beta);
    const double gamma = 0.5;
    const double delta = 1.0 / 4800.0;
    const double u = 1.0;
    const auto b = bias_functionals_cf(gamma, beta, u, delta, 1.0);
    const double expected = 2.0 * std::pow(u, beta - 2.0) * std::pow(delta, 1.0 - beta / 2.0) *
                            std::pow(gamma, beta);
    CHECK(b.A == doctest::Approx(expected).epsilon(1e-9));
    CHECK(b.A_prime == doctest::Approx(b.A).epsilon(1e-12));
    const double s = cf_to_tail_scale(beta);
    CHECK(tail_pair_cf_slope(beta) * std::pow(s, beta) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("rate diagnostics") {
  const auto r = rate_diagnostics(240, 1.0, 1.0 / 2400.0);
  CHECK(r.k_sqrt_delta == doctest::Approx(4.898979485566356).epsilon(1e-13));
  CHECK(r.k_delta_045 == doctest::Approx(240.0 * std::pow(2400.0, -0.45)).epsilon(1e-13));
  CHECK(r.k_sqrt_delta_over_u4 == doctest::Approx(r.k_sqrt_delta));

  CHECK(rate_diagnostics(320, 1.0, 1.0 / 4800.0).k_sqrt_delta ==
        doctest::Approx(4.618802153517006).epsilon(1e-13));

  const auto tiny = rate_diagnostics(240, 0.1, 1.0 / 2400.0);
  CHECK_FALSE(tiny.warnings.empty());

  const auto zero = rate_diagnostics(240, 0.0, 1.0 / 2400.0);
  CHECK(std::isnan(zero.k_sqrt_delta_over_u4));
  bool found = false;
  for (const auto& w : zero.warnings) found |= w.find("division by zero") != std::string::npos;
  CHECK(found);
}
