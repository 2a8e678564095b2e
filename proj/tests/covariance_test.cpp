#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "flowbound/covariance.hpp"
#include "flowbound/quadrature.hpp"

namespace fb = flowbound;

namespace {

constexpr double kPi = std::numbers::pi;

// Radial form of the loop kernel integral with one optional regulated
// factor, used as the oracle for the 4D reduction:
//   int d^4 l |dC/dl|(l) f(|l|) = 2 pi^2 int_0^inf r^3 (2/L^3) e^{-r^2/L^2} f(r) dr.
double radial_kernel_integral(double lambda, double theta, double cut) {
  fb::QuadratureSpec spec;
  spec.rel_tol = 1e-11;
  const auto f = [&](double r) {
    const double w = (2.0 / (lambda * lambda * lambda)) * std::exp(-r * r / (lambda * lambda));
    return 2.0 * kPi * kPi * r * r * r * w * std::pow(std::max(lambda, r), -theta);
  };
  return fb::integrate_or_throw(f, 0.0, cut * lambda, spec).value;
}

}  // namespace

TEST_CASE("covariance values at the pinned points") {
  const fb::FlowingCovariance same(fb::Scales(7.0, 7.0, 1.0));
  CHECK(same.value(fb::Momentum4(0.3, -1.0, 2.0, 0.1)) == 0.0);
  CHECK(same.value_q2(0.0) == 0.0);

  const fb::FlowingCovariance ten(fb::Scales(1.0, 10.0, 1.0));
  CHECK(ten.value_q2(0.0) == doctest::Approx(0.99).epsilon(1e-14));

  // lambda0 = 1e8 is numerically the removed-cutoff limit at |p| = 2.
  const fb::FlowingCovariance wide(fb::Scales(1.0, 1e8, 1.0));
  const double limit = -std::expm1(-4.0) / 4.0;
  CHECK(wide.value(fb::Momentum4(2, 0, 0, 0)) == doctest::Approx(limit).epsilon(1e-12));
  CHECK(limit == doctest::Approx(0.245421).epsilon(1e-5));
}

TEST_CASE("covariance survives extreme scale separation") {
  // Large q^2 over a tiny flow scale used to overflow the cancellation-free
  // form; both exponentials are then far apart and the naive quotient is the
  // oracle.
  const fb::FlowingCovariance cov(fb::Scales(1e-3, 100.0, 1.0));
  const double q2 = 9e4;
  const double naive = (std::exp(-q2 / 1e4) - std::exp(-q2 / 1e-6)) / q2;
  const double got = cov.value_q2(q2);
  CHECK(std::isfinite(got));
  CHECK(got == doctest::Approx(naive).epsilon(1e-13));

  // Tiny q^2: the quotient must approach 1/lambda^2 - 1/lambda0^2 smoothly.
  const double slope = 1.0 / 1e-6 - 1.0 / 1e4;
  CHECK(cov.value_q2(1e-300) == doctest::Approx(slope).epsilon(1e-12));
  CHECK(cov.value_q2(0.0) == doctest::Approx(slope).epsilon(1e-12));
}

TEST_CASE("covariance rejects bad momentum squares") {
  const fb::FlowingCovariance cov(fb::Scales(1.0, 10.0, 1.0));
  CHECK_THROWS_AS((void)cov.value_q2(-1.0), std::domain_error);
  CHECK_THROWS_AS((void)cov.value_q2(std::nan("")), std::domain_error);
}

TEST_CASE("scale derivative closed form and finite differences") {
  const fb::FlowingCovariance two(fb::Scales(2.0, 50.0, 1.0));
  CHECK(two.lambda_derivative_q2(0.0) == doctest::Approx(-0.25).epsilon(1e-15));

  const fb::FlowingCovariance one(fb::Scales(1.0, 50.0, 1.0));
  CHECK(one.lambda_derivative(fb::Momentum4(1, 0, 0, 0)) ==
        doctest::Approx(-2.0 * std::exp(-1.0)).epsilon(1e-14));

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int it = 0; it < 100; ++it) {
    const double lambda = 0.2 + 3.0 * uni(rng);
    const double lambda0 = lambda * (2.0 + 100.0 * uni(rng));
    const double q2 = std::pow(10.0, -2.0 + 4.0 * uni(rng));
    const double h = 1e-5 * lambda;
    const double up = fb::FlowingCovariance(fb::Scales(lambda + h, lambda0, 1.0)).value_q2(q2);
    const double dn = fb::FlowingCovariance(fb::Scales(lambda - h, lambda0, 1.0)).value_q2(q2);
    const double fd = (up - dn) / (2.0 * h);
    const double exact = fb::FlowingCovariance(fb::Scales(lambda, lambda0, 1.0))
                             .lambda_derivative_q2(q2);
    CHECK(std::fabs(fd - exact) <= 1e-7 * std::max(1e-3, std::fabs(exact)));
  }
}

TEST_CASE("derivative identity and termwise bound hold on random draws") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int it = 0; it < 10000; ++it) {
    const double lambda = std::pow(10.0, -2.0 + 4.0 * uni(rng));
    const double lambda0 = lambda * std::pow(10.0, 4.0 * uni(rng));
    const double q2 = std::pow(10.0, -6.0 + 10.0 * uni(rng));
    const fb::FlowingCovariance cov(fb::Scales(lambda, lambda0, 1.0));
    // lambda^3 |dC| = 2 exp(-q^2/lambda^2) to machine precision.
    const double lhs = lambda * lambda * lambda * std::fabs(cov.lambda_derivative_q2(q2));
    const double rhs = 2.0 * std::exp(-q2 / (lambda * lambda));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
    // C(p) <= |p|_lambda^{-2} termwise.
    const double reg = std::max(lambda, std::sqrt(q2));
    CHECK(cov.value_q2(q2) <= 1.0 / (reg * reg) * (1.0 + 1e-13));
  }
}

TEST_CASE("loop kernel total agrees with the radial oracle") {
  for (double lambda : {0.05, 1.0, 30.0}) {
    const double oracle = radial_kernel_integral(lambda, 0.0, 12.0);
    CHECK(-fb::loop_kernel_total(lambda) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(fb::loop_kernel_total(lambda) ==
          doctest::Approx(-2.0 * kPi * kPi * lambda).epsilon(1e-15));
  }
}

TEST_CASE("regulated loop integral without sources is two pi squared lambda") {
  for (double lambda : {0.3, 1.0, 4.0}) {
    const auto r = fb::regulated_loop_integral({}, fb::Scales(lambda, 10.0 * lambda, 1.0));
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(2.0 * kPi * kPi * lambda).epsilon(1e-6));
  }
}

TEST_CASE("single centered source with weight two hits the split closed form") {
  const auto r = fb::regulated_loop_integral({{fb::Momentum4(), 2.0}}, fb::Scales(1.0, 1e6, 1.0));
  const double expected = 2.0 * kPi * kPi * (1.0 - std::exp(-1.0));
  CHECK(r.value == doctest::Approx(expected).epsilon(1e-6));
  CHECK(expected == doctest::Approx(12.4776).epsilon(1e-4));
  // Same number out of the independent radial quadrature.
  CHECK(radial_kernel_integral(1.0, 2.0, 14.0) == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("distant source keeps the bound constant modest") {
  const double lambda = 1.0;
  const fb::Momentum4 k(10.0, 0.0, 0.0, 0.0);
  const auto r = fb::regulated_loop_integral({{k, 2.0}}, fb::Scales(lambda, 1e5, 1.0));
  const double rhs = lambda * std::pow(std::max(lambda, k.norm()), -2.0);
  CHECK(r.value / rhs > 0.0);
  CHECK(r.value / rhs <= 20.0);
}

TEST_CASE("two source integral is symmetric under relabeling") {
  const fb::Momentum4 k1(0.4, -0.2, 1.0, 0.0), k2(-1.2, 0.5, 0.3, 0.8);
  fb::QuadratureSpec spec;
  spec.rel_tol = 1e-7;
  const auto ab = fb::regulated_loop_integral({{k1, 2.0}, {k2, 1.0}}, fb::Scales(0.7, 1e4, 1.0),
                                              spec);
  const auto ba = fb::regulated_loop_integral({{k2, 1.0}, {k1, 2.0}}, fb::Scales(0.7, 1e4, 1.0),
                                              spec);
  CHECK(ab.value == doctest::Approx(ba.value).epsilon(1e-6));
}

TEST_CASE("two propagator kernel against the proper time oracle") {
  // C(q) = int_{1/L0^2}^{1/L^2} dt e^{-t q^2} turns the kernel into a 1D
  // integral: -(2/L^3) pi^2 int dt (a+t)^{-2} e^{-(a t/(a+t)) k^2}, a = 1/L^2.
  fb::QuadratureSpec spec;
  spec.rel_tol = 1e-10;
  for (double kn : {0.0, 0.8, 3.5}) {
    const double lambda = 0.9, lambda0 = 50.0;
    const double a = 1.0 / (lambda * lambda);
    const auto f = [&](double t) {
      return std::pow(a + t, -2.0) * std::exp(-(a * t / (a + t)) * kn * kn);
    };
    const double oracle = -(2.0 / (lambda * lambda * lambda)) * kPi * kPi *
                          fb::integrate_or_throw(f, 1.0 / (lambda0 * lambda0), a, spec).value;
    const auto got = fb::loop_kernel_with_propagator(kn, fb::Scales(lambda, lambda0, 1.0));
    CHECK(got.value == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(got.value < 0.0);
  }
}

TEST_CASE("loop bound sweep smoke") {
  const std::vector<std::vector<double>> menus{{}, {2.0}};
  const std::vector<fb::Scales> grid{fb::Scales(0.5, 1e3, 1.0), fb::Scales(2.0, 1e3, 1.0)};
  fb::QuadratureSpec loose;
  loose.rel_tol = 1e-5;
  const auto rep = fb::verify_loop_bound(4, menus, grid, 3, loose);
  REQUIRE(rep.menus.size() == 2);
  CHECK(rep.rows.size() == 16);
  // The empty menu has ratio exactly 2 pi^2 for every draw.
  for (const auto& row : rep.rows)
    if (row.thetas.empty()) CHECK(row.ratio == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-4));
  for (const auto& m : rep.menus) {
    CHECK(m.sup_at_half > 0.0);
    CHECK(m.sup_at_full >= m.sup_at_half);
  }
  CHECK_THROWS_AS((void)fb::verify_loop_bound(0, menus, grid, 3), std::invalid_argument);
  CHECK_THROWS_AS((void)fb::verify_loop_bound(4, menus, {}, 3), std::invalid_argument);
}
