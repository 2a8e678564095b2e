#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "flowbound/nnls.hpp"

namespace fb = flowbound;

namespace {

std::vector<double> residual(const std::vector<double>& a, int rows, int cols,
                             const std::vector<double>& x, const std::vector<double>& b) {
  std::vector<double> r(b);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) r[i] -= a[i * cols + j] * x[j];
  return r;
}

// Gradient of the squared residual, g = A^T (A x - b).
std::vector<double> gradient(const std::vector<double>& a, int rows, int cols,
                             const std::vector<double>& x, const std::vector<double>& b) {
  const std::vector<double> r = residual(a, rows, cols, x, b);
  std::vector<double> g(cols, 0.0);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g[j] -= a[i * cols + j] * r[i];
  return g;
}

}  // namespace

TEST_CASE("square system with a nonnegative exact solution is recovered") {
  const std::vector<double> a{2, 1, 0, 1, 3, 1, 0, 1, 2};
  const std::vector<double> xt{1.0, 0.5, 2.0};
  std::vector<double> b(3, 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b[i] += a[i * 3 + j] * xt[j];
  const auto x = fb::nnls(a, 3, 3, b);
  REQUIRE(x.size() == 3);
  for (int j = 0; j < 3; ++j) CHECK(x[j] == doctest::Approx(xt[j]).epsilon(1e-12));
}

TEST_CASE("all pull toward negative values clamps to zero") {
  // Positive columns against a negative target: the origin is optimal.
  const std::vector<double> a{1, 2, 3, 1, 2, 4};
  const std::vector<double> b{-1, -2, -3};
  const auto x = fb::nnls(a, 3, 2, b);
  REQUIRE(x.size() == 2);
  CHECK(x[0] == 0.0);
  CHECK(x[1] == 0.0);
}

TEST_CASE("active constraint shows up as a bound coordinate") {
  // Unconstrained solution of this 3x2 system has a negative first entry,
  // so the NNLS answer lives on the x0 = 0 face.
  const std::vector<double> a{1, 1, 1, 2, 1, 3};
  const std::vector<double> b{0.9, 2.1, 3.2};
  const auto x = fb::nnls(a, 3, 2, b);
  CHECK(x[0] == 0.0);
  CHECK(x[1] > 0.0);
  // On that face the problem is 1D least squares in the second column.
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 3; ++i) {
    num += a[i * 2 + 1] * b[i];
    den += a[i * 2 + 1] * a[i * 2 + 1];
  }
  CHECK(x[1] == doctest::Approx(num / den).epsilon(1e-12));
}

TEST_CASE("random overdetermined problems satisfy the KKT conditions") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 12, cols = 5;
    std::vector<double> a(rows * cols);
    for (auto& v : a) v = gauss(rng);
    std::vector<double> b(rows);
    for (auto& v : b) v = gauss(rng);

    const auto x = fb::nnls(a, rows, cols, b);
    REQUIRE(static_cast<int>(x.size()) == cols);
    const auto g = gradient(a, rows, cols, x, b);
    double scale = 0.0;
    for (double v : g) scale = std::max(scale, std::fabs(v));
    for (double v : b) scale = std::max(scale, std::fabs(v));
    const double tol = 1e-9 * std::max(1.0, scale);
    for (int j = 0; j < cols; ++j) {
      CHECK(x[j] >= 0.0);
      if (x[j] > 0.0) {
        // Interior coordinate: stationarity.
        CHECK(std::fabs(g[j]) <= tol);
      } else {
        // Bound coordinate: no descent direction into the feasible set.
        CHECK(g[j] >= -tol);
      }
    }
  }
}

TEST_CASE("interior solutions match the normal equations") {
  // Well-separated positive data keeps every coordinate interior, where
  // NNLS must coincide with plain least squares.  2x2 normal equations
  // solved by hand.
  const std::vector<double> a{1, 0.1, 1, 0.5, 1, 0.9, 1, 1.3};
  const std::vector<double> b{1.05, 1.52, 1.93, 2.31};
  const auto x = fb::nnls(a, 4, 2, b);
  REQUIRE(x.size() == 2);
  CHECK(x[0] > 0.0);
  CHECK(x[1] > 0.0);
  double s00 = 0, s01 = 0, s11 = 0, t0 = 0, t1 = 0;
  for (int i = 0; i < 4; ++i) {
    s00 += a[i * 2] * a[i * 2];
    s01 += a[i * 2] * a[i * 2 + 1];
    s11 += a[i * 2 + 1] * a[i * 2 + 1];
    t0 += a[i * 2] * b[i];
    t1 += a[i * 2 + 1] * b[i];
  }
  const double det = s00 * s11 - s01 * s01;
  const double x0 = (s11 * t0 - s01 * t1) / det;
  const double x1 = (s00 * t1 - s01 * t0) / det;
  CHECK(x[0] == doctest::Approx(x0).epsilon(1e-11));
  CHECK(x[1] == doctest::Approx(x1).epsilon(1e-11));
}

TEST_CASE("degenerate and malformed inputs") {
  CHECK_THROWS_AS((void)fb::nnls({1.0, 2.0}, 1, 3, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS((void)fb::nnls({1.0}, 1, 1, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS((void)fb::nnls({}, 0, 0, {}), std::invalid_argument);

  // Duplicate columns: any split between them is optimal; the answer must
  // still be feasible and reproduce b in range.
  const std::vector<double> a{1, 1, 2, 2};
  const std::vector<double> b{3, 6};
  const auto x = fb::nnls(a, 2, 2, b);
  CHECK(x[0] >= 0.0);
  CHECK(x[1] >= 0.0);
  CHECK(x[0] + x[1] == doctest::Approx(3.0).epsilon(1e-12));
}
