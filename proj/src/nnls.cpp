#include "flowbound/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flowbound {

namespace {

// Least squares restricted to the passive columns, via normal equations and
// Gaussian elimination with partial pivoting.  Passive sets stay tiny here
// (polynomials of total degree <= 2), so this is accurate enough.
std::vector<double> solve_passive(const std::vector<double>& a, int rows, int cols,
                                  const std::vector<double>& b, const std::vector<int>& passive) {
  const int k = static_cast<int>(passive.size());
  std::vector<double> g(static_cast<std::size_t>(k) * k, 0.0), rhs(k, 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < k; ++i) {
      const double ari = a[static_cast<std::size_t>(r) * cols + passive[i]];
      rhs[i] += ari * b[r];
      for (int j = i; j < k; ++j)
        g[static_cast<std::size_t>(i) * k + j] += ari * a[static_cast<std::size_t>(r) * cols + passive[j]];
    }
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < i; ++j) g[static_cast<std::size_t>(i) * k + j] = g[static_cast<std::size_t>(j) * k + i];

  for (int col = 0; col < k; ++col) {
    int piv = col;
    for (int r = col + 1; r < k; ++r)
      if (std::fabs(g[static_cast<std::size_t>(r) * k + col]) >
          std::fabs(g[static_cast<std::size_t>(piv) * k + col]))
        piv = r;
    if (piv != col) {
      for (int c = 0; c < k; ++c)
        std::swap(g[static_cast<std::size_t>(col) * k + c], g[static_cast<std::size_t>(piv) * k + c]);
      std::swap(rhs[col], rhs[piv]);
    }
    const double d = g[static_cast<std::size_t>(col) * k + col];
    if (d == 0.0) throw std::runtime_error("nnls: singular passive-set system");
    for (int r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = g[static_cast<std::size_t>(r) * k + col] / d;
      if (f == 0.0) continue;
      for (int c = col; c < k; ++c)
        g[static_cast<std::size_t>(r) * k + c] -= f * g[static_cast<std::size_t>(col) * k + c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> z(k);
  for (int i = 0; i < k; ++i) z[i] = rhs[i] / g[static_cast<std::size_t>(i) * k + i];
  return z;
}

}  // namespace

std::vector<double> nnls(const std::vector<double>& a, int rows, int cols,
                         const std::vector<double>& b, double tol) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("nnls: empty system");
  if (a.size() != static_cast<std::size_t>(rows) * cols || b.size() != static_cast<std::size_t>(rows))
    throw std::invalid_argument("nnls: dimension mismatch");

  if (tol < 0.0) {
    double amax = 0.0;
    for (double v : a) amax = std::max(amax, std::fabs(v));
    double bmax = 0.0;
    for (double v : b) bmax = std::max(bmax, std::fabs(v));
    tol = 100.0 * std::numeric_limits<double>::epsilon() * amax * std::max(bmax, 1.0) * rows;
  }

  std::vector<double> x(cols, 0.0);
  std::vector<char> in_passive(cols, 0);
  std::vector<int> passive;

  for (int iter = 0; iter < 10 * cols + 30; ++iter) {
    // Dual w = A^T (b - A x); pick the most violated inactive coordinate.
    std::vector<double> resid(b);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) resid[r] -= a[static_cast<std::size_t>(r) * cols + c] * x[c];
    int best = -1;
    double best_w = tol;
    for (int c = 0; c < cols; ++c) {
      if (in_passive[c]) continue;
      double w = 0.0;
      for (int r = 0; r < rows; ++r) w += a[static_cast<std::size_t>(r) * cols + c] * resid[r];
      if (w > best_w) {
        best_w = w;
        best = c;
      }
    }
    if (best < 0) break;  // KKT satisfied
    in_passive[best] = 1;
    passive.push_back(best);

    while (true) {
      std::vector<double> z = solve_passive(a, rows, cols, b, passive);
      bool feasible = true;
      for (double v : z) feasible = feasible && (v > 0.0);
      if (feasible) {
        for (double& v : x) v = 0.0;
        for (std::size_t i = 0; i < passive.size(); ++i) x[passive[i]] = z[i];
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < passive.size(); ++i) {
        if (z[i] > 0.0) continue;
        const double xi = x[passive[i]];
        alpha = std::min(alpha, xi / (xi - z[i]));
      }
      double scale = 1.0;
      for (int c : passive) scale = std::max(scale, std::fabs(x[c]));
      for (std::size_t i = 0; i < passive.size(); ++i)
        x[passive[i]] += alpha * (z[i] - x[passive[i]]);
      // Coordinates driven to the boundary leave the passive set.
      std::vector<int> keep;
      for (int c : passive) {
        if (x[c] > 1e-12 * scale) {
          keep.push_back(c);
        } else {
          x[c] = 0.0;
          in_passive[c] = 0;
        }
      }
      passive = std::move(keep);
      if (passive.empty()) break;
    }
  }
  return x;
}

}  // namespace flowbound
