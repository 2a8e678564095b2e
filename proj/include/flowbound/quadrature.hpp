#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace flowbound {

struct QuadratureSpec {
  double rel_tol = 1e-9;
  double abs_tol = 0.0;
  int max_intervals = 4000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // absolute error estimate
  long evaluations = 0;
  bool converged = true;
};

// Thrown when an integral cannot reach the requested tolerance; carries the
// best estimate obtained so far.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureResult partial;
  explicit QuadratureError(const QuadratureResult& r)
      : std::runtime_error("quadrature failed to converge (value " + std::to_string(r.value) +
                           ", error estimate " + std::to_string(r.error) + ")"),
        partial(r) {}
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (positive half).
inline constexpr double kGK15Nodes[8] = {
    0.991455371120812639206854697526329,  //
    0.949107912342758524526189684047851,  //
    0.864864423359769072789712788640926,  //
    0.741531185599394439863864773280788,  //
    0.586087235467691130294144838258730,  //
    0.405845151377397166906606412076961,  //
    0.207784955007898467600689403773245,  //
    0.000000000000000000000000000000000};

inline constexpr double kGK15WeightsK[8] = {
    0.022935322010529224963732008058970,  //
    0.063092092629978553290700663189204,  //
    0.104790010322250183839876322541518,  //
    0.140653259715525918745189590510238,  //
    0.169004726639267902826583426598550,  //
    0.190350578064785409913256402421014,  //
    0.204432940075298892414161999234649,  //
    0.209482141084727828012999174891714};

inline constexpr double kGK15WeightsG[4] = {
    0.129484966168869693270611432679082,  //
    0.279705391489276667901467771423780,  //
    0.381830050505118944950369775488975,  //
    0.417959183673469387755102040816327};

template <typename F>
void gk15(const F& f, double a, double b, double& value, double& error) {
  const double h = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double fk[15];
  for (int i = 0; i < 7; ++i) {
    fk[i] = f(mid - h * kGK15Nodes[i]);
    fk[14 - i] = f(mid + h * kGK15Nodes[i]);
  }
  fk[7] = f(mid);
  double k = 0.0;
  for (int i = 0; i < 7; ++i) k += kGK15WeightsK[i] * (fk[i] + fk[14 - i]);
  k += kGK15WeightsK[7] * fk[7];
  // Gauss subset: odd-index nodes.
  double g = kGK15WeightsG[3] * fk[7];
  for (int i = 0; i < 3; ++i) g += kGK15WeightsG[i] * (fk[2 * i + 1] + fk[13 - 2 * i]);
  value = k * h;
  error = std::abs((k - g) * h);
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration on [a, b].  Deterministic:
// the interval with the largest error estimate is bisected (ties broken by
// position), so identical inputs always produce identical results.
template <typename F>
QuadratureResult integrate(const F& f, double a, double b, const QuadratureSpec& spec = {}) {
  QuadratureResult res;
  if (a == b) return res;
  struct Seg {
    double a, b, value, error;
  };
  std::vector<Seg> segs;
  Seg s0{a, b, 0.0, 0.0};
  detail::gk15(f, a, b, s0.value, s0.error);
  res.evaluations = 15;
  segs.push_back(s0);
  while (true) {
    double total = 0.0, err = 0.0;
    for (const auto& s : segs) {
      total += s.value;
      err += s.error;
    }
    res.value = total;
    res.error = err;
    const double target = std::max(spec.abs_tol, spec.rel_tol * std::abs(total));
    if (err <= target) return res;
    if (static_cast<int>(segs.size()) >= spec.max_intervals) {
      res.converged = false;
      return res;
    }
    std::size_t worst = 0;
    for (std::size_t i = 1; i < segs.size(); ++i)
      if (segs[i].error > segs[worst].error) worst = i;
    const Seg s = segs[worst];
    const double mid = 0.5 * (s.a + s.b);
    Seg left{s.a, mid, 0.0, 0.0}, right{mid, s.b, 0.0, 0.0};
    detail::gk15(f, left.a, left.b, left.value, left.error);
    detail::gk15(f, right.a, right.b, right.value, right.error);
    res.evaluations += 30;
    segs[worst] = left;
    segs.push_back(right);
  }
}

template <typename F>
QuadratureResult integrate_or_throw(const F& f, double a, double b, const QuadratureSpec& spec = {}) {
  QuadratureResult r = integrate(f, a, b, spec);
  if (!r.converged) throw QuadratureError(r);
  return r;
}

}  // namespace flowbound
