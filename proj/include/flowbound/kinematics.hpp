#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace flowbound {

// Euclidean four-momentum.
struct Momentum4 {
  std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};

  Momentum4() = default;
  Momentum4(double c0, double c1, double c2, double c3) : c{c0, c1, c2, c3} {}

  double& operator[](std::size_t i) { return c[i]; }
  double operator[](std::size_t i) const { return c[i]; }

  Momentum4& operator+=(const Momentum4& o) {
    for (std::size_t i = 0; i < 4; ++i) c[i] += o.c[i];
    return *this;
  }
  Momentum4& operator-=(const Momentum4& o) {
    for (std::size_t i = 0; i < 4; ++i) c[i] -= o.c[i];
    return *this;
  }
  Momentum4& operator*=(double s) {
    for (std::size_t i = 0; i < 4; ++i) c[i] *= s;
    return *this;
  }

  friend Momentum4 operator+(Momentum4 a, const Momentum4& b) { return a += b; }
  friend Momentum4 operator-(Momentum4 a, const Momentum4& b) { return a -= b; }
  friend Momentum4 operator-(const Momentum4& a) { return {-a.c[0], -a.c[1], -a.c[2], -a.c[3]}; }
  friend Momentum4 operator*(double s, Momentum4 a) { return a *= s; }
  friend Momentum4 operator*(Momentum4 a, double s) { return a *= s; }
  friend bool operator==(const Momentum4& a, const Momentum4& b) { return a.c == b.c; }

  double norm2() const { return c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3]; }
  double norm() const { return std::sqrt(norm2()); }
  bool finite() const {
    return std::isfinite(c[0]) && std::isfinite(c[1]) && std::isfinite(c[2]) && std::isfinite(c[3]);
  }
};

inline double dot(const Momentum4& a, const Momentum4& b) {
  return a.c[0] * b.c[0] + a.c[1] * b.c[1] + a.c[2] * b.c[2] + a.c[3] * b.c[3];
}

// Scale triple for a flow between an IR scale and a UV scale, with a
// renormalization point mu.  Invariant: 0 < lambda <= lambda0, mu > 0.
struct Scales {
  double lambda = 1.0;
  double lambda0 = 1.0;
  double mu = 1.0;

  Scales() = default;
  Scales(double l, double l0, double m = 1.0);
};

// Momentum configuration for an n-point function.  Only n_ext - 1 momenta are
// independent; the remaining one (index 0) is derived from overall momentum
// conservation and never stored.
class MomentumConfig {
 public:
  MomentumConfig(int n_ext, std::vector<Momentum4> external);

  int n_ext() const { return n_ext_; }
  const std::vector<Momentum4>& external() const { return external_; }

  // Momentum of the dependent line: -(p_1 + ... + p_{n-1}).
  Momentum4 p0() const;

  // All n_ext momenta, dependent one first.
  std::vector<Momentum4> all() const;

 private:
  int n_ext_;
  std::vector<Momentum4> external_;
};

// max(lambda, |p|)
double regulated_norm(const Momentum4& p, double lambda);

// log max(1, x)
double log_plus(double x);

// Smallest norm of a sum over a nonempty subset of the independent momenta.
// Exhaustive over all 2^(n_ext-1) - 1 subsets; refuses n_ext - 1 > 24.
double dynamical_ir_cutoff(const MomentumConfig& cfg);

// A configuration is exceptional when some nonempty partial sum of the
// independent momenta (nearly) vanishes.  tol = 0 tests exact vanishing.
bool is_exceptional(const MomentumConfig& cfg, double tol);

// Default tolerance used by callers that only have float inputs.
double default_exceptional_tol(const MomentumConfig& cfg);

// sup(lambda, inf(eta, mu)) with eta the dynamical IR cutoff of cfg.
double effective_ir_scale(const MomentumConfig& cfg, const Scales& scales);

// max(floor, max_e |p_e|) over the independent momenta; optionally include
// the dependent momentum as well.
double max_momentum_norm(const MomentumConfig& cfg, double floor, bool include_p0 = false);

}  // namespace flowbound
