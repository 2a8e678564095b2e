#include "flowbound/kinematics.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>
#include <string>

namespace flowbound {

Scales::Scales(double l, double l0, double m) : lambda(l), lambda0(l0), mu(m) {
  if (!(lambda > 0.0) || !(lambda0 > 0.0) || !(mu > 0.0) || !std::isfinite(lambda) ||
      !std::isfinite(lambda0) || !std::isfinite(mu))
    throw std::domain_error("Scales: lambda, lambda0, mu must be positive and finite");
  if (lambda > lambda0) throw std::domain_error("Scales: lambda must not exceed lambda0");
}

MomentumConfig::MomentumConfig(int n_ext, std::vector<Momentum4> external)
    : n_ext_(n_ext), external_(std::move(external)) {
  if (n_ext_ < 2) throw std::invalid_argument("MomentumConfig: n_ext must be at least 2");
  if (static_cast<int>(external_.size()) != n_ext_ - 1)
    throw std::invalid_argument("MomentumConfig: expected " + std::to_string(n_ext_ - 1) +
                                " independent momenta, got " + std::to_string(external_.size()));
  for (const auto& p : external_)
    if (!p.finite()) throw std::invalid_argument("MomentumConfig: non-finite momentum component");
}

Momentum4 MomentumConfig::p0() const {
  // Each component is summed in value order, so the derived leg depends only
  // on the multiset of externals and not on how they are listed. Canonical
  // forms and config digests rely on that determinism.
  Momentum4 out;
  const std::size_t m = external_.size();
  std::array<double, 24> buf;
  std::vector<double> heap;
  double* v = buf.data();
  if (m > buf.size()) {
    heap.resize(m);
    v = heap.data();
  }
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < m; ++i) v[i] = external_[i][c];
    std::sort(v, v + m);
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += v[i];
    out[c] = -s;
  }
  return out;
}

std::vector<Momentum4> MomentumConfig::all() const {
  std::vector<Momentum4> out;
  out.reserve(n_ext_);
  out.push_back(p0());
  out.insert(out.end(), external_.begin(), external_.end());
  return out;
}

double regulated_norm(const Momentum4& p, double lambda) {
  if (!p.finite() || !std::isfinite(lambda) || lambda <= 0.0)
    throw std::domain_error("regulated_norm: requires finite p and lambda > 0");
  return std::max(lambda, p.norm());
}

double log_plus(double x) {
  if (!std::isfinite(x)) throw std::domain_error("log_plus: non-finite argument");
  return x > 1.0 ? std::log(x) : 0.0;
}

double dynamical_ir_cutoff(const MomentumConfig& cfg) {
  const int m = cfg.n_ext() - 1;
  if (m > 24) throw std::invalid_argument("dynamical_ir_cutoff: too many momenta (subset explosion)");
  const auto& p = cfg.external();
  // Gray-code walk: exactly one momentum is added or removed per step.
  Momentum4 acc;
  unsigned prev = 0;
  double best = std::numeric_limits<double>::infinity();
  for (unsigned i = 1; i < (1u << m); ++i) {
    const unsigned code = i ^ (i >> 1);
    const unsigned changed = code ^ prev;
    int bit = 0;
    while (!((changed >> bit) & 1u)) ++bit;
    if (code & changed)
      acc += p[bit];
    else
      acc -= p[bit];
    prev = code;
    best = std::min(best, acc.norm2());
  }
  return std::sqrt(best);
}

bool is_exceptional(const MomentumConfig& cfg, double tol) {
  if (!(tol >= 0.0) || !std::isfinite(tol))
    throw std::domain_error("is_exceptional: tol must be finite and nonnegative");
  return dynamical_ir_cutoff(cfg) <= tol;
}

double default_exceptional_tol(const MomentumConfig& cfg) {
  double m = 0.0;
  for (const auto& p : cfg.external()) m = std::max(m, p.norm());
  return 1e-9 * m;
}

double effective_ir_scale(const MomentumConfig& cfg, const Scales& scales) {
  return std::max(scales.lambda, std::min(dynamical_ir_cutoff(cfg), scales.mu));
}

double max_momentum_norm(const MomentumConfig& cfg, double floor, bool include_p0) {
  if (!(floor >= 0.0) || !std::isfinite(floor))
    throw std::domain_error("max_momentum_norm: floor must be finite and nonnegative");
  double m = floor;
  for (const auto& p : cfg.external()) m = std::max(m, p.norm());
  if (include_p0) m = std::max(m, cfg.p0().norm());
  return m;
}

}  // namespace flowbound
