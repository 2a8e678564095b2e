#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "flowbound/kinematics.hpp"
#include "flowbound/quadrature.hpp"

namespace flowbound {

// Flowing covariance with exponential cutoffs,
//   C(p) = (exp(-p^2/lambda0^2) - exp(-p^2/lambda^2)) / p^2,
// continuously extended at p = 0.  Its lambda derivative,
//   dC/dlambda = -(2/lambda^3) exp(-p^2/lambda^2),
// does not depend on lambda0, so no lambda0 derivative is exposed.
struct FlowingCovariance {
  Scales scales;

  explicit FlowingCovariance(const Scales& s) : scales(s) {}

  double value_q2(double q2) const;
  double value(const Momentum4& p) const { return value_q2(p.norm2()); }

  double lambda_derivative_q2(double q2) const;
  double lambda_derivative(const Momentum4& p) const { return lambda_derivative_q2(p.norm2()); }
};

// One source insertion |l + k|_lambda^(-theta) in a loop integral.
struct LoopFactor {
  Momentum4 k;
  double theta = 1.0;
};

// integral d^4 l |dC/dlambda(l)| prod_j max(lambda, |l + k_j|)^(-theta_j).
// The integrand depends on l only through its radius and the angles against
// span{k_j}, so the integral reduces to 1 + rank dimensions (at most 4).
QuadratureResult regulated_loop_integral(const std::vector<LoopFactor>& factors,
                                         const Scales& scales, const QuadratureSpec& spec = {});

// integral d^4 l dC/dlambda(l) = -2 pi^2 lambda, exact for this cutoff family.
double loop_kernel_total(double lambda);

// integral d^4 l dC/dlambda(l) C(l + k): the two-propagator kernel entering
// one-loop flow terms.  Reduced to a radius/angle quadrature.
QuadratureResult loop_kernel_with_propagator(double k_norm, const Scales& scales,
                                             const QuadratureSpec& spec = {});

// One row of a loop bound sweep.
struct LoopBoundRow {
  std::size_t sample_id = 0;
  double lambda = 0.0;
  std::vector<double> thetas;
  std::vector<double> k_norms;
  double lhs = 0.0;
  double rhs_without_c = 0.0;  // lambda * prod_j |k_j|_lambda^(-theta_j)
  double ratio = 0.0;
};

struct LoopBoundMenuStats {
  std::vector<double> thetas;
  double sup_at_half = 0.0;  // running sup after the first `samples` draws
  double sup_at_full = 0.0;  // after 2 * samples draws
  bool stable = false;       // sup growth under doubling below threshold
};

struct LoopBoundReport {
  std::vector<LoopBoundRow> rows;
  std::vector<LoopBoundMenuStats> menus;
  double stability_threshold = 0.05;
  bool all_stable = false;

  void write_csv(std::ostream& os) const;
};

// Draws 2 * samples random source configurations per theta menu (isotropic
// directions, log-uniform magnitudes around the scales in the grid; half of
// the multi-source draws cluster the sources within one smoothing radius,
// where the ratio peaks), computes the bound ratio for each, and flags a menu
// only if the running supremum is still growing when the sample count doubles.
LoopBoundReport verify_loop_bound(int samples, const std::vector<std::vector<double>>& theta_menus,
                                  const std::vector<Scales>& scales_grid, std::uint64_t seed,
                                  const QuadratureSpec& spec = {}, double stability_threshold = 0.05);

}  // namespace flowbound
