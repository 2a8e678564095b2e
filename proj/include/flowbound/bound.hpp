#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "flowbound/kinematics.hpp"
#include "flowbound/trees.hpp"

namespace flowbound {

// Right-hand-side structure of the uniform momentum bound: the weighted tree
// sum and the two logarithm arguments the polynomial prefactor depends on.
struct BoundStructure {
  double tree_sum = 0.0;          // sum over the class of prod_i |k_i|_lambda^(-rho_i)
  double log_arg_momentum = 0.0;  // log+(|p|_mu / kappa)
  double log_arg_scale = 0.0;     // log+(lambda / mu)
  std::vector<double> per_tree_factor;  // parallel to class_trees(params)
};

// Enumerations are memoized per (n_ext, r); safe for concurrent callers.
const std::vector<WeightedTree>& class_trees(const TreeClassParams& params);

BoundStructure tree_sum(const TreeClassParams& params, const MomentumConfig& cfg,
                        const Scales& scales);

// One computed Schwinger value to check against the bound.
struct RatioSample {
  MomentumConfig cfg;
  Scales scales;
  double schwinger_abs = 0.0;
};

struct RatioPoint {
  double log_arg_momentum = 0.0;
  double log_arg_scale = 0.0;
  double ratio = 0.0;  // |schwinger| / tree_sum
  double fit = 0.0;    // fitted polynomial value at the log arguments
  // bookkeeping for reports
  double lambda = 0.0;
  double eta = 0.0;
  double kappa = 0.0;
  double schwinger_abs = 0.0;
  double tree_sum = 0.0;
};

// Fitted polynomial prefactor: nonnegative coefficients on the bivariate
// monomials of total degree <= loops in the two log arguments, ordered by
// total degree then by power of the momentum log.
struct RatioFit {
  int loops = 0;
  std::vector<double> coefficients;
  std::vector<RatioPoint> points;
  // Largest relative excess of the data over the fitted polynomial,
  // max (ratio - fit)/fit over the sample.  The fit is a candidate upper
  // bound, so only points above it count; infinity when the fit collapses
  // to zero under a nonzero ratio.
  double max_residual = 0.0;

  void write_csv(std::ostream& os) const;
};

RatioFit ratio_check(const std::vector<RatioSample>& samples, int n_ext, int loops);

}  // namespace flowbound
