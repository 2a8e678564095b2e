#include "flowbound/bound.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>

#include "flowbound/nnls.hpp"

namespace flowbound {

const std::vector<WeightedTree>& class_trees(const TreeClassParams& params) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::vector<WeightedTree>> memo;
  std::lock_guard<std::mutex> lock(mu);
  // The coordination-3 budget only gates which trees are kept, never the
  // search itself.  Every member has exactly 2m - (n_ext - 4) coordination-3
  // vertices, so counts share the parity of n_ext and top out at n_ext - 4.
  // Cache one saturated enumeration per leg count and slice it per budget.
  const int sat = std::max(0, params.n_ext - 4);
  int r_eff = std::min(params.r, sat);
  if (r_eff > 0 && ((r_eff ^ params.n_ext) & 1)) --r_eff;
  auto key = std::make_pair(params.n_ext, r_eff);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  if (params.r < 0) throw std::invalid_argument("negative coordination-3 budget");
  auto satkey = std::make_pair(params.n_ext, sat);
  auto sit = memo.find(satkey);
  if (sit == memo.end())
    sit = memo.emplace(satkey, enumerate_class({params.n_ext, sat})).first;
  if (r_eff == sat) return sit->second;
  std::vector<WeightedTree> kept;
  for (const WeightedTree& t : sit->second)
    if (coord3_count(t) <= r_eff) kept.push_back(t);
  return memo.emplace(key, std::move(kept)).first->second;
}

BoundStructure tree_sum(const TreeClassParams& params, const MomentumConfig& cfg,
                        const Scales& scales) {
  if (cfg.n_ext() != params.n_ext) throw std::invalid_argument("configuration leg count mismatch");
  const std::vector<WeightedTree>& trees = class_trees(params);
  BoundStructure out;
  out.per_tree_factor.reserve(trees.size());
  for (const WeightedTree& t : trees) {
    double factor = 1.0;
    for (const Split& s : t.splits) {
      const double kn = line_momentum(t, s.side, cfg).norm();
      factor *= std::pow(std::max(scales.lambda, kn), -static_cast<double>(s.rho));
    }
    out.per_tree_factor.push_back(factor);
    out.tree_sum += factor;
  }
  const double kappa = effective_ir_scale(cfg, scales);
  out.log_arg_momentum = log_plus(max_momentum_norm(cfg, scales.mu) / kappa);
  out.log_arg_scale = log_plus(scales.lambda / scales.mu);
  return out;
}

namespace {

// Bivariate monomials of total degree <= loops, graded, x-power descending
// within each degree: 1; x, y; x^2, xy, y^2; ...
std::size_t basis_size(int loops) {
  return static_cast<std::size_t>((loops + 1) * (loops + 2) / 2);
}

void basis_row(double x, double y, int loops, double* row) {
  std::size_t idx = 0;
  for (int d = 0; d <= loops; ++d)
    for (int ix = d; ix >= 0; --ix) row[idx++] = std::pow(x, ix) * std::pow(y, d - ix);
}

}  // namespace

RatioFit ratio_check(const std::vector<RatioSample>& samples, int n_ext, int loops) {
  if (samples.empty()) throw std::invalid_argument("ratio check needs at least one sample");
  if (n_ext < 4) throw std::invalid_argument("the bound is stated for n_ext >= 4");
  if (loops < 0) throw std::invalid_argument("negative loop order");
  const double mu = samples.front().scales.mu;
  for (const RatioSample& s : samples) {
    if (s.cfg.n_ext() != n_ext) throw std::invalid_argument("sample leg count mismatch");
    if (s.scales.mu != mu) throw std::invalid_argument("samples mix renormalization scales");
  }

  const TreeClassParams params{n_ext, 2 * loops};
  RatioFit fit;
  fit.loops = loops;
  fit.points.reserve(samples.size());
  for (const RatioSample& s : samples) {
    const BoundStructure bs = tree_sum(params, s.cfg, s.scales);
    RatioPoint pt;
    pt.log_arg_momentum = bs.log_arg_momentum;
    pt.log_arg_scale = bs.log_arg_scale;
    pt.lambda = s.scales.lambda;
    pt.eta = dynamical_ir_cutoff(s.cfg);
    pt.kappa = effective_ir_scale(s.cfg, s.scales);
    pt.schwinger_abs = s.schwinger_abs;
    pt.tree_sum = bs.tree_sum;
    if (bs.tree_sum > 0.0) {
      pt.ratio = s.schwinger_abs / bs.tree_sum;
    } else if (s.schwinger_abs == 0.0) {
      pt.ratio = 0.0;
    } else {
      throw std::domain_error("empty tree class cannot bound a nonzero value");
    }
    fit.points.push_back(pt);
  }

  const int cols = static_cast<int>(basis_size(loops));
  const int rows = static_cast<int>(fit.points.size());
  std::vector<double> a(static_cast<std::size_t>(rows) * cols), b(rows);
  for (int r = 0; r < rows; ++r) {
    basis_row(fit.points[r].log_arg_momentum, fit.points[r].log_arg_scale, loops,
              a.data() + static_cast<std::size_t>(r) * cols);
    b[r] = fit.points[r].ratio;
  }
  fit.coefficients = nnls(a, rows, cols, b);

  std::vector<double> row(cols);
  for (RatioPoint& pt : fit.points) {
    basis_row(pt.log_arg_momentum, pt.log_arg_scale, loops, row.data());
    pt.fit = 0.0;
    for (int c = 0; c < cols; ++c) pt.fit += fit.coefficients[c] * row[c];
    if (pt.ratio > pt.fit) {
      const double excess = pt.fit > 0.0 ? (pt.ratio - pt.fit) / pt.fit
                                         : std::numeric_limits<double>::infinity();
      fit.max_residual = std::max(fit.max_residual, excess);
    }
  }
  return fit;
}

void RatioFit::write_csv(std::ostream& os) const {
  os << "sample_id,lambda,eta,kappa,log_arg_p,log_arg_lambda,schwinger_abs,tree_sum,ratio,fit\n";
  char buf[40];
  for (std::size_t i = 0; i < points.size(); ++i) {
    const RatioPoint& p = points[i];
    os << i;
    const double vals[] = {p.lambda,        p.eta,      p.kappa, p.log_arg_momentum,
                           p.log_arg_scale, p.schwinger_abs, p.tree_sum, p.ratio, p.fit};
    for (double v : vals) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace flowbound
