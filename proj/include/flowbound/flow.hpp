#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <mutex>
#include <vector>

#include "flowbound/kinematics.hpp"
#include "flowbound/quadrature.hpp"

namespace flowbound {

// Counterterm data of the quartic interaction, graded by loop order:
// wave-function a[l], mass b2[l], quartic b4[l].  Order 0 is pinned to the
// bare action: a[0] = b2[0] = 0 and b4[0] = g0.
class CountertermSeries {
 public:
  explicit CountertermSeries(double g0);

  double g0() const { return g0_; }
  int max_order() const { return static_cast<int>(a_.size()) - 1; }

  double a_at(int l) const;   // 0 beyond stored orders
  double b2_at(int l) const;
  double b4_at(int l) const;  // g0 at order 0

  void set_order(int l, double a, double b2, double b4);  // l >= 1

  // Boundary value of the flow at lambda = lambda0: the counterterm
  // polynomial for the relevant/marginal sectors, zero for n >= 6.
  double boundary(int n, int l, const MomentumConfig& cfg) const;

 private:
  double g0_;
  std::vector<double> a_, b2_, b4_;
};

// The two parts of the flow right-hand side, reported separately: the loop
// integral over the higher function and the bilinear partition sum.
struct FlowRHS {
  double linear = 0.0;
  double bilinear = 0.0;
  double linear_error = 0.0;  // quadrature error estimate of the linear part
  double total() const { return linear + bilinear; }
};

struct EvaluatorOptions {
  QuadratureSpec lambda_quad{1e-9, 0.0, 4000};  // flow-scale integration
  QuadratureSpec loop_quad{1e-8, 0.0, 4000};    // reduced loop integrals
  int mc_samples = 10000;     // Monte Carlo loop-term fallback (property-only)
  int mc_lambda_panels = 8;   // fixed panels for flow integrals over noisy integrands
  std::uint64_t seed = 0x5eed0001u;
};

// Canonical form of a configuration: the full momentum list (including the
// derived zeroth momentum) sorted, with the least entry taking the derived
// role.  Evaluations are symmetric under this reshuffle, so cache keys use it.
MomentumConfig canonical_config(const MomentumConfig& cfg);
std::uint64_t config_digest(const MomentumConfig& cfg);

// Connected amputated tree-level functions in closed form (boundary
// convention: the quartic coupling is the constant 4-point function and the
// functions with n >= 6 vanish at lambda = lambda0).
double schwinger_tree_direct(int n_ext, const Scales& scales, const MomentumConfig& cfg,
                             double g0);

// Memoizing evaluator of the perturbative flow recursion.
//
// Supported depth: exact zeros (odd n, or (2,0)) at any order; closed forms
// at l = 0 for n in {4,6,8}; quantitative quadrature paths at l = 1 for
// n in {2,4}; Monte Carlo property-only paths for (6,1) and (2,2).
class SchwingerEvaluator {
 public:
  SchwingerEvaluator(const Scales& scales, const CountertermSeries& ct,
                     const EvaluatorOptions& opt = {});

  const Scales& scales() const { return scales_; }
  const CountertermSeries& counterterms() const { return ct_; }
  const EvaluatorOptions& options() const { return opt_; }

  // Closed forms when available, flow integration otherwise.
  double evaluate(int n, int l, const MomentumConfig& cfg);
  double evaluate_at(int n, int l, double lambda, const MomentumConfig& cfg);

  // Always integrates the flow equation from the boundary, even where a
  // closed form exists (used to cross-check the recursion).
  double evaluate_via_flow(int n, int l, const MomentumConfig& cfg);
  double evaluate_via_flow_at(int n, int l, double lambda, const MomentumConfig& cfg);

  FlowRHS flow_rhs(int n, int l, double lambda, const MomentumConfig& cfg);

  static bool always_zero(int n, int l) { return (n % 2) != 0 || (n == 2 && l == 0); }
  static bool supported(int n, int l);

  // Cache persistence (versioned binary; entries from other parameter
  // sets load fine and simply never match).
  std::size_t cache_size() const;
  bool save_cache(const std::string& path) const;
  bool load_cache(const std::string& path);

 private:
  struct Key {
    std::uint64_t meta = 0, ctx = 0, k1 = 0, k2 = 0, digest = 0;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };

  double flow_value(int n, int l, double lambda, const MomentumConfig& canon,
                    std::uint64_t digest);
  double segment_integral(int n, int l, double lo, double hi, const MomentumConfig& canon,
                          std::uint64_t digest);
  FlowRHS rhs_canonical(int n, int l, double lambda, const MomentumConfig& canon,
                        std::uint64_t digest);
  double factor_eval(int n, int l, double lambda, const MomentumConfig& cfg);
  double bilinear_term(int n, int l, double lambda, const MomentumConfig& canon);
  FlowRHS linear_term(int n, int l, double lambda, const MomentumConfig& canon,
                      std::uint64_t digest);
  void ensure_supported(int n, int l) const;

  bool cache_get(const Key& k, double& out) const;
  void cache_put(const Key& k, double v);
  Key make_key(int kind, int n, int l, std::uint64_t k1, std::uint64_t k2,
               std::uint64_t digest) const;

  Scales scales_;
  CountertermSeries ct_;
  EvaluatorOptions opt_;
  std::uint64_t context_;  // digest of everything the cached values depend on

  mutable std::mutex cache_mutex_;
  std::unordered_map<Key, double, KeyHash> cache_;
};

// Solves the renormalization conditions at scale mu for the order-l
// counterterms by shooting: one base run plus one unit-response run per
// counterterm (the order-l solution is affine in them).  Returns the input
// series extended with the order-l entries.  Implemented for l = 1.
CountertermSeries fix_counterterms(int order, const Scales& scales, const CountertermSeries& lower,
                                   const EvaluatorOptions& opt = {});

// UV+IR limit probe: evaluates along decreasing lambda for each lambda0
// (counterterms re-fixed per lambda0) and reports Cauchy increments.
struct ProbeReport {
  int n_ext = 0;
  int loops = 0;
  std::vector<double> lambdas;             // descending toward the IR
  std::vector<double> lambda0s;            // ascending toward the UV
  std::vector<std::vector<double>> values;  // [lambda0 index][lambda index]
  std::vector<double> ir_values;           // per lambda0: value at the smallest lambda
  std::vector<double> uv_increments;       // |ir_values[i] - ir_values[i-1]|
  bool flagged_divergent = false;
};

ProbeReport uv_ir_probe(int n_ext, int loops, const MomentumConfig& cfg,
                        std::vector<double> lambdas, std::vector<double> lambda0s, double g0,
                        double mu, const EvaluatorOptions& opt = {});

}  // namespace flowbound
