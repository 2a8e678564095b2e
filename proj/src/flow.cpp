#include "flowbound/flow.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>

#include "flowbound/covariance.hpp"

namespace flowbound {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSixteenPiSq = 16.0 * kPi * kPi;
const double kSixteenPi4 = 16.0 * kPi * kPi * kPi * kPi;  // (2 pi)^4

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

struct Fnv {
  std::uint64_t h = kFnvOffset;

  void add_bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= kFnvPrime;
    }
  }
  void add_u64(std::uint64_t v) { add_bytes(&v, sizeof v); }
  void add_i32(int v) { add_u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
  void add_double(double v) {
    if (v == 0.0) v = 0.0;  // collapse signed zero
    add_u64(std::bit_cast<std::uint64_t>(v));
  }
};

std::uint64_t double_bits(double v) {
  if (v == 0.0) v = 0.0;
  return std::bit_cast<std::uint64_t>(v);
}

bool lex_less(const Momentum4& a, const Momentum4& b) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

bool uses_monte_carlo(int n, int l) { return (n == 6 && l == 1) || (n == 2 && l == 2); }

MomentumConfig sub_config(const std::vector<Momentum4>& q, unsigned mask) {
  std::vector<Momentum4> ext;
  for (std::size_t e = 0; e < q.size(); ++e)
    if (mask >> e & 1u) ext.push_back(q[e]);
  const int n_sub = static_cast<int>(ext.size()) + 1;  // read before the move
  return MomentumConfig(n_sub, std::move(ext));
}

std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> m, std::array<double, 3> r) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int i = c + 1; i < 3; ++i)
      if (std::abs(m[i][c]) > std::abs(m[piv][c])) piv = i;
    if (std::abs(m[piv][c]) < 1e-300)
      throw std::runtime_error("singular response matrix in counterterm fixing");
    std::swap(m[c], m[piv]);
    std::swap(r[c], r[piv]);
    for (int i = c + 1; i < 3; ++i) {
      const double f = m[i][c] / m[c][c];
      for (int j = c; j < 3; ++j) m[i][j] -= f * m[c][j];
      r[i] -= f * r[c];
    }
  }
  std::array<double, 3> x{};
  for (int i = 2; i >= 0; --i) {
    double s = r[i];
    for (int j = i + 1; j < 3; ++j) s -= m[i][j] * x[j];
    x[i] = s / m[i][i];
  }
  return x;
}

// Two-propagator loop kernel values are independent of the interaction, so
// they are shared process-wide across evaluator instances.
struct KernelCacheKey {
  std::uint64_t k = 0, lambda = 0, lambda0 = 0, tol = 0;
  bool operator==(const KernelCacheKey&) const = default;
};
struct KernelCacheHash {
  std::size_t operator()(const KernelCacheKey& k) const {
    Fnv f;
    f.add_u64(k.k);
    f.add_u64(k.lambda);
    f.add_u64(k.lambda0);
    f.add_u64(k.tol);
    return static_cast<std::size_t>(f.h);
  }
};

double cached_loop_kernel(double k_norm, const Scales& scales, const QuadratureSpec& spec,
                          double& error_out) {
  static std::mutex mu;
  static std::unordered_map<KernelCacheKey, std::pair<double, double>, KernelCacheHash> cache;
  KernelCacheKey key{double_bits(k_norm), double_bits(scales.lambda), double_bits(scales.lambda0),
                     double_bits(spec.rel_tol)};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) {
      error_out = it->second.second;
      return it->second.first;
    }
  }
  const QuadratureResult r = loop_kernel_with_propagator(k_norm, scales, spec);
  {
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(key, std::make_pair(r.value, r.error));
  }
  error_out = r.error;
  return r.value;
}

}  // namespace

CountertermSeries::CountertermSeries(double g0) : g0_(g0), a_{0.0}, b2_{0.0}, b4_{g0} {
  if (!std::isfinite(g0)) throw std::invalid_argument("coupling must be finite");
}

double CountertermSeries::a_at(int l) const {
  if (l < 0) throw std::invalid_argument("negative loop order");
  return l < static_cast<int>(a_.size()) ? a_[l] : 0.0;
}

double CountertermSeries::b2_at(int l) const {
  if (l < 0) throw std::invalid_argument("negative loop order");
  return l < static_cast<int>(b2_.size()) ? b2_[l] : 0.0;
}

double CountertermSeries::b4_at(int l) const {
  if (l < 0) throw std::invalid_argument("negative loop order");
  return l < static_cast<int>(b4_.size()) ? b4_[l] : 0.0;
}

void CountertermSeries::set_order(int l, double a, double b2, double b4) {
  if (l < 1) throw std::invalid_argument("order 0 is pinned to the bare action");
  if (!std::isfinite(a) || !std::isfinite(b2) || !std::isfinite(b4))
    throw std::invalid_argument("counterterms must be finite");
  const auto need = static_cast<std::size_t>(l) + 1;
  if (a_.size() < need) {
    a_.resize(need, 0.0);
    b2_.resize(need, 0.0);
    b4_.resize(need, 0.0);
  }
  a_[l] = a;
  b2_[l] = b2;
  b4_[l] = b4;
}

double CountertermSeries::boundary(int n, int l, const MomentumConfig& cfg) const {
  if (cfg.n_ext() != n) throw std::invalid_argument("configuration size mismatch");
  if (n % 2 != 0) return 0.0;
  if (n == 2) return a_at(l) * cfg.external()[0].norm2() + b2_at(l);
  if (n == 4) return b4_at(l);
  return 0.0;
}

MomentumConfig canonical_config(const MomentumConfig& cfg) {
  std::vector<Momentum4> q = cfg.all();
  for (auto& m : q)
    for (std::size_t i = 0; i < 4; ++i)
      if (m[i] == 0.0) m[i] = 0.0;
  std::sort(q.begin(), q.end(), lex_less);
  std::vector<Momentum4> ext(q.begin() + 1, q.end());
  return MomentumConfig(cfg.n_ext(), std::move(ext));
}

std::uint64_t config_digest(const MomentumConfig& cfg) {
  const MomentumConfig canon = canonical_config(cfg);
  Fnv f;
  f.add_i32(canon.n_ext());
  for (const Momentum4& m : canon.all())
    for (std::size_t i = 0; i < 4; ++i) f.add_double(m[i]);
  return f.h;
}

double schwinger_tree_direct(int n_ext, const Scales& scales, const MomentumConfig& cfg,
                             double g0) {
  if (cfg.n_ext() != n_ext) throw std::invalid_argument("configuration size mismatch");
  if (n_ext == 4) return g0;
  const std::vector<Momentum4> q = cfg.all();
  const FlowingCovariance cov(scales);
  if (n_ext == 6) {
    // One propagator per three/three channel; ten channels, fixed by the
    // pair joining the dependent line.
    double sum = 0.0;
    for (int i = 1; i < 5; ++i)
      for (int j = i + 1; j < 6; ++j) sum += cov.value(q[0] + q[i] + q[j]);
    return -g0 * g0 * sum;
  }
  if (n_ext == 8) {
    // Two propagators: an unordered pair of disjoint external triples hangs
    // off the ends of the three-vertex chain.  Order pairs by smallest label.
    std::vector<unsigned> triples;
    for (unsigned m = 0; m < 256u; ++m)
      if (std::popcount(m) == 3) triples.push_back(m);
    double sum = 0.0;
    for (unsigned s : triples) {
      Momentum4 ps;
      for (int e = 0; e < 8; ++e)
        if (s >> e & 1u) ps += q[e];
      const double cs = cov.value(ps);
      for (unsigned t : triples) {
        if ((s & t) != 0u || std::countr_zero(s) > std::countr_zero(t)) continue;
        Momentum4 pt;
        for (int e = 0; e < 8; ++e)
          if (t >> e & 1u) pt += q[e];
        sum += cs * cov.value(pt);
      }
    }
    return g0 * g0 * g0 * sum;
  }
  throw std::invalid_argument("tree-level closed form limited to 4, 6, 8 external lines");
}

SchwingerEvaluator::SchwingerEvaluator(const Scales& scales, const CountertermSeries& ct,
                                       const EvaluatorOptions& opt)
    : scales_(scales), ct_(ct), opt_(opt) {
  Fnv f;
  f.add_double(ct_.g0());
  f.add_i32(ct_.max_order());
  for (int l = 0; l <= ct_.max_order(); ++l) {
    f.add_double(ct_.a_at(l));
    f.add_double(ct_.b2_at(l));
    f.add_double(ct_.b4_at(l));
  }
  f.add_double(scales_.lambda0);
  f.add_double(scales_.mu);
  f.add_double(opt_.lambda_quad.rel_tol);
  f.add_double(opt_.lambda_quad.abs_tol);
  f.add_i32(opt_.lambda_quad.max_intervals);
  f.add_double(opt_.loop_quad.rel_tol);
  f.add_double(opt_.loop_quad.abs_tol);
  f.add_i32(opt_.loop_quad.max_intervals);
  f.add_i32(opt_.mc_samples);
  f.add_i32(opt_.mc_lambda_panels);
  f.add_u64(opt_.seed);
  context_ = f.h;
}

bool SchwingerEvaluator::supported(int n, int l) {
  if (always_zero(n, l)) return true;
  if (l == 0) return n == 4 || n == 6 || n == 8;
  if (l == 1) return n == 2 || n == 4 || n == 6;
  if (l == 2) return n == 2;
  return false;
}

void SchwingerEvaluator::ensure_supported(int n, int l) const {
  if (n < 2) throw std::invalid_argument("need at least two external lines");
  if (l < 0) throw std::invalid_argument("negative loop order");
  if (!supported(n, l))
    throw std::runtime_error("flow depth not supported: n=" + std::to_string(n) +
                             ", l=" + std::to_string(l));
}

double SchwingerEvaluator::evaluate(int n, int l, const MomentumConfig& cfg) {
  return evaluate_at(n, l, scales_.lambda, cfg);
}

double SchwingerEvaluator::evaluate_via_flow(int n, int l, const MomentumConfig& cfg) {
  return evaluate_via_flow_at(n, l, scales_.lambda, cfg);
}

double SchwingerEvaluator::evaluate_at(int n, int l, double lambda, const MomentumConfig& cfg) {
  if (cfg.n_ext() != n) throw std::invalid_argument("configuration size mismatch");
  if (!(lambda > 0.0) || lambda > scales_.lambda0)
    throw std::invalid_argument("evaluation scale must lie in (0, lambda0]");
  if (always_zero(n, l)) return 0.0;
  ensure_supported(n, l);
  if (l == 0) return schwinger_tree_direct(n, Scales(lambda, scales_.lambda0, scales_.mu), cfg,
                                           ct_.g0());
  const MomentumConfig canon = canonical_config(cfg);
  return flow_value(n, l, lambda, canon, config_digest(canon));
}

double SchwingerEvaluator::evaluate_via_flow_at(int n, int l, double lambda,
                                                const MomentumConfig& cfg) {
  if (cfg.n_ext() != n) throw std::invalid_argument("configuration size mismatch");
  if (!(lambda > 0.0) || lambda > scales_.lambda0)
    throw std::invalid_argument("evaluation scale must lie in (0, lambda0]");
  if (always_zero(n, l)) return 0.0;
  ensure_supported(n, l);
  const MomentumConfig canon = canonical_config(cfg);
  return flow_value(n, l, lambda, canon, config_digest(canon));
}

FlowRHS SchwingerEvaluator::flow_rhs(int n, int l, double lambda, const MomentumConfig& cfg) {
  if (cfg.n_ext() != n) throw std::invalid_argument("configuration size mismatch");
  if (!(lambda > 0.0) || lambda > scales_.lambda0)
    throw std::invalid_argument("evaluation scale must lie in (0, lambda0]");
  if (always_zero(n, l)) return {};
  ensure_supported(n, l);
  const MomentumConfig canon = canonical_config(cfg);
  return rhs_canonical(n, l, lambda, canon, config_digest(canon));
}

double SchwingerEvaluator::flow_value(int n, int l, double lambda, const MomentumConfig& canon,
                                      std::uint64_t digest) {
  const Key key = make_key(0, n, l, double_bits(lambda), 0, digest);
  double cached;
  if (cache_get(key, cached)) return cached;

  const double boundary = ct_.boundary(n, l, canon);
  const double mu = scales_.mu;
  const double l0 = scales_.lambda0;
  double integral = 0.0;
  if (lambda < l0) {
    if (mu >= l0) {
      integral = segment_integral(n, l, lambda, l0, canon, digest);
    } else if (lambda <= mu) {
      // Anchor at mu so the UV segment is shared between the counterterm
      // solve and later evaluations; the IR pieces then cancel exactly in
      // renormalized quantities.
      integral = segment_integral(n, l, lambda, mu, canon, digest) +
                 segment_integral(n, l, mu, l0, canon, digest);
    } else {
      integral = segment_integral(n, l, mu, l0, canon, digest) -
                 segment_integral(n, l, mu, lambda, canon, digest);
    }
  }
  const double value = boundary - integral;
  cache_put(key, value);
  return value;
}

double SchwingerEvaluator::segment_integral(int n, int l, double lo, double hi,
                                            const MomentumConfig& canon, std::uint64_t digest) {
  if (lo == hi) return 0.0;
  const Key key = make_key(1, n, l, double_bits(lo), double_bits(hi), digest);
  double cached;
  if (cache_get(key, cached)) return cached;

  const double l0 = scales_.lambda0;
  auto integrand = [&](double t) {
    const double lam = std::min(std::exp(t), l0);
    return rhs_canonical(n, l, lam, canon, digest).total() * lam;
  };
  const double ta = std::log(lo), tb = std::log(hi);
  double value = 0.0;
  if (uses_monte_carlo(n, l)) {
    // Fixed composite panels: the integrand carries Monte Carlo noise, so
    // adaptive refinement would chase it forever.
    const int panels = std::max(1, opt_.mc_lambda_panels);
    const double dt = (tb - ta) / panels;
    for (int p = 0; p < panels; ++p) {
      double v = 0.0, e = 0.0;
      detail::gk15(integrand, ta + p * dt, ta + (p + 1) * dt, v, e);
      value += v;
    }
  } else {
    value = integrate_or_throw(integrand, ta, tb, opt_.lambda_quad).value;
  }
  cache_put(key, value);
  return value;
}

FlowRHS SchwingerEvaluator::rhs_canonical(int n, int l, double lambda,
                                          const MomentumConfig& canon, std::uint64_t digest) {
  FlowRHS out = linear_term(n, l, lambda, canon, digest);
  out.bilinear = bilinear_term(n, l, lambda, canon);
  return out;
}

double SchwingerEvaluator::factor_eval(int n, int l, double lambda, const MomentumConfig& cfg) {
  if (always_zero(n, l)) return 0.0;
  if (l == 0)
    return schwinger_tree_direct(n, Scales(lambda, scales_.lambda0, scales_.mu), cfg, ct_.g0());
  ensure_supported(n, l);
  const MomentumConfig canon = canonical_config(cfg);
  return flow_value(n, l, lambda, canon, config_digest(canon));
}

double SchwingerEvaluator::bilinear_term(int n, int l, double lambda,
                                         const MomentumConfig& canon) {
  const std::vector<Momentum4> q = canon.all();
  const FlowingCovariance cov(Scales(lambda, scales_.lambda0, scales_.mu));
  const unsigned full = (1u << n) - 1u;
  double sum = 0.0;
  for (unsigned mask = 1u; mask <= full; mask += 2u) {
    const int size = std::popcount(mask);
    if (size % 2 == 0) continue;  // both fragments must have even line count
    const int n1 = size + 1;
    const int n2 = n - size + 1;
    Momentum4 flow_momentum;
    for (int e = 0; e < n; ++e)
      if (mask >> e & 1u) flow_momentum += q[e];
    double dc = 0.0;
    bool dc_ready = false;
    for (int lp = 0; lp <= l; ++lp) {
      const int lq = l - lp;
      if (always_zero(n1, lp) || always_zero(n2, lq)) continue;
      if (!dc_ready) {
        dc = cov.lambda_derivative(flow_momentum);
        dc_ready = true;
      }
      const double f1 = factor_eval(n1, lp, lambda, sub_config(q, mask));
      if (f1 == 0.0) continue;
      const double f2 = factor_eval(n2, lq, lambda, sub_config(q, full ^ mask));
      sum += dc * f1 * f2;
    }
  }
  return -sum;
}

FlowRHS SchwingerEvaluator::linear_term(int n, int l, double lambda, const MomentumConfig& canon,
                                        std::uint64_t digest) {
  FlowRHS out;
  if (l == 0) return out;
  const int nf = n + 2;
  const int lf = l - 1;

  if (nf == 4 && lf == 0) {
    // The higher function is the constant coupling; the loop integral is the
    // exact cutoff volume.
    out.linear = 0.5 / kSixteenPi4 * loop_kernel_total(lambda) * ct_.g0();
    return out;
  }

  if (n == 4 && l == 1) {
    // Six-point tree in closed form under the loop: four channels free of
    // the loop momentum plus six two-propagator kernels.
    const Scales cur(lambda, scales_.lambda0, scales_.mu);
    const FlowingCovariance cov(cur);
    const std::vector<Momentum4> q = canon.all();
    double free_channels = 0.0;
    for (int e = 0; e < 4; ++e) free_channels += cov.value(q[e]);
    double value = loop_kernel_total(lambda) * free_channels;
    double error = 0.0;
    for (int e = 0; e < 4; ++e)
      for (int f = e + 1; f < 4; ++f) {
        double kerr = 0.0;
        value += cached_loop_kernel((q[e] + q[f]).norm(), cur, opt_.loop_quad, kerr);
        error += kerr;
      }
    const double pref = -0.5 * ct_.g0() * ct_.g0() / kSixteenPi4;
    out.linear = pref * value;
    out.linear_error = std::abs(pref) * error;
    return out;
  }

  // Monte Carlo fallback: Gaussian importance sampling with the cutoff
  // derivative as (negative) weight.
  Fnv sf;
  sf.add_u64(opt_.seed);
  sf.add_u64(context_);
  sf.add_i32(n);
  sf.add_i32(l);
  sf.add_u64(double_bits(lambda));
  sf.add_u64(digest);
  std::mt19937_64 rng(sf.h);
  std::normal_distribution<double> gauss(0.0, lambda / std::sqrt(2.0));

  const std::vector<Momentum4> q = canon.all();
  std::vector<Momentum4> ext(q.begin() + 1, q.end());
  ext.resize(static_cast<std::size_t>(n) + 1);
  const int samples = std::max(1, opt_.mc_samples);
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Momentum4 loop_momentum(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    ext[static_cast<std::size_t>(n) - 1] = -loop_momentum;
    ext[static_cast<std::size_t>(n)] = loop_momentum;
    const double f = factor_eval(nf, lf, lambda, MomentumConfig(n + 2, ext));
    sum += f;
    sum_sq += f * f;
  }
  const double mean = sum / samples;
  const double var = std::max(0.0, sum_sq / samples - mean * mean);
  const double pref = -lambda / kSixteenPiSq;
  out.linear = pref * mean;
  out.linear_error = std::abs(pref) * std::sqrt(var / samples);
  return out;
}

SchwingerEvaluator::Key SchwingerEvaluator::make_key(int kind, int n, int l, std::uint64_t k1,
                                                     std::uint64_t k2,
                                                     std::uint64_t digest) const {
  Key k;
  k.meta = static_cast<std::uint64_t>(kind) | (static_cast<std::uint64_t>(n) << 8) |
           (static_cast<std::uint64_t>(l) << 16);
  k.ctx = context_;
  k.k1 = k1;
  k.k2 = k2;
  k.digest = digest;
  return k;
}

std::size_t SchwingerEvaluator::KeyHash::operator()(const Key& k) const {
  Fnv f;
  f.add_u64(k.meta);
  f.add_u64(k.ctx);
  f.add_u64(k.k1);
  f.add_u64(k.k2);
  f.add_u64(k.digest);
  return static_cast<std::size_t>(f.h);
}

bool SchwingerEvaluator::cache_get(const Key& k, double& out) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto it = cache_.find(k);
  if (it == cache_.end()) return false;
  out = it->second;
  return true;
}

void SchwingerEvaluator::cache_put(const Key& k, double v) {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  cache_.emplace(k, v);  // values are deterministic, first write wins
}

std::size_t SchwingerEvaluator::cache_size() const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  return cache_.size();
}

bool SchwingerEvaluator::save_cache(const std::string& path) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) return false;
  const char magic[4] = {'F', 'B', 'C', '1'};
  os.write(magic, 4);
  const std::uint64_t count = cache_.size();
  os.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& [k, v] : cache_) {
    os.write(reinterpret_cast<const char*>(&k.meta), sizeof k.meta);
    os.write(reinterpret_cast<const char*>(&k.ctx), sizeof k.ctx);
    os.write(reinterpret_cast<const char*>(&k.k1), sizeof k.k1);
    os.write(reinterpret_cast<const char*>(&k.k2), sizeof k.k2);
    os.write(reinterpret_cast<const char*>(&k.digest), sizeof k.digest);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  return static_cast<bool>(os);
}

bool SchwingerEvaluator::load_cache(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return false;
  char magic[4];
  is.read(magic, 4);
  if (!is || magic[0] != 'F' || magic[1] != 'B' || magic[2] != 'C' || magic[3] != '1')
    return false;
  std::uint64_t count = 0;
  is.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!is) return false;
  std::lock_guard<std::mutex> lock(cache_mutex_);
  for (std::uint64_t i = 0; i < count; ++i) {
    Key k;
    double v;
    is.read(reinterpret_cast<char*>(&k.meta), sizeof k.meta);
    is.read(reinterpret_cast<char*>(&k.ctx), sizeof k.ctx);
    is.read(reinterpret_cast<char*>(&k.k1), sizeof k.k1);
    is.read(reinterpret_cast<char*>(&k.k2), sizeof k.k2);
    is.read(reinterpret_cast<char*>(&k.digest), sizeof k.digest);
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) return false;
    cache_.emplace(k, v);
  }
  return true;
}

CountertermSeries fix_counterterms(int order, const Scales& scales,
                                   const CountertermSeries& lower, const EvaluatorOptions& opt) {
  if (order != 1)
    throw std::runtime_error("counterterm fixing implemented for loop order 1 only");
  if (lower.max_order() < order - 1)
    throw std::invalid_argument("lower orders must be fixed first");
  if (scales.mu > scales.lambda0)
    throw std::invalid_argument("renormalization point must not exceed the UV scale");

  const MomentumConfig zero2(2, {Momentum4{}});
  const MomentumConfig zero4(4, {Momentum4{}, Momentum4{}, Momentum4{}});
  const double mu = scales.mu;

  // The order-l functions are affine in the order-l counterterms, so one
  // base run plus three unit responses determine the solution exactly.
  auto measure = [&](double a, double b2, double b4) {
    CountertermSeries trial = lower;
    trial.set_order(order, a, b2, b4);
    SchwingerEvaluator ev(scales, trial, opt);
    std::array<double, 3> m{};
    m[0] = ev.evaluate_at(2, order, mu, zero2);
    auto two_point = [&](double p2) {
      const MomentumConfig cfg(2, {Momentum4(std::sqrt(p2), 0.0, 0.0, 0.0)});
      return ev.evaluate_at(2, order, mu, cfg);
    };
    const double h = 0.01 * mu * mu;
    const double d_full = (two_point(h) - m[0]) / h;
    const double d_half = (two_point(0.5 * h) - m[0]) / (0.5 * h);
    m[1] = 2.0 * d_half - d_full;  // Richardson step of the one-sided stencil
    m[2] = ev.evaluate_at(4, order, mu, zero4);
    return m;
  };

  const std::array<double, 3> base = measure(0.0, 0.0, 0.0);
  std::array<std::array<double, 3>, 3> response{};
  for (int j = 0; j < 3; ++j) {
    const std::array<double, 3> trial =
        measure(j == 0 ? 1.0 : 0.0, j == 1 ? 1.0 : 0.0, j == 2 ? 1.0 : 0.0);
    for (int i = 0; i < 3; ++i) response[i][j] = trial[i] - base[i];
  }
  const std::array<double, 3> rhs{-base[0], -base[1], -base[2]};
  const std::array<double, 3> x = solve3(response, rhs);

  CountertermSeries fixed = lower;
  fixed.set_order(order, x[0], x[1], x[2]);
  return fixed;
}

ProbeReport uv_ir_probe(int n_ext, int loops, const MomentumConfig& cfg,
                        std::vector<double> lambdas, std::vector<double> lambda0s, double g0,
                        double mu, const EvaluatorOptions& opt) {
  if (cfg.n_ext() != n_ext) throw std::invalid_argument("configuration size mismatch");
  if (lambdas.empty() || lambda0s.empty()) throw std::invalid_argument("empty probe grid");
  for (double l : lambdas)
    if (!(l > 0.0)) throw std::invalid_argument("probe scales must be positive");
  for (double l0 : lambda0s)
    if (!(l0 > 0.0)) throw std::invalid_argument("probe scales must be positive");
  if (!SchwingerEvaluator::always_zero(n_ext, loops) &&
      !SchwingerEvaluator::supported(n_ext, loops))
    throw std::runtime_error("flow depth not supported: n=" + std::to_string(n_ext) +
                             ", l=" + std::to_string(loops));
  // The two-point function is probed at vanishing momentum, which is
  // exceptional by construction; the restriction only bites at n >= 4.
  if (n_ext >= 4 && is_exceptional(cfg, default_exceptional_tol(cfg)))
    throw std::invalid_argument("probe requires a nonexceptional configuration");

  std::sort(lambdas.begin(), lambdas.end(), std::greater<double>());
  std::sort(lambda0s.begin(), lambda0s.end());
  if (lambdas.front() > lambda0s.front())
    throw std::invalid_argument("every probe scale must stay below every UV scale");
  if (mu > lambda0s.front())
    throw std::invalid_argument("renormalization point must not exceed the UV scales");

  ProbeReport rep;
  rep.n_ext = n_ext;
  rep.loops = loops;
  rep.lambdas = lambdas;
  rep.lambda0s = lambda0s;

  for (double l0 : lambda0s) {
    const Scales scales(lambdas.front(), l0, mu);
    CountertermSeries ct(g0);
    if (loops >= 1) ct = fix_counterterms(1, scales, ct, opt);
    SchwingerEvaluator ev(scales, ct, opt);
    std::vector<double> row;
    row.reserve(lambdas.size());
    for (double lam : lambdas) row.push_back(ev.evaluate_at(n_ext, loops, lam, cfg));
    rep.ir_values.push_back(row.back());
    rep.values.push_back(std::move(row));
  }
  for (std::size_t i = 1; i < rep.ir_values.size(); ++i)
    rep.uv_increments.push_back(std::abs(rep.ir_values[i] - rep.ir_values[i - 1]));

  // Convergent data shows shrinking increments in both directions; flag a
  // tail that grows instead.  Increments below the quadrature noise floor
  // carry no signal, so they never count as growth.
  double scale_floor = 0.0;
  for (const auto& row : rep.values)
    for (double v : row) scale_floor = std::max(scale_floor, std::abs(v));
  scale_floor *= 1e4 * opt.lambda_quad.rel_tol;
  for (const auto& row : rep.values) {
    if (row.size() < 3) continue;
    const double first = std::abs(row[1] - row[0]);
    const double last = std::abs(row[row.size() - 1] - row[row.size() - 2]);
    if (last > 1.05 * first + scale_floor) rep.flagged_divergent = true;
  }
  if (rep.uv_increments.size() >= 2 &&
      rep.uv_increments.back() > 1.05 * rep.uv_increments.front() + scale_floor)
    rep.flagged_divergent = true;
  return rep;
}

}  // namespace flowbound
