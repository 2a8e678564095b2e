#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowbound/bound.hpp"
#include "flowbound/covariance.hpp"
#include "flowbound/flow.hpp"
#include "flowbound/io.hpp"
#include "flowbound/kinematics.hpp"
#include "flowbound/trees.hpp"

namespace fb = flowbound;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

std::string out_path(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  return dir + "/" + name;
}

void write_manifest(const std::string& dir, const std::string& command, const json& config,
                    std::uint64_t seed) {
  fb::io::save_json(out_path(dir, "manifest.json"), fb::io::make_manifest(command, config, seed));
}

template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  const int n_workers = std::min<std::size_t>(jobs, count);
  workers.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w)
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

// trees enum
int run_trees_enum(int n, int r, bool cardinality, const std::string& out) {
  if (n % 2 != 0)
    std::cerr << "warning: odd number of external lines, class is empty by parity\n";
  const fb::TreeClassParams params{n, r};
  const auto policy = cardinality ? fb::MatchPolicy::cardinality : fb::MatchPolicy::incidence;
  const auto trees = fb::enumerate_class(params, policy);
  const auto shape_table = fb::shapes(trees);

  json jtrees = json::array();
  for (const auto& t : trees) jtrees.push_back(fb::io::tree_to_json(t));
  json doc{{"n_ext", n}, {"r", r}, {"count", trees.size()}, {"shape_count", shape_table.size()},
           {"trees", jtrees}};
  fb::io::save_json(out_path(out, "trees.json"), doc);

  std::ofstream csv(out_path(out, "shapes.csv"));
  csv << "signature,orbit_size,representative\n";
  for (const auto& s : shape_table)
    csv << '"' << s.signature << "\"," << s.orbit_size << ",\""
        << fb::io::tree_to_json(s.representative).dump() << "\"\n";

  json config{{"n", n}, {"r", r}, {"match", cardinality ? "cardinality" : "incidence"}};
  write_manifest(out, "trees enum", config, 0);
  std::cout << trees.size() << " trees, " << shape_table.size() << " shapes\n";
  return 0;
}

// trees check: nestedness along R and saturation at 3N-2
int run_trees_check(int n, int r_max, const std::string& out) {
  const int r_sat = fb::TreeClassParams::saturation_threshold(n);
  std::vector<std::size_t> counts;
  const fb::WeightedTree* prev = nullptr;
  std::size_t prev_count = 0;
  bool nested = true;
  for (int r = 0; r <= r_max; ++r) {
    const auto& cur = fb::class_trees({n, r});
    if (r > 0 && !std::includes(cur.begin(), cur.end(), prev, prev + prev_count))
      nested = false;
    counts.push_back(cur.size());
    prev = cur.data();
    prev_count = cur.size();
  }
  bool saturated = true;
  if (r_max >= r_sat) {
    for (int r = r_sat; r <= r_max; ++r)
      if (counts[r] != counts[r_sat]) saturated = false;
  }
  const bool pass = nested && saturated;

  json doc{{"n_ext", n},
           {"r_max", r_max},
           {"counts", counts},
           {"nested", nested},
           {"saturation_threshold", r_sat},
           {"saturated_in_range", saturated},
           {"pass", pass}};
  fb::io::save_json(out_path(out, "trees-check.json"), doc);
  write_manifest(out, "trees check", json{{"n", n}, {"r_max", r_max}}, 0);
  std::cout << (pass ? "pass" : "FAIL") << ": nested=" << nested;
  if (r_max >= r_sat)
    std::cout << ", saturation confirmed at R = " << r_sat << " (count " << counts[r_sat] << ")";
  std::cout << '\n';
  return pass ? 0 : 1;
}

// bound eval
int run_bound_eval(int n, int l, double lambda, double lambda0, double mu,
                   const std::string& momenta, const std::string& out) {
  const auto cfg = fb::io::momentum_config_from_json(fb::io::load_json(momenta));
  if (cfg.n_ext() != n) throw std::runtime_error("momentum file does not match --n");
  const fb::Scales scales(lambda, lambda0, mu);
  const fb::TreeClassParams params{n, 2 * l};
  const auto bs = fb::tree_sum(params, cfg, scales);
  json doc{{"n_ext", n},
           {"loops", l},
           {"r", 2 * l},
           {"tree_count", fb::class_trees(params).size()},
           {"tree_sum", bs.tree_sum},
           {"log_arg_momentum", bs.log_arg_momentum},
           {"log_arg_scale", bs.log_arg_scale},
           {"eta", fb::dynamical_ir_cutoff(cfg)},
           {"kappa", fb::effective_ir_scale(cfg, scales)}};
  fb::io::save_json(out_path(out, "bound.json"), doc);
  json config{{"n", n}, {"l", l}, {"lambda", lambda}, {"lambda0", lambda0},
              {"mu", mu}, {"momenta", momenta}};
  write_manifest(out, "bound eval", config, 0);
  std::cout << "tree_sum " << bs.tree_sum << " over " << fb::class_trees(params).size()
            << " trees\n";
  return 0;
}

fb::Momentum4 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    fb::Momentum4 v(g(rng), g(rng), g(rng), g(rng));
    const double n = v.norm();
    if (n > 1e-12) return v * (1.0 / n);
  }
}

// bound check, tree-level six-point flavor: random configurations including
// exceptional ones, pass iff ratio <= g0^2 everywhere.
int run_bound_check6(int samples, std::uint64_t seed, double lambda_lo, double lambda_hi,
                     double scale_lo, double scale_hi, double lambda0, double mu, double g0,
                     int jobs, const std::string& out) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<fb::RatioSample> pts;
  pts.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const double lambda = lambda_lo * std::pow(lambda_hi / lambda_lo, uni(rng));
    std::vector<fb::Momentum4> ext;
    for (int e = 0; e < 5; ++e) {
      const double mag = scale_lo * std::pow(scale_hi / scale_lo, uni(rng));
      ext.push_back(random_direction(rng) * mag);
    }
    if (uni(rng) < 0.2) ext[1] = -ext[0];  // force an exceptional partial sum
    pts.push_back(
        {fb::MomentumConfig(6, std::move(ext)), fb::Scales(lambda, lambda0, mu), 0.0});
  }
  parallel_for(pts.size(), jobs, [&](std::size_t i) {
    pts[i].schwinger_abs =
        std::abs(fb::schwinger_tree_direct(6, pts[i].scales, pts[i].cfg, g0));
  });
  const fb::RatioFit fit = fb::ratio_check(pts, 6, 0);
  double max_ratio = 0.0;
  for (const auto& p : fit.points) max_ratio = std::max(max_ratio, p.ratio);
  const double limit = g0 * g0;
  const bool pass = max_ratio <= limit * (1.0 + 1e-12);

  std::ofstream csv(out_path(out, "ratio.csv"));
  fit.write_csv(csv);
  json doc{{"n_ext", 6},      {"loops", 0},   {"samples", samples},
           {"max_ratio", max_ratio}, {"limit", limit}, {"max_residual", fit.max_residual},
           {"coefficients", fit.coefficients}, {"pass", pass}};
  fb::io::save_json(out_path(out, "bound-check.json"), doc);
  json config{{"n", 6}, {"l", 0}, {"samples", samples}, {"seed", seed},
              {"lambda_lo", lambda_lo}, {"lambda_hi", lambda_hi}, {"scale_lo", scale_lo},
              {"scale_hi", scale_hi}, {"lambda0", lambda0}, {"mu", mu}, {"g0", g0}};
  write_manifest(out, "bound check", config, seed);
  std::cout << (pass ? "pass" : "FAIL") << ": max ratio " << max_ratio << " vs " << limit
            << '\n';
  return pass ? 0 : 1;
}

// bound check, one-loop four-point flavor: deterministic sweep over the
// symmetric configuration scaled through s and the flow scale, NNLS degree-1
// fit of the ratio against the two log arguments.
int run_bound_check4(int s_points, int lambda_points, double s_lo, double s_hi, double lambda_lo,
                     double lambda_hi, double lambda0, double mu, double g0, int jobs,
                     double residual_limit, const std::string& out) {
  const fb::Scales fix_scales(std::min(mu, lambda0), lambda0, mu);
  fb::CountertermSeries ct = fb::fix_counterterms(1, fix_scales, fb::CountertermSeries(g0));
  fb::SchwingerEvaluator ev(fix_scales, ct);

  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  const fb::Momentum4 d1(inv_sqrt3, inv_sqrt3, inv_sqrt3, 0.0);
  const fb::Momentum4 d2(inv_sqrt3, -inv_sqrt3, -inv_sqrt3, 0.0);
  const fb::Momentum4 d3(-inv_sqrt3, inv_sqrt3, -inv_sqrt3, 0.0);

  std::vector<fb::RatioSample> pts;
  for (int i = 0; i < s_points; ++i) {
    const double s =
        s_points == 1 ? s_lo : s_lo * std::pow(s_hi / s_lo, double(i) / (s_points - 1));
    const double root = std::sqrt(s);
    for (int j = 0; j < lambda_points; ++j) {
      const double lambda =
          lambda_points == 1
              ? lambda_lo
              : lambda_lo * std::pow(lambda_hi / lambda_lo, double(j) / (lambda_points - 1));
      pts.push_back({fb::MomentumConfig(4, {d1 * root, d2 * root, d3 * root}),
                     fb::Scales(lambda, lambda0, mu), 0.0});
    }
  }
  parallel_for(pts.size(), jobs, [&](std::size_t i) {
    pts[i].schwinger_abs = std::abs(ev.evaluate_at(4, 1, pts[i].scales.lambda, pts[i].cfg));
  });
  const fb::RatioFit fit = fb::ratio_check(pts, 4, 1);
  const bool pass = fit.max_residual <= residual_limit;

  std::ofstream csv(out_path(out, "ratio.csv"));
  fit.write_csv(csv);
  json doc{{"n_ext", 4},
           {"loops", 1},
           {"samples", pts.size()},
           {"max_residual", fit.max_residual},
           {"residual_limit", residual_limit},
           {"coefficients", fit.coefficients},
           {"counterterms",
            {{"a1", ct.a_at(1)}, {"b2_1", ct.b2_at(1)}, {"b4_1", ct.b4_at(1)}}},
           {"pass", pass}};
  fb::io::save_json(out_path(out, "bound-check.json"), doc);
  json config{{"n", 4}, {"l", 1}, {"s_points", s_points}, {"lambda_points", lambda_points},
              {"s_lo", s_lo}, {"s_hi", s_hi}, {"lambda_lo", lambda_lo},
              {"lambda_hi", lambda_hi}, {"lambda0", lambda0}, {"mu", mu}, {"g0", g0}};
  write_manifest(out, "bound check", config, 0);
  std::cout << (pass ? "pass" : "FAIL") << ": degree-1 log fit residual " << fit.max_residual
            << " (limit " << residual_limit << ")\n";
  return pass ? 0 : 1;
}

// flow eval
int run_flow_eval(int n, int l, double lambda, double lambda0, double mu, double g0,
                  const std::string& momenta, int mc_samples, bool fix, const std::string& out) {
  const auto cfg = fb::io::momentum_config_from_json(fb::io::load_json(momenta));
  if (cfg.n_ext() != n) throw std::runtime_error("momentum file does not match --n");
  if (n % 2 != 0)
    std::cerr << "warning: odd number of external lines, value is exactly 0\n";

  const fb::Scales scales(lambda, lambda0, mu);
  fb::EvaluatorOptions opt;
  if (mc_samples > 0) opt.mc_samples = mc_samples;
  fb::CountertermSeries ct(g0);
  if (fix && l >= 1) ct = fb::fix_counterterms(1, scales, ct, opt);
  fb::SchwingerEvaluator ev(scales, ct, opt);

  std::string cache_file;
  if (const char* dir = std::getenv("FLOWBOUND_CACHE_DIR")) {
    cache_file = std::string(dir) + "/flow-cache.bin";
    ev.load_cache(cache_file);
  }

  const double value = ev.evaluate(n, l, cfg);
  fb::FlowRHS rhs;
  if (!fb::SchwingerEvaluator::always_zero(n, l)) rhs = ev.flow_rhs(n, l, lambda, cfg);

  if (!cache_file.empty()) ev.save_cache(cache_file);

  json orders = json::array();
  for (int k = 0; k <= ct.max_order(); ++k)
    orders.push_back({{"a", ct.a_at(k)}, {"b2", ct.b2_at(k)}, {"b4", ct.b4_at(k)}});
  json doc{{"n_ext", n},
           {"loops", l},
           {"lambda", lambda},
           {"value", value},
           {"linear_part", rhs.linear},
           {"bilinear_part", rhs.bilinear},
           {"quadrature_error", rhs.linear_error},
           {"counterterms", {{"g0", ct.g0()}, {"orders", orders}}}};
  fb::io::save_json(out_path(out, "flow.json"), doc);
  json config{{"n", n}, {"l", l}, {"lambda", lambda}, {"lambda0", lambda0}, {"mu", mu},
              {"g0", g0}, {"momenta", momenta}, {"mc_samples", opt.mc_samples},
              {"fix", fix}};
  write_manifest(out, "flow eval", config, opt.seed);
  std::cout << "value " << value << " (rhs linear " << rhs.linear << ", bilinear "
            << rhs.bilinear << ")\n";
  return 0;
}

// flow probe
int run_flow_probe(int n, int l, std::vector<double> lambdas, std::vector<double> lambda0s,
                   double mu, double g0, const std::string& momenta, int mc_samples,
                   const std::string& out) {
  const auto cfg = fb::io::momentum_config_from_json(fb::io::load_json(momenta));
  fb::EvaluatorOptions opt;
  if (mc_samples > 0) opt.mc_samples = mc_samples;
  const fb::ProbeReport rep = fb::uv_ir_probe(n, l, cfg, lambdas, lambda0s, g0, mu, opt);

  json doc{{"n_ext", rep.n_ext},
           {"loops", rep.loops},
           {"lambdas", rep.lambdas},
           {"lambda0s", rep.lambda0s},
           {"values", rep.values},
           {"ir_values", rep.ir_values},
           {"uv_increments", rep.uv_increments},
           {"flagged_divergent", rep.flagged_divergent}};
  fb::io::save_json(out_path(out, "probe.json"), doc);
  json config{{"n", n}, {"l", l}, {"lambdas", lambdas}, {"lambda0s", lambda0s},
              {"mu", mu}, {"g0", g0}, {"momenta", momenta}};
  write_manifest(out, "flow probe", config, opt.seed);
  std::cout << (rep.flagged_divergent ? "FAIL: increments grow" : "pass: limits look Cauchy")
            << '\n';
  return rep.flagged_divergent ? 1 : 0;
}

// cov eval
int run_cov_eval(double p_norm, double lambda, double lambda0, const std::string& out) {
  const fb::Scales scales(lambda, lambda0, lambda);
  const fb::FlowingCovariance cov(scales);
  const double q2 = p_norm * p_norm;
  json doc{{"p_norm", p_norm},
           {"lambda", lambda},
           {"lambda0", lambda0},
           {"value", cov.value_q2(q2)},
           {"lambda_derivative", cov.lambda_derivative_q2(q2)}};
  fb::io::save_json(out_path(out, "cov.json"), doc);
  write_manifest(out, "cov eval",
                 json{{"p", p_norm}, {"lambda", lambda}, {"lambda0", lambda0}}, 0);
  std::cout << "C " << doc["value"].get<double>() << ", dC/dlambda "
            << doc["lambda_derivative"].get<double>() << '\n';
  return 0;
}

// cov loop-lemma: single-point mode when --theta is given, sweep otherwise
int run_loop_lemma_point(double theta, double k_norm, double lambda, double lambda0,
                         const std::string& out) {
  const fb::Scales scales(lambda, lambda0, lambda);
  const auto r = fb::regulated_loop_integral(
      {{fb::Momentum4(k_norm, 0.0, 0.0, 0.0), theta}}, scales);
  const double rhs_without_c = lambda * std::pow(std::max(lambda, k_norm), -theta);
  const double ratio = r.value / rhs_without_c;
  json doc{{"theta", theta},     {"k", k_norm},      {"lambda", lambda},
           {"lhs", r.value},     {"rhs_without_c", rhs_without_c},
           {"ratio", ratio},     {"quadrature_error", r.error}};
  bool pass = true;
  if (theta == 2.0 && k_norm == 0.0) {
    const double reference = 2.0 * kPi * kPi * (1.0 - std::exp(-1.0));
    doc["reference"] = reference;
    pass = std::abs(ratio - reference) <= 1e-4 * reference;
    doc["within_tol"] = pass;
  }
  fb::io::save_json(out_path(out, "loop-lemma.json"), doc);
  write_manifest(out, "cov loop-lemma",
                 json{{"theta", theta}, {"k", k_norm}, {"lambda", lambda}}, 0);
  std::cout << (pass ? "pass" : "FAIL") << ": ratio " << ratio << '\n';
  return pass ? 0 : 1;
}

int run_loop_lemma_sweep(int samples, std::uint64_t seed, const std::string& out) {
  const std::vector<std::vector<double>> menus{{1.0}, {2.0}, {1.0, 1.0}, {2.0, 1.0}, {2.0, 2.0}};
  std::vector<fb::Scales> grid;
  for (double lam : {1e-2, 1e-1, 1.0, 1e1, 1e2}) grid.emplace_back(lam, 1e4, 1.0);
  // The stability verdict tolerates 5% drift, so cheap integrals suffice.
  const fb::QuadratureSpec loose{1e-4, 0.0, 4000};
  const fb::LoopBoundReport rep = fb::verify_loop_bound(samples, menus, grid, seed, loose);

  std::ofstream csv(out_path(out, "loop-lemma.csv"));
  rep.write_csv(csv);
  json jm = json::array();
  for (const auto& m : rep.menus)
    jm.push_back({{"thetas", m.thetas},
                  {"sup_at_half", m.sup_at_half},
                  {"sup_at_full", m.sup_at_full},
                  {"stable", m.stable}});
  json doc{{"samples", samples},
           {"stability_threshold", rep.stability_threshold},
           {"menus", jm},
           {"all_stable", rep.all_stable}};
  fb::io::save_json(out_path(out, "loop-lemma.json"), doc);
  write_manifest(out, "cov loop-lemma", json{{"samples", samples}, {"seed", seed}}, seed);
  std::cout << (rep.all_stable ? "pass" : "FAIL") << ": supremum stability over " << samples
            << " doubled samples\n";
  return rep.all_stable ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perturbative flow equations, weighted tree classes, uniform bound checks"};
  app.require_subcommand(1);

  std::string out_dir = ".";
  app.add_option("--out", out_dir, "output directory (must exist)")->capture_default_str();

  // trees
  auto* trees = app.add_subcommand("trees", "weighted tree classes");
  trees->require_subcommand(1);
  int t_n = 6, t_r = 0, t_rmax = 10;
  bool t_cardinality = false;
  auto* trees_enum = trees->add_subcommand("enum", "enumerate a class");
  trees_enum->add_option("--n", t_n, "external lines")->required();
  trees_enum->add_option("--r", t_r, "coordination-3 budget")->required();
  trees_enum->add_flag("--match-cardinality", t_cardinality,
                       "relax condition d to a cardinality comparison");
  auto* trees_check = trees->add_subcommand("check", "nestedness and saturation");
  trees_check->add_option("--n", t_n, "external lines")->required();
  trees_check->add_option("--r-max", t_rmax, "largest budget to scan")->required();

  // bound
  auto* bound = app.add_subcommand("bound", "uniform momentum bound");
  bound->require_subcommand(1);
  int b_n = 6, b_l = 0, b_samples = 500, b_jobs = 1, b_spoints = 9, b_lpoints = 5;
  std::uint64_t b_seed = 1;
  double b_lambda = 1.0, b_lambda0 = 100.0, b_mu = 1.0, b_g0 = 1.0;
  double b_lambda_lo = 1e-3, b_lambda_hi = 1.0, b_scale_lo = 1e-2, b_scale_hi = 1e2;
  double b_s_lo = 10.0, b_s_hi = 1e4, b_residual = 0.05;
  std::string b_momenta;
  auto* bound_eval = bound->add_subcommand("eval", "tree sum and log arguments");
  bound_eval->add_option("--n", b_n)->required();
  bound_eval->add_option("--l", b_l)->required();
  bound_eval->add_option("--lambda", b_lambda)->required();
  bound_eval->add_option("--lambda0", b_lambda0)->required();
  bound_eval->add_option("--mu", b_mu)->capture_default_str();
  bound_eval->add_option("--momenta", b_momenta, "momentum config JSON")->required();
  auto* bound_check = bound->add_subcommand("check", "ratio sweep against the bound");
  bound_check->add_option("--n", b_n, "6 (tree level) or 4 (one loop)")->required();
  bound_check->add_option("--l", b_l)->required();
  bound_check->add_option("--samples", b_samples)->capture_default_str();
  bound_check->add_option("--seed", b_seed)->capture_default_str();
  bound_check->add_option("--lambda-lo", b_lambda_lo)->capture_default_str();
  bound_check->add_option("--lambda-hi", b_lambda_hi)->capture_default_str();
  bound_check->add_option("--scale-lo", b_scale_lo)->capture_default_str();
  bound_check->add_option("--scale-hi", b_scale_hi)->capture_default_str();
  bound_check->add_option("--s-lo", b_s_lo)->capture_default_str();
  bound_check->add_option("--s-hi", b_s_hi)->capture_default_str();
  bound_check->add_option("--s-points", b_spoints)->capture_default_str();
  bound_check->add_option("--lambda-points", b_lpoints)->capture_default_str();
  bound_check->add_option("--lambda0", b_lambda0)->capture_default_str();
  bound_check->add_option("--mu", b_mu)->capture_default_str();
  bound_check->add_option("--g0", b_g0)->capture_default_str();
  bound_check->add_option("--residual-limit", b_residual)->capture_default_str();
  bound_check->add_option("--jobs", b_jobs, "worker threads for the sweep")
      ->capture_default_str();

  // flow
  auto* flow = app.add_subcommand("flow", "perturbative flow evaluation");
  flow->require_subcommand(1);
  int f_n = 4, f_l = 0, f_mc = 0;
  double f_lambda = 0.01, f_lambda0 = 100.0, f_mu = 1.0, f_g0 = 1.0;
  bool f_fix = false;
  std::string f_momenta;
  std::vector<double> f_lambdas, f_lambda0s;
  auto* flow_eval = flow->add_subcommand("eval", "one Schwinger coefficient");
  flow_eval->add_option("--n", f_n)->required();
  flow_eval->add_option("--l", f_l)->required();
  flow_eval->add_option("--lambda", f_lambda)->required();
  flow_eval->add_option("--lambda0", f_lambda0)->required();
  flow_eval->add_option("--mu", f_mu)->capture_default_str();
  flow_eval->add_option("--g0", f_g0)->capture_default_str();
  flow_eval->add_option("--momenta", f_momenta, "momentum config JSON")->required();
  flow_eval->add_option("--mc-samples", f_mc, "Monte Carlo samples for property-only depths");
  flow_eval->add_flag("--fix", f_fix, "fix order-1 counterterms before evaluating");
  auto* flow_probe = flow->add_subcommand("probe", "UV and IR limit increments");
  flow_probe->add_option("--n", f_n)->required();
  flow_probe->add_option("--l", f_l)->required();
  flow_probe->add_option("--lambdas", f_lambdas, "IR scan scales")
      ->required()
      ->delimiter(',');
  flow_probe->add_option("--lambda0s", f_lambda0s, "UV scan scales")
      ->required()
      ->delimiter(',');
  flow_probe->add_option("--mu", f_mu)->capture_default_str();
  flow_probe->add_option("--g0", f_g0)->capture_default_str();
  flow_probe->add_option("--momenta", f_momenta)->required();
  flow_probe->add_option("--mc-samples", f_mc);

  // cov
  auto* cov = app.add_subcommand("cov", "flowing covariance");
  cov->require_subcommand(1);
  double c_p = 0.0, c_lambda = 1.0, c_lambda0 = 1e8, c_theta = -1.0, c_k = 0.0;
  int c_samples = 200;
  std::uint64_t c_seed = 7;
  auto* cov_eval = cov->add_subcommand("eval", "value and scale derivative");
  cov_eval->add_option("--p", c_p, "momentum norm")->required();
  cov_eval->add_option("--lambda", c_lambda)->required();
  cov_eval->add_option("--lambda0", c_lambda0)->capture_default_str();
  auto* cov_lemma = cov->add_subcommand("loop-lemma", "regulated loop integral bound");
  cov_lemma->add_option("--theta", c_theta, "single-point mode: weight exponent");
  cov_lemma->add_option("--k", c_k, "single-point mode: source norm")->capture_default_str();
  cov_lemma->add_option("--lambda", c_lambda)->capture_default_str();
  cov_lemma->add_option("--lambda0", c_lambda0)->capture_default_str();
  cov_lemma->add_option("--samples", c_samples, "sweep mode: draws per menu")
      ->capture_default_str();
  cov_lemma->add_option("--seed", c_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (trees_enum->parsed()) return run_trees_enum(t_n, t_r, t_cardinality, out_dir);
    if (trees_check->parsed()) return run_trees_check(t_n, t_rmax, out_dir);
    if (bound_eval->parsed())
      return run_bound_eval(b_n, b_l, b_lambda, b_lambda0, b_mu, b_momenta, out_dir);
    if (bound_check->parsed()) {
      if (b_n == 6 && b_l == 0)
        return run_bound_check6(b_samples, b_seed, b_lambda_lo, b_lambda_hi, b_scale_lo,
                                b_scale_hi, b_lambda0, b_mu, b_g0, b_jobs, out_dir);
      if (b_n == 4 && b_l == 1)
        return run_bound_check4(b_spoints, b_lpoints, b_s_lo, b_s_hi, b_lambda_lo, b_lambda_hi,
                                b_lambda0, b_mu, b_g0, b_jobs, b_residual, out_dir);
      throw std::runtime_error("bound check supports (n,l) = (6,0) or (4,1)");
    }
    if (flow_eval->parsed())
      return run_flow_eval(f_n, f_l, f_lambda, f_lambda0, f_mu, f_g0, f_momenta, f_mc, f_fix,
                           out_dir);
    if (flow_probe->parsed())
      return run_flow_probe(f_n, f_l, f_lambdas, f_lambda0s, f_mu, f_g0, f_momenta, f_mc,
                            out_dir);
    if (cov_eval->parsed()) return run_cov_eval(c_p, c_lambda, c_lambda0, out_dir);
    if (cov_lemma->parsed()) {
      if (c_theta >= 0.0)
        return run_loop_lemma_point(c_theta, c_k, c_lambda, c_lambda0, out_dir);
      return run_loop_lemma_sweep(c_samples, c_seed, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
