#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "flowbound/bound.hpp"
#include "flowbound/kinematics.hpp"
#include "flowbound/trees.hpp"

namespace fb = flowbound;

namespace {

fb::MomentumConfig star4(double s) {
  return fb::MomentumConfig(4, {fb::Momentum4(s, 0, 0, 0), fb::Momentum4(0, s, 0, 0),
                                fb::Momentum4(0, 0, s, 0)});
}

}  // namespace

TEST_CASE("four point class reduces to the empty product") {
  const auto bs = fb::tree_sum({4, 0}, star4(2.0), fb::Scales(1.0, 10.0, 1.0));
  CHECK(bs.tree_sum == 1.0);
  REQUIRE(bs.per_tree_factor.size() == 1);
  CHECK(bs.per_tree_factor[0] == 1.0);
}

TEST_CASE("six point tree sum at the pinned back to back configuration") {
  // Three legs at +e, two at -e; the dependent one lands at -e.  Nine of the
  // ten splits carry unit momentum, the {1,2,3} split carries norm 3, so the
  // weight-two factors sum to 9 + 1/9.
  const fb::Momentum4 e(1, 0, 0, 0);
  const fb::MomentumConfig cfg(6, {e, e, e, -e, -e});
  const auto bs = fb::tree_sum({6, 0}, cfg, fb::Scales(1.0, 100.0, 1.0));
  CHECK(bs.tree_sum == doctest::Approx(82.0 / 9.0).epsilon(1e-14));
  REQUIRE(bs.per_tree_factor.size() == 10);
  int ninths = 0, units = 0;
  for (double f : bs.per_tree_factor) {
    if (f == doctest::Approx(1.0 / 9.0).epsilon(1e-14)) ++ninths;
    if (f == 1.0) ++units;
  }
  CHECK(ninths == 1);
  CHECK(units == 9);

  // The configuration is exceptional (p1 + p4 = 0), so kappa collapses to
  // lambda and both logarithm arguments vanish.
  CHECK(fb::dynamical_ir_cutoff(cfg) == 0.0);
  CHECK(bs.log_arg_momentum == 0.0);
  CHECK(bs.log_arg_scale == 0.0);
}

TEST_CASE("logarithm arguments follow the kinematic definitions") {
  const fb::MomentumConfig cfg(4, {fb::Momentum4(4, 0, 0, 0), fb::Momentum4(0, 3, 0, 0),
                                   fb::Momentum4(0, 0, 2, 0)});
  const fb::Scales sc(2.0, 50.0, 1.0);
  const auto bs = fb::tree_sum({4, 0}, cfg, sc);
  // eta = 2 from the shortest leg, kappa = sup(2, inf(2, 1)) = 2, and the
  // largest independent momentum has norm 4.
  CHECK(fb::effective_ir_scale(cfg, sc) == 2.0);
  CHECK(bs.log_arg_momentum == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(bs.log_arg_scale == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(bs.log_arg_momentum ==
        doctest::Approx(fb::log_plus(fb::max_momentum_norm(cfg, sc.mu) /
                                     fb::effective_ir_scale(cfg, sc)))
            .epsilon(1e-15));
  CHECK(bs.log_arg_scale == doctest::Approx(fb::log_plus(sc.lambda / sc.mu)).epsilon(1e-15));
}

TEST_CASE("deep infrared scale turns every factor into the same power") {
  // With lambda above every line momentum the regulated norms all clamp to
  // lambda, and each tree contributes lambda^(-2); the sum counts the class.
  const fb::Momentum4 e(1, 0, 0, 0);
  const fb::MomentumConfig cfg(6, {e, fb::Momentum4(0, 1, 0, 0), fb::Momentum4(0, 0, 1, 0),
                                   fb::Momentum4(0, 0, 0, 1), fb::Momentum4(0.5, 0.5, 0, 0)});
  const double lambda = 100.0;
  const auto r0 = fb::tree_sum({6, 0}, cfg, fb::Scales(lambda, 1e4, 1.0));
  CHECK(r0.tree_sum == doctest::Approx(10.0 / (lambda * lambda)).epsilon(1e-13));
  const auto r2 = fb::tree_sum({6, 2}, cfg, fb::Scales(lambda, 1e4, 1.0));
  CHECK(r2.per_tree_factor.size() == 115);
  CHECK(r2.tree_sum == doctest::Approx(115.0 / (lambda * lambda)).epsilon(1e-13));
}

TEST_CASE("per tree factors replay line by line") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> uni(-1.5, 1.5);
  std::vector<fb::Momentum4> ext;
  for (int i = 0; i < 5; ++i) ext.push_back({uni(rng), uni(rng), uni(rng), uni(rng)});
  const fb::MomentumConfig cfg(6, ext);
  const fb::Scales sc(0.7, 1e3, 1.0);

  const auto& trees = fb::class_trees({6, 2});
  const auto bs = fb::tree_sum({6, 2}, cfg, sc);
  REQUIRE(bs.per_tree_factor.size() == trees.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    double factor = 1.0;
    for (const auto& split : trees[i].splits) {
      const double kn = fb::line_momentum(trees[i], split.side, cfg).norm();
      factor *= std::pow(std::max(sc.lambda, kn), -double(split.rho));
    }
    CHECK(bs.per_tree_factor[i] == doctest::Approx(factor).epsilon(1e-14));
    sum += factor;
  }
  CHECK(bs.tree_sum == doctest::Approx(sum).epsilon(1e-13));
}

TEST_CASE("tree sum rejects a leg count mismatch") {
  CHECK_THROWS_AS((void)fb::tree_sum({6, 0}, star4(1.0), fb::Scales(1.0, 10.0, 1.0)),
                  std::invalid_argument);
}

TEST_CASE("empty class accepts zeros and rejects anything else") {
  // Five external legs at zero loops has no trees at all by parity.
  const fb::MomentumConfig cfg(5, {fb::Momentum4(1, 0, 0, 0), fb::Momentum4(0, 1, 0, 0),
                                   fb::Momentum4(0, 0, 1, 0), fb::Momentum4(0, 0, 0, 1)});
  const fb::Scales sc(1.0, 10.0, 1.0);
  CHECK(fb::class_trees({5, 0}).empty());

  std::vector<fb::RatioSample> zeros{{cfg, sc, 0.0}, {cfg, sc, 0.0}};
  const auto fit = fb::ratio_check(zeros, 5, 0);
  REQUIRE(fit.points.size() == 2);
  for (const auto& pt : fit.points) {
    CHECK(pt.tree_sum == 0.0);
    CHECK(pt.ratio == 0.0);
  }
  CHECK(fit.max_residual == 0.0);

  std::vector<fb::RatioSample> bad{{cfg, sc, 1e-3}};
  CHECK_THROWS_AS((void)fb::ratio_check(bad, 5, 0), std::domain_error);
}

TEST_CASE("ratio check validates its sample set") {
  const fb::Scales sc(1.0, 10.0, 1.0);
  CHECK_THROWS_AS((void)fb::ratio_check({}, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)fb::ratio_check({{star4(1.0), sc, 0.5}}, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)fb::ratio_check({{star4(1.0), sc, 0.5}}, 4, -1), std::invalid_argument);
  CHECK_THROWS_AS((void)fb::ratio_check({{star4(1.0), sc, 0.5}}, 6, 0), std::invalid_argument);
  std::vector<fb::RatioSample> mixed{{star4(1.0), fb::Scales(1.0, 10.0, 1.0), 0.5},
                                     {star4(2.0), fb::Scales(1.0, 10.0, 2.0), 0.5}};
  CHECK_THROWS_AS((void)fb::ratio_check(mixed, 4, 0), std::invalid_argument);
}

TEST_CASE("constant ratios are fitted exactly") {
  const double c = 0.37;
  std::vector<fb::RatioSample> samples;
  for (double s : {1.0, std::exp(1.0), std::exp(2.0), std::exp(3.0)})
    for (double lambda : {1.0, std::exp(1.0)}) {
      const fb::Scales sc(lambda, 1e3, 1.0);
      const auto bs = fb::tree_sum({4, 2}, star4(s), sc);
      samples.push_back({star4(s), sc, c * bs.tree_sum});
    }
  const auto fit = fb::ratio_check(samples, 4, 1);
  REQUIRE(fit.coefficients.size() == 3);
  CHECK(fit.max_residual <= 1e-10);
  for (const auto& pt : fit.points) {
    CHECK(pt.ratio == doctest::Approx(c).epsilon(1e-13));
    CHECK(pt.fit == doctest::Approx(c).epsilon(1e-9));
  }
}

TEST_CASE("convex data leaves a positive one sided residual") {
  // Quadratic growth in the momentum logarithm cannot hide under an affine
  // fit; the excess must show up, and only for points above the fit.
  std::vector<fb::RatioSample> samples;
  for (double x : {1.0, 1.5, 2.0, 2.5, 3.0}) {
    const fb::MomentumConfig cfg = star4(std::exp(x));
    const fb::Scales sc(1.0, 1e3, 1.0);
    const auto bs = fb::tree_sum({4, 2}, cfg, sc);
    CHECK(bs.log_arg_momentum == doctest::Approx(x).epsilon(1e-12));
    samples.push_back({cfg, sc, (1.0 + x * x) * bs.tree_sum});
  }
  const auto fit = fb::ratio_check(samples, 4, 1);
  CHECK(fit.max_residual > 0.01);
  double recomputed = 0.0;
  for (const auto& pt : fit.points) {
    if (pt.ratio > pt.fit) recomputed = std::max(recomputed, (pt.ratio - pt.fit) / pt.fit);
  }
  CHECK(fit.max_residual == doctest::Approx(recomputed).epsilon(1e-14));
}

TEST_CASE("csv export carries one line per point") {
  std::vector<fb::RatioSample> samples{{star4(2.0), fb::Scales(1.0, 10.0, 1.0), 0.5},
                                       {star4(3.0), fb::Scales(1.0, 10.0, 1.0), 0.6}};
  const auto fit = fb::ratio_check(samples, 4, 0);
  std::ostringstream os;
  fit.write_csv(os);
  std::istringstream is(os.str());
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "sample_id,lambda,eta,kappa,log_arg_p,log_arg_lambda,schwinger_abs,tree_sum,ratio,fit");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}
