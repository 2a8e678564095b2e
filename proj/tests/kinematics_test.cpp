#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "flowbound/kinematics.hpp"

namespace fb = flowbound;

namespace {

// Subset-sum minimum recomputed recursively, element by element, as an
// independent cross-check of the bitmask scan in the library.
double subset_min_recursive(const std::vector<fb::Momentum4>& ps, std::size_t i,
                            const fb::Momentum4& partial, bool any) {
  if (i == ps.size())
    return any ? partial.norm() : std::numeric_limits<double>::infinity();
  const double without = subset_min_recursive(ps, i + 1, partial, any);
  const double with = subset_min_recursive(ps, i + 1, partial + ps[i], true);
  return std::min(without, with);
}

}  // namespace

TEST_CASE("momentum arithmetic and norms") {
  const fb::Momentum4 a(1.0, 2.0, -3.0, 0.5);
  const fb::Momentum4 b(0.5, -2.0, 1.0, 1.5);
  CHECK((a + b) == fb::Momentum4(1.5, 0.0, -2.0, 2.0));
  CHECK((a - b) == fb::Momentum4(0.5, 4.0, -4.0, -1.0));
  CHECK((2.0 * a) == fb::Momentum4(2.0, 4.0, -6.0, 1.0));
  CHECK((-a) == fb::Momentum4(-1.0, -2.0, 3.0, -0.5));
  CHECK(a.norm2() == doctest::Approx(14.25).epsilon(1e-15));
  CHECK(dot(a, b) == doctest::Approx(0.5 - 4.0 - 3.0 + 0.75).epsilon(1e-15));
  CHECK(a.finite());
  fb::Momentum4 bad = a;
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(bad.finite());
}

TEST_CASE("scales validate their ordering") {
  CHECK_NOTHROW(fb::Scales(0.1, 10.0, 1.0));
  CHECK_NOTHROW(fb::Scales(10.0, 10.0, 1.0));
  CHECK_THROWS_AS(fb::Scales(11.0, 10.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(fb::Scales(0.0, 10.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(fb::Scales(1.0, 10.0, -1.0), std::domain_error);
  CHECK_THROWS_AS(fb::Scales(1.0, std::numeric_limits<double>::infinity(), 1.0),
                  std::domain_error);
}

TEST_CASE("configuration stores independents and derives the zeroth") {
  const fb::MomentumConfig cfg(4, {fb::Momentum4(1, 0, 0, 0), fb::Momentum4(0, 2, 0, 0),
                                   fb::Momentum4(0, 0, 3, 0)});
  CHECK(cfg.n_ext() == 4);
  CHECK(cfg.p0() == fb::Momentum4(-1, -2, -3, 0));
  const auto all = cfg.all();
  REQUIRE(all.size() == 4);
  CHECK(all[0] == cfg.p0());
  CHECK(all[1] == fb::Momentum4(1, 0, 0, 0));

  CHECK_THROWS_AS(fb::MomentumConfig(1, {}), std::invalid_argument);
  CHECK_THROWS_AS(fb::MomentumConfig(4, {fb::Momentum4(1, 0, 0, 0)}), std::invalid_argument);
}

TEST_CASE("regulated norm takes the larger of scale and length") {
  CHECK(fb::regulated_norm(fb::Momentum4(0, 0, 0, 0), 1.0) == 1.0);
  CHECK(fb::regulated_norm(fb::Momentum4(3, 0, 0, 0), 1.0) == 3.0);
  CHECK(fb::regulated_norm(fb::Momentum4(0.5, 0, 0, 0), 2.0) == 2.0);
}

TEST_CASE("log plus clips below one") {
  CHECK(fb::log_plus(0.5) == 0.0);
  CHECK(fb::log_plus(1.0) == 0.0);
  CHECK(fb::log_plus(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("dynamical ir cutoff on hand configurations") {
  const fb::MomentumConfig ortho(4, {fb::Momentum4(1, 0, 0, 0), fb::Momentum4(0, 1, 0, 0),
                                     fb::Momentum4(0, 0, 1, 0)});
  CHECK(fb::dynamical_ir_cutoff(ortho) == doctest::Approx(1.0).epsilon(1e-15));

  const fb::MomentumConfig cancel(4, {fb::Momentum4(1, 0, 0, 0), fb::Momentum4(-1, 0, 0, 0),
                                      fb::Momentum4(0, 2, 0, 0)});
  CHECK(fb::dynamical_ir_cutoff(cancel) == 0.0);
}

TEST_CASE("dynamical ir cutoff equals the recursive subset minimum") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int it = 0; it < 50; ++it) {
    const int n_ext = 2 + static_cast<int>(rng() % 5u);
    std::vector<fb::Momentum4> ps;
    for (int e = 0; e + 1 < n_ext; ++e) ps.push_back({g(rng), g(rng), g(rng), g(rng)});
    const fb::MomentumConfig cfg(n_ext, ps);
    const double oracle = subset_min_recursive(ps, 0, {}, false);
    CHECK(fb::dynamical_ir_cutoff(cfg) == doctest::Approx(oracle).epsilon(1e-13));
  }
}

TEST_CASE("exceptional configurations") {
  const fb::MomentumConfig back_to_back(3, {fb::Momentum4(1, 0, 0, 0),
                                            fb::Momentum4(-1, 0, 0, 0)});
  CHECK(fb::is_exceptional(back_to_back, 0.0));

  const fb::MomentumConfig ortho(4, {fb::Momentum4(1, 0, 0, 0), fb::Momentum4(0, 1, 0, 0),
                                     fb::Momentum4(0, 0, 1, 0)});
  CHECK_FALSE(fb::is_exceptional(ortho, 0.0));

  const fb::MomentumConfig near(3, {fb::Momentum4(1, 0, 0, 0),
                                    fb::Momentum4(-1 + 1e-12, 0, 0, 0)});
  CHECK(fb::is_exceptional(near, 1e-9));
  CHECK(fb::default_exceptional_tol(near) > 0.0);
}

TEST_CASE("effective ir scale clamps between the flow scale and mu") {
  const fb::Scales sc(0.1, 100.0, 1.0);
  const fb::MomentumConfig unit(2, {fb::Momentum4(1, 0, 0, 0)});
  CHECK(fb::effective_ir_scale(unit, sc) == doctest::Approx(1.0).epsilon(1e-15));

  const fb::MomentumConfig exc(3, {fb::Momentum4(1, 0, 0, 0), fb::Momentum4(-1, 0, 0, 0)});
  CHECK(fb::effective_ir_scale(exc, sc) == doctest::Approx(0.1).epsilon(1e-15));

  const fb::MomentumConfig big(2, {fb::Momentum4(5, 0, 0, 0)});
  CHECK(fb::effective_ir_scale(big, sc) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("max momentum norm with a floor") {
  const fb::MomentumConfig two(3, {fb::Momentum4(3, 0, 0, 0), fb::Momentum4(0, 1, 0, 0)});
  CHECK(fb::max_momentum_norm(two, 1.0) == doctest::Approx(3.0).epsilon(1e-15));

  const fb::MomentumConfig zero(3, {fb::Momentum4(0, 0, 0, 0), fb::Momentum4(0, 0, 0, 0)});
  CHECK(fb::max_momentum_norm(zero, 2.0) == 2.0);

  const fb::MomentumConfig small(2, {fb::Momentum4(0.5, 0, 0, 0)});
  CHECK(fb::max_momentum_norm(small, 1.0) == 1.0);

  // Including the derived momentum can raise the supremum.
  const fb::MomentumConfig lop(3, {fb::Momentum4(2, 0, 0, 0), fb::Momentum4(2, 0, 0, 0)});
  CHECK(fb::max_momentum_norm(lop, 1.0, false) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(fb::max_momentum_norm(lop, 1.0, true) == doctest::Approx(4.0).epsilon(1e-15));
}
