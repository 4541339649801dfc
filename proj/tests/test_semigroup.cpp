#include <doctest.h>

#include "feller/errors.hpp"
#include "feller/parallel.hpp"
#include "feller/semigroup.hpp"
#include "feller/transport.hpp"
#include "support.hpp"

using namespace feller;
using feller::test::atoms1d;
using feller::test::pt;

TEST_CASE("exact evolution of the halving IFS") {
  const auto ifs = test::halving_ifs();
  const auto t0 = evolve_exact(ifs, dirac(pt(0)), 0);
  REQUIRE(t0.measures.size() == 1);
  CHECK(tv_distance(t0.measures[0], dirac(pt(0))) == 0.0);

  const auto t = evolve_exact(ifs, dirac(pt(0)), 12);
  REQUIRE(t.measures.size() == 13);
  for (std::size_t k = 0; k <= 12; ++k) {
    CHECK(t.measures[k].size() == (Eigen::Index{1} << k));
    // dyadic left endpoints j 2^-k: mean (1 - 2^-k)/2
    CHECK(mean(t.measures[k])(0) == doctest::Approx(0.5 * (1.0 - std::ldexp(1.0, -static_cast<int>(k)))).epsilon(1e-15));
  }
  CHECK(t.prune_loss.back() == 0.0);

  const DiscreteIFS id({AffineMap::scalar(1.0, 0.0)}, ProbabilityField::constant(Eigen::VectorXd::Ones(1)));
  const auto mu = atoms1d({{0, 0.4}, {3, 0.6}});
  for (const auto& m : evolve_exact(id, mu, 4).measures) CHECK(tv_distance(m, mu) == 0.0);
}

TEST_CASE("exact evolution resource limits") {
  const auto ifs = test::halving_ifs();
  PrunePolicy tight = PrunePolicy::disabled();
  tight.support_cap = 100;
  CHECK_THROWS_AS(evolve_exact(ifs, dirac(pt(0)), 10, tight), ResourceError);

  const DiscreteIFS skew({AffineMap::scalar(0.5, 0.0), AffineMap::scalar(0.5, 0.5)},
                         ProbabilityField::constant(Eigen::Vector2d(1e-7, 1 - 1e-7)));
  PrunePolicy lossy;
  lossy.mass_floor = 1e-6;
  lossy.budget = 1e-9;
  CHECK_THROWS_AS(evolve_exact(skew, dirac(pt(0)), 3, lossy), ResourceError);
  lossy.budget = 1e-5;
  const auto t = evolve_exact(skew, dirac(pt(0)), 3, lossy);
  CHECK(t.prune_loss.back() > 0.0);
  CHECK(t.prune_loss.back() <= 1e-5);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hit(1000, 0);
  parallel_for(hit.size(), 4, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) hit[i] += 1;
  });
  CHECK(std::count(hit.begin(), hit.end(), 1) == 1000);
  CHECK_THROWS_AS(parallel_for(100, 3,
                               [](std::size_t b, std::size_t e) {
                                 if (b <= 77 && 77 < e) throw NumericError("boom");
                               }),
                  NumericError);
}

TEST_CASE("particle evolution is deterministic across thread counts") {
  const MarkovSystem sys = test::halving_ifs();
  ParticleOptions o;
  o.count = 2000;
  o.seed = 42;
  o.record_stride = 5;
  const auto a = evolve_particles(sys, pt(0.0), 12, o);
  o.threads = 4;
  const auto b = evolve_particles(sys, pt(0.0), 12, o);
  REQUIRE(a.measures.size() == b.measures.size());
  CHECK(a.steps == std::vector<std::size_t>{0, 5, 10, 12});
  for (std::size_t k = 0; k < a.measures.size(); ++k) {
    CHECK(a.measures[k].points() == b.measures[k].points());
    CHECK(a.measures[k].weights() == b.measures[k].weights());
  }
  o.seed = 43;
  const auto c = evolve_particles(sys, pt(0.0), 12, o);
  CHECK(tv_distance(a.measures.back(), c.measures.back()) > 0.0);
}

TEST_CASE("particles from a start measure") {
  const MarkovSystem sys = test::halving_ifs();
  ParticleOptions o;
  o.count = 20000;
  o.seed = 9;
  const auto mu = atoms1d({{0, 0.5}, {1, 0.5}});
  const auto t = evolve_particles(sys, mu, 0, o);
  CHECK(mean(t.measures[0])(0) == doctest::Approx(0.5).epsilon(3 * mc_tolerance(o.count)));
}

TEST_CASE("Cesaro average of a trace") {
  const auto ifs = test::halving_ifs();
  const auto t = evolve_exact(ifs, dirac(pt(0)), 3);
  const auto q1 = cesaro_average(t, 1);
  CHECK(tv_distance(q1, t.measures[1]) == 0.0);
  const auto q3 = cesaro_average(t, 3);
  // (1/3)(mean_1 + mean_2 + mean_3) with mean_k = (1 - 2^-k)/2
  CHECK(mean(q3)(0) == doctest::Approx((0.25 + 0.375 + 0.4375) / 3.0));
  CHECK_THROWS_AS(cesaro_average(t, 4), InputError);
  CHECK_THROWS_AS(cesaro_average(t, 0), InputError);
}
