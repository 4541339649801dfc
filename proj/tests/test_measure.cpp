#include <doctest.h>

#include "feller/errors.hpp"
#include "feller/geometry.hpp"
#include "feller/measure.hpp"
#include "support.hpp"

using namespace feller;
using feller::test::atoms1d;
using feller::test::pt;

TEST_CASE("metric distances") {
  CHECK(distance(MetricSpec::euclidean(), pt(0, 0), pt(3, 4)) == doctest::Approx(5.0));
  CHECK(distance(MetricSpec::chebyshev(), pt(0, 0), pt(3, 4)) == doctest::Approx(4.0));
  CHECK(distance(MetricSpec::truncated(2.0), pt(0), pt(7)) == 2.0);
  for (auto m : {MetricSpec::euclidean(), MetricSpec::chebyshev(), MetricSpec::truncated(1.5)}) {
    CHECK(distance(m, pt(1.5, -2), pt(1.5, -2)) == 0.0);
  }
  CHECK_THROWS_AS(MetricSpec::truncated(0.0), InputError);
  CHECK_THROWS_AS(distance(MetricSpec::euclidean(), pt(0), pt(0, 0)), InputError);
  CHECK_THROWS_AS(distance(MetricSpec::euclidean(), pt(std::nan("")), pt(0)), InputError);
}

TEST_CASE("metric axioms on random triples") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5, 5);
  for (auto m : {MetricSpec::euclidean(), MetricSpec::chebyshev(), MetricSpec::truncated(2.0)}) {
    for (int i = 0; i < 200; ++i) {
      const Point a = pt(u(rng), u(rng)), b = pt(u(rng), u(rng)), c = pt(u(rng), u(rng));
      CHECK(distance(m, a, b) == distance(m, b, a));
      CHECK(distance(m, a, c) <= distance(m, a, b) + distance(m, b, c) + 1e-12);
    }
  }
}

TEST_CASE("open balls exclude the boundary") {
  const Ball b(pt(0), 1.0);
  const auto e = MetricSpec::euclidean();
  CHECK(in_ball(e, b, pt(0)));
  CHECK_FALSE(in_ball(e, b, pt(1)));
  CHECK(in_ball(e, b, pt(0.999)));
  CHECK_THROWS_AS(Ball(pt(0), 0.0), InputError);
}

TEST_CASE("measure construction is canonical") {
  const FiniteMeasure d = dirac(pt(0));
  CHECK(d.size() == 1);
  CHECK(d.weight(0) == 1.0);

  // unsorted input, a duplicate and a zero weight
  const FiniteMeasure m = atoms1d({{2.0, 0.25}, {1.0, 0.25}, {2.0, 0.5}, {3.0, 0.0}});
  REQUIRE(m.size() == 2);
  CHECK(m.point(0)(0) == 1.0);
  CHECK(m.weight(1) == doctest::Approx(0.75));

  CHECK_THROWS_AS(atoms1d({{0.0, 0.5}, {1.0, 0.4}}), InputError);
  CHECK_THROWS_AS(atoms1d({{0.0, 1.2}, {1.0, -0.2}}), InputError);
  CHECK_THROWS_AS(atoms1d({{std::nan(""), 1.0}}), InputError);
}

TEST_CASE("mixture and pushforward") {
  const FiniteMeasure mu = atoms1d({{0, 0.3}, {1, 0.7}});
  CHECK(tv_distance(mixture({{1.0, mu}}), mu) == 0.0);
  const FiniteMeasure half = mixture({{0.5, dirac(pt(0))}, {0.5, dirac(pt(1))}});
  CHECK(tv_distance(half, atoms1d({{0, 0.5}, {1, 0.5}})) == 0.0);
  CHECK_THROWS_AS(mixture({{0.5, mu}, {0.6, mu}}), InputError);

  const FiniteMeasure h = pushforward(half, [](const Point& x) -> Point { return x / 2; });
  CHECK(tv_distance(h, atoms1d({{0, 0.5}, {0.5, 0.5}})) == 0.0);
  const FiniteMeasure c = pushforward(half, [](const Point&) -> Point { return pt(4); });
  CHECK(tv_distance(c, dirac(pt(4))) == 0.0);
  CHECK(tv_distance(pushforward(mu, [](const Point& x) -> Point { return x; }), mu) == 0.0);
}

TEST_CASE("restriction to a ball") {
  const auto e = MetricSpec::euclidean();
  auto r = restrict_normalize(dirac(pt(2)), Ball(pt(2), 0.1), e);
  CHECK(r.mass == 1.0);
  CHECK(tv_distance(r.conditioned, dirac(pt(2))) == 0.0);

  r = restrict_normalize(atoms1d({{0, 0.5}, {5, 0.5}}), Ball(pt(0), 1.0), e);
  CHECK(r.mass == 0.5);
  CHECK(tv_distance(r.conditioned, dirac(pt(0))) == 0.0);

  r = restrict_normalize(dirac(pt(5)), Ball(pt(0), 1.0), e);
  CHECK(r.mass == 0.0);
  CHECK(r.conditioned.is_empty());
}

TEST_CASE("integration against test functions") {
  const FiniteMeasure mu = atoms1d({{0, 0.25}, {0.5, 0.5}, {3, 0.25}});
  CHECK(integrate(mu, TestFunction::constant(1.0)) == doctest::Approx(1.0));
  // tent at 0 with scale 1: values 1, 0.5, 0
  CHECK(integrate(mu, TestFunction::tent(pt(0), 1.0)) == doctest::Approx(0.5));
  // clamp to [-1, 1]: 0, 0.5, 1
  CHECK(integrate(mu, TestFunction::clipped_coordinate(0, -1, 1)) == doctest::Approx(0.5));
  // 1 - x^2 clipped at 1: 1, 0.75, -1
  CHECK(integrate(mu, TestFunction::clipped_polynomial(0, {1, 0, -1})) == doctest::Approx(0.375));

  CHECK(*TestFunction::tent(pt(0), 0.25).lipschitz() == doctest::Approx(4.0));
  CHECK(*TestFunction::clipped_coordinate(0, -1, 1).lipschitz() == 1.0);
  CHECK_FALSE(TestFunction::clipped_polynomial(0, {0, 0, 1}).lipschitz().has_value());
  CHECK_THROWS_AS(TestFunction::tent(pt(0), 0.0), InputError);
  CHECK_THROWS_AS(TestFunction::clipped_coordinate(0, -2, 1), InputError);
}

TEST_CASE("test functions stay in [-1, 1]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  const std::vector<TestFunction> fs = {TestFunction::tent(pt(0.3), 0.7), TestFunction::clipped_coordinate(0, -1, 1),
                                        TestFunction::clipped_polynomial(0, {0.5, -2, 3}, 0.8),
                                        TestFunction::constant(-1.0)};
  for (int i = 0; i < 500; ++i) {
    const Point x = pt(u(rng));
    for (const auto& f : fs) CHECK(std::abs(f(x)) <= 1.0);
  }
}

TEST_CASE("prune") {
  const auto e = MetricSpec::euclidean();
  const FiniteMeasure mu = atoms1d({{0, 0.2}, {1, 0.3}, {2, 0.5}});
  auto r = prune(mu, 0.0, 0.0, e);
  CHECK(tv_distance(r.measure, mu) == 0.0);
  CHECK(r.dropped_mass == 0.0);

  r = prune(atoms1d({{0, 1 - 1e-13}, {9, 1e-13}}), 1e-12, 0.0, e);
  CHECK(tv_distance(r.measure, dirac(pt(0))) == 0.0);
  CHECK(r.dropped_mass == doctest::Approx(1e-13));

  r = prune(atoms1d({{0, 0.5}, {0.01, 0.5}}), 0.0, 0.05, e);
  REQUIRE(r.measure.size() == 1);
  CHECK(r.measure.point(0)(0) == doctest::Approx(0.005));
  CHECK(r.transport_slack == doctest::Approx(0.005));

  CHECK_THROWS_AS(prune(mu, 1e-3, 0.0, e), InputError);
  CHECK_THROWS_AS(prune(mu, 0.0, -1.0, e), InputError);
}
