#include <doctest.h>

#include "feller/errors.hpp"
#include "feller/transport.hpp"
#include "support.hpp"

using namespace feller;
using feller::test::atoms1d;
using feller::test::pt;

namespace {

// Reference values from tests/oracles/fm_lp.py (dense LP, scipy HiGHS).
FiniteMeasure a1() { return atoms1d({{0.0, 0.2}, {0.7, 0.5}, {2.5, 0.3}}); }
FiniteMeasure a2() { return atoms1d({{0.1, 0.4}, {1.9, 0.6}}); }
FiniteMeasure b1() {
  return FiniteMeasure::from_list({{pt(0, 0), 0.5}, {pt(1, 1), 0.25}, {pt(3, 0), 0.25}});
}
FiniteMeasure b2() { return FiniteMeasure::from_list({{pt(0.5, 0), 0.3}, {pt(0, 2), 0.7}}); }

void check_certificate(const TransportResult& r, const MetricSpec& m) {
  CHECK(r.box_residual <= 1e-9);
  CHECK(potential_violation(r, m) <= 1e-9);
  CHECK(r.duality_gap <= 1e-9);
}

}  // namespace

TEST_CASE("fm distance closed forms") {
  const auto e = MetricSpec::euclidean();
  CHECK(fm_distance(a1(), a1(), e).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fm_distance(dirac(pt(0)), dirac(pt(1)), e).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fm_distance(dirac(pt(0)), dirac(pt(3)), e).value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fm_distance(atoms1d({{0, .5}, {1, .5}}), atoms1d({{0, .5}, {2, .5}}), e).value ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("fm distance against the LP oracle") {
  struct Case {
    FiniteMeasure m1, m2;
    MetricSpec metric;
    double expected;
  };
  const Case cases[] = {
      {a1(), a2(), MetricSpec::euclidean(), 0.68},
      {a1(), a2(), MetricSpec::truncated(0.5), 0.42},
      {b1(), b2(), MetricSpec::euclidean(), 1.4035533905932738},
      {b1(), b2(), MetricSpec::chebyshev(), 1.3},
  };
  for (const auto& c : cases) {
    const auto r = fm_distance(c.m1, c.m2, c.metric);
    CHECK(std::abs(r.value - c.expected) <= 1e-9);
    check_certificate(r, c.metric);
    CHECK(std::abs(fm_distance(c.m2, c.m1, c.metric).value - c.expected) <= 1e-9);
  }
}

TEST_CASE("w1 in one dimension") {
  CHECK(w1_distance_1d(dirac(pt(0)), dirac(pt(2.5))) == doctest::Approx(2.5));
  CHECK(w1_distance_1d(a1(), a1()) == 0.0);
  CHECK(w1_distance_1d(atoms1d({{0, .5}, {1, .5}}), dirac(pt(0.5))) == doctest::Approx(0.5));
  CHECK(w1_distance_1d(a1(), a2()) == doctest::Approx(0.68));
  CHECK_THROWS_AS(w1_distance_1d(b1(), b2()), InputError);
}

TEST_CASE("fm distance properties on random measures") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> atoms(1, 20), dims(1, 3);
  const MetricSpec metrics[] = {MetricSpec::euclidean(), MetricSpec::chebyshev(), MetricSpec::truncated(1.0)};
  for (int i = 0; i < 60; ++i) {
    const int d = dims(rng);
    const auto& metric = metrics[i % 3];
    const auto x = test::random_measure(rng, d, atoms(rng));
    const auto y = test::random_measure(rng, d, atoms(rng));
    const auto z = test::random_measure(rng, d, atoms(rng));
    const auto xy = fm_distance(x, y, metric);
    check_certificate(xy, metric);
    const double yz = fm_distance(y, z, metric).value, xz = fm_distance(x, z, metric).value;
    CHECK(xy.value >= -1e-12);
    CHECK(xy.value <= std::min(2.0, tv_distance(x, y)) + 1e-9);
    CHECK(xz <= xy.value + yz + 1e-8);
    CHECK(std::abs(fm_distance(y, x, metric).value - xy.value) <= 1e-8);
    if (d == 1 && metric.kind == MetricKind::euclidean) CHECK(xy.value <= w1_distance_1d(x, y) + 1e-9);
  }
}

TEST_CASE("fm equals w1 for small supports in one dimension") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    const auto x = test::random_measure(rng, 1, 6, 0.45);
    const auto y = test::random_measure(rng, 1, 6, 0.45);
    const auto r = fm_distance(x, y, MetricSpec::euclidean());
    // potentials span at most the diameter (< 1), so some optimum stays inside the box
    CHECK(std::abs(r.value - w1_distance_1d(x, y)) <= 1e-9);
  }
}

TEST_CASE("support cap") {
  std::mt19937_64 rng(1);
  const auto x = test::random_measure(rng, 1, 40), y = test::random_measure(rng, 1, 40);
  CHECK_THROWS_AS(fm_distance(x, y, MetricSpec::euclidean(), 50), ResourceError);
  CHECK_THROWS_AS(fm_distance(x, b1(), MetricSpec::euclidean()), InputError);
}
