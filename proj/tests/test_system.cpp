#include <doctest.h>

#include "feller/errors.hpp"
#include "feller/rng.hpp"
#include "feller/system.hpp"
#include "support.hpp"

using namespace feller;
using feller::test::atoms1d;
using feller::test::pt;

namespace {
const SampleBox unit = SampleBox::cube(1, -1.0, 1.0);
}

TEST_CASE("keyed streams are reproducible and distinct") {
  KeyedStream a(7, 3, 11), b(7, 3, 11), c(7, 4, 11), d(8, 3, 11);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    CHECK(x != d.next_u64());
  }
  KeyedStream u(1, 0, 0);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double v = u.uniform();
    REQUIRE(v >= 0.0);
    REQUIRE(v < 1.0);
    sum += v;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("exact dual step") {
  const auto ifs = test::halving_ifs();
  const auto one = dual_step_exact(ifs, dirac(pt(0)));
  CHECK(tv_distance(one, atoms1d({{0, 0.5}, {0.5, 0.5}})) == 0.0);

  const DiscreteIFS id({AffineMap::scalar(1.0, 0.0)}, ProbabilityField::constant(Eigen::VectorXd::Ones(1)));
  const auto mu = atoms1d({{-1, 0.3}, {2, 0.7}});
  CHECK(tv_distance(dual_step_exact(id, mu), mu) == 0.0);
  CHECK_THROWS_AS(dual_step_exact(ifs, atoms1d({{0, 0.5}, {1, 0.5}}), 3), ResourceError);
}

TEST_CASE("Markov operator on test functions") {
  const auto ifs = test::halving_ifs();
  CHECK(apply_P(ifs, TestFunction::constant(1.0), pt(0.3)) == doctest::Approx(1.0));
  // P clamp(x) at 0.4: (0.2 + 0.7) / 2
  CHECK(apply_P(ifs, TestFunction::clipped_coordinate(0, -1, 1), pt(0.4)) == doctest::Approx(0.45));

  const JumpFlowSystem jf(FlowSpec(Eigen::VectorXd::Constant(1, 0.2)), 1.0,
                          {AffineMap::scalar(0.5, 0.0), AffineMap::scalar(0.5, 0.5)},
                          ProbabilityField::constant(Eigen::Vector2d(0.5, 0.5)));
  CHECK(apply_P(jf, TestFunction::constant(1.0), pt(0.3)) == doctest::Approx(1.0).epsilon(1e-9));
  // x = 0 is fixed by the flow: P clamp(0) = (0 + 0.5)/2
  CHECK(apply_P(jf, TestFunction::clipped_coordinate(0, -1, 1), pt(0.0)) == doctest::Approx(0.25).epsilon(1e-9));
  // lambda = 0.2, gamma = 1: E e^{0.2 tau} = 1/(1 - 0.2); at x = 0.02 the clamp
  // only matters for tau > 19, probability e^{-19}
  CHECK(apply_P(jf, TestFunction::clipped_coordinate(0, -1, 1), pt(0.02)) ==
        doctest::Approx(0.5 * (0.0125 + 0.5125)).epsilon(1e-7));
}

TEST_CASE("step sampling follows the probabilities") {
  const DiscreteIFS ifs({AffineMap::scalar(0.0, 0.0), AffineMap::scalar(0.0, 1.0)},
                        ProbabilityField::constant(Eigen::Vector2d(0.25, 0.75)));
  int ones = 0;
  for (std::uint64_t j = 0; j < 40000; ++j) {
    KeyedStream s(99, j, 1);
    ones += step_sample(ifs, pt(0.0), s)(0) == 1.0;
  }
  CHECK(ones / 40000.0 == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("average contraction") {
  CHECK(check_avg_contraction(test::halving_ifs(), 500, 1, unit).value() == doctest::Approx(0.5));
  const DiscreteIFS expansive({AffineMap::scalar(2.0, 0.0)}, ProbabilityField::constant(Eigen::VectorXd::Ones(1)));
  const auto e = check_avg_contraction(expansive, 500, 1, unit);
  CHECK(e.value() == doctest::Approx(2.0));
  CHECK_FALSE(e.value() < 1.0);
  const DiscreteIFS mixed({AffineMap::scalar(0.25, 0.0), AffineMap::scalar(0.75, 0.0)},
                          ProbabilityField::constant(Eigen::Vector2d(0.5, 0.5)));
  const auto m = check_avg_contraction(mixed, 500, 1, unit);
  CHECK(m.observed == doctest::Approx(0.5));
  CHECK(m.value() == doctest::Approx(0.5));
}

TEST_CASE("probability Lipschitz constants") {
  CHECK(check_prob_lipschitz(test::halving_ifs(), 500, 1, unit).value() == 0.0);
  Eigen::MatrixXd theta(2, 1);
  theta << 0.7, 0.7;
  const DiscreteIFS flat({AffineMap::scalar(0.5, 0.0), AffineMap::scalar(0.5, 0.5)},
                         ProbabilityField::softmax(theta, Eigen::Vector2d(0.0, 0.3)));
  CHECK(check_prob_lipschitz(flat, 500, 1, unit).value() == doctest::Approx(0.0).epsilon(1e-12));

  theta << 1.0, -1.0;
  const DiscreteIFS tilted({AffineMap::scalar(0.5, 0.0), AffineMap::scalar(0.5, 0.5)},
                           ProbabilityField::softmax(theta, Eigen::Vector2d(0.0, 0.0)));
  const auto t = check_prob_lipschitz(tilted, 2000, 1, unit);
  REQUIRE(t.analytic.has_value());
  CHECK(t.observed <= *t.analytic + 1e-12);
  CHECK(t.observed > 0.5 * *t.analytic);
}

TEST_CASE("flow expansion and the spectral condition") {
  const auto e = MetricSpec::euclidean();
  const SampleBox box2 = SampleBox::cube(2, -1.0, 1.0);
  CHECK(check_flow_expansion(FlowSpec(Eigen::VectorXd::Zero(1)), e, 200, 5, 1, unit).value() ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(check_flow_expansion(FlowSpec(Eigen::VectorXd::Constant(1, 0.2)), e, 200, 5, 1, unit).value() ==
        doctest::Approx(0.2));
  const auto two = check_flow_expansion(FlowSpec(Eigen::Vector2d(0.1, 0.3)), e, 500, 5, 1, box2);
  CHECK(two.observed <= 0.3 + 1e-12);
  CHECK(two.value() <= 0.3 + 1e-12);

  auto g = check_spectral_gap_condition(0.4, 0.2, 1.0);
  CHECK(g.value == doctest::Approx(0.6));
  CHECK(g.pass);
  g = check_spectral_gap_condition(0.9, 0.5, 1.0);
  CHECK(g.value == doctest::Approx(1.4));
  CHECK_FALSE(g.pass);
  CHECK(check_spectral_gap_condition(0.5, 0.0, 123.0).value == doctest::Approx(0.5));
  CHECK(check_spectral_gap_condition(0.5, 0.2, 1.0).value == doctest::Approx(0.7));
}

TEST_CASE("moduli pair series") {
  const std::vector<double> grid{0.1, 0.5, 1.0};
  const auto ok = check_moduli_pair({{0.5, 1.0}, {1.0, 0.5}}, grid, 200);
  CHECK(ok.pass);
  CHECK(ok.concave);
  // sum_n (2^{-n} t)^{1/2} = sqrt(t) / (sqrt 2 - 1)
  CHECK(ok.partial_sums[2] == doctest::Approx(1.0 / (std::sqrt(2.0) - 1.0)).epsilon(1e-9));

  const auto bad = check_moduli_pair({{1.0, 1.0}, {1.0, 0.5}}, grid, 50);
  CHECK_FALSE(bad.pass);
  CHECK(bad.witnesses.size() == grid.size());
}

TEST_CASE("system validation") {
  CHECK_THROWS_AS(DiscreteIFS({}, ProbabilityField::constant(Eigen::VectorXd::Ones(1))), InputError);
  CHECK_THROWS_AS(DiscreteIFS({AffineMap::scalar(0.5, 0.0)}, ProbabilityField::constant(Eigen::Vector2d(0.5, 0.5))),
                  InputError);
  CHECK_THROWS_AS(ProbabilityField::constant(Eigen::Vector2d(0.7, 0.7)), InputError);
  CHECK_THROWS_AS(JumpFlowSystem(FlowSpec(Eigen::VectorXd::Zero(1)), 0.0, {AffineMap::scalar(0.5, 0.0)},
                                 ProbabilityField::constant(Eigen::VectorXd::Ones(1))),
                  InputError);
}
