#include <doctest.h>

#include <cfloat>

#include "feller/criteria.hpp"
#include "feller/errors.hpp"
#include "support.hpp"

using namespace feller;
using feller::test::pt;

namespace {

Chain two_cycle() {
  Eigen::MatrixXd P(2, 2);
  P << 0, 1, 1, 0;
  return Chain(P);
}

FiniteMeasure dyadic_lebesgue(int level) {
  const Eigen::Index n = Eigen::Index{1} << level;
  Eigen::MatrixXd pts(1, n);
  for (Eigen::Index j = 0; j < n; ++j) pts(0, j) = static_cast<double>(j) / static_cast<double>(n);
  return FiniteMeasure::from_atoms(pts, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

}  // namespace

TEST_CASE("default dictionary") {
  const auto d1 = default_dictionary(pt(0.0), pt(1.0), MetricSpec::euclidean());
  CHECK(d1.size() == 17);
  const auto d2 = default_dictionary(pt(-1, -1), pt(1, 1), MetricSpec::chebyshev());
  CHECK(d2.size() == 18);
  for (const auto& f : d2) {
    REQUIRE(f.lipschitz().has_value());
    CHECK(std::abs(f(pt(0.3, -0.2))) <= 1.0);
  }
  CHECK_THROWS_AS(default_dictionary(pt(1.0), pt(0.0), MetricSpec::euclidean()), InputError);
}

TEST_CASE("escape certificate") {
  const DiscreteIFS drift({AffineMap::scalar(1.0, 1.0)}, ProbabilityField::constant(Eigen::VectorXd::Ones(1)));
  const auto cert = escape_certificate(drift);
  REQUIRE(cert.has_value());
  CHECK(cert->drift == doctest::Approx(1.0));
  // from x = 0 the trajectory is at n; B(0, 2.5) holds n <= 2
  CHECK(escape_step(*cert, MetricSpec::euclidean(), Ball(pt(0), 2.5), pt(0)) == 2);
  CHECK_FALSE(escape_certificate(test::halving_ifs()).has_value());
  const DiscreteIFS both({AffineMap::scalar(1.0, 1.0), AffineMap::scalar(1.0, -1.0)},
                         ProbabilityField::constant(Eigen::Vector2d(0.5, 0.5)));
  CHECK_FALSE(escape_certificate(both).has_value());
}

TEST_CASE("lower bound mass estimate") {
  LowerBoundParams p;
  p.z = pt(0.5);
  p.eps = 0.3;
  p.starts = {pt(0.0), pt(1.0)};
  p.horizon = 300;
  p.sampler.particles = 4000;
  p.sampler.seed = 5;
  const auto r = lower_bound_mass_estimate(test::halving_ifs(), p);
  CHECK(r.verdict == Verdict::supported);
  CHECK(r.estimates["min_over_starts"].get<double>() == doctest::Approx(0.6).epsilon(0.05));

  const DiscreteIFS drift({AffineMap::scalar(1.0, 1.0)}, ProbabilityField::constant(Eigen::VectorXd::Ones(1)));
  p.z = pt(0.0);
  p.eps = 1.0;
  p.starts = {pt(0.0)};
  p.sampler.particles = 100;
  const auto d = lower_bound_mass_estimate(drift, p);
  CHECK(d.verdict == Verdict::refuted);
  CHECK(d.estimates["min_over_starts"].get<double>() == 0.0);

  LowerBoundParams c;
  c.start_states = {0};
  c.ball_states = {0};
  c.horizon = 100;
  const auto cyc = lower_bound_mass_estimate(two_cycle(), c);
  CHECK(cyc.verdict == Verdict::supported);
  CHECK(cyc.estimates["min_over_starts"].get<double>() == doctest::Approx(0.5));

  Eigen::MatrixXd P(2, 2);
  P << 0, 1, 0, 1;
  const auto gone = lower_bound_mass_estimate(Chain(P), c);
  CHECK(gone.verdict == Verdict::refuted);
}

TEST_CASE("stability lower bound") {
  LowerBoundParams c;
  c.start_states = {0};
  c.ball_states = {0};
  c.horizon = 100;
  const auto cyc = stability_lower_bound_estimate(two_cycle(), c);
  CHECK(cyc.verdict == Verdict::refuted);
  const auto two = stability_lower_bound_estimate(test::two_state(), c);
  CHECK(two.verdict == Verdict::supported);
  CHECK_FALSE(two.caveats.empty());
}

TEST_CASE("e-property probe") {
  EPropertyParams p;
  p.x = pt(0.3);
  p.radii = {0.1, 0.05, 0.02};
  p.mode = EvalMode::exact;
  const auto dict = default_dictionary(pt(0.0), pt(1.0), MetricSpec::euclidean());
  const auto r = e_property_probe(test::halving_ifs(), dict, p);
  CHECK(r.verdict == Verdict::supported);
  const auto& by_step = r.estimates["modulus_by_step"];
  for (std::size_t i = 0; i < p.radii.size(); ++i) {
    const double realized = (p.x(0) + p.radii[i]) - p.x(0);
    for (std::size_t n = 0; n <= p.horizon; ++n) {
      // two sums over 2^n atoms of values in [-1, 1]
      const double roundoff = std::ldexp(4.0 * DBL_EPSILON, static_cast<int>(n));
      CHECK(by_step[i][n].get<double>() <= std::ldexp(realized, -static_cast<int>(n)) + roundoff);
    }
  }
  const auto flat = e_property_probe(test::halving_ifs(), {TestFunction::constant(0.5)}, p);
  for (double m : flat.estimates["modulus"].get<std::vector<double>>()) CHECK(m == 0.0);

  p.radii = {0.1, 0.2};
  CHECK_THROWS_AS(e_property_probe(test::halving_ifs(), dict, p), InputError);
}

TEST_CASE("Cauchy diagnostic") {
  const auto dict = default_dictionary(pt(0.0), pt(1.0), MetricSpec::euclidean());
  CauchyParams p;
  p.z = pt(0.0);
  p.grid = {4, 8, 16};
  p.mode = EvalMode::exact;
  const auto r = cauchy_diagnostic(test::halving_ifs(), dict, p);
  CHECK(r.verdict == Verdict::supported);
  CHECK(r.estimates["decreasing"].get<bool>());

  CauchyParams c;
  c.grid = {8, 16, 32};
  const auto two = cauchy_diagnostic(test::two_state(), {}, c);
  const auto d = two.estimates["D_n_2n"].get<std::vector<double>>();
  CHECK(d[2] < d[0]);
}

TEST_CASE("invariant residual") {
  const auto ifs = test::halving_ifs();
  // P* of the 2^-10 grid is the 2^-11 grid; W1 between them is 2^-12
  CHECK(invariant_residual(ifs, dyadic_lebesgue(10)) == doctest::Approx(std::ldexp(1.0, -12)).epsilon(1e-9));
  CHECK(invariant_residual(ifs, FiniteMeasure::from_list({{pt(0), 0.5}, {pt(1), 0.5}})) > 0.1);
}

TEST_CASE("uniform convergence on compacts") {
  UniformParams p;
  p.horizon = 30;
  const auto r = uniform_compact_convergence(test::two_state(), {}, p);
  CHECK(r.verdict == Verdict::supported);
  CHECK(r.estimates["final"].get<double>() <= 1e-4);
  const auto cyc = uniform_compact_convergence(two_cycle(), {}, p);
  CHECK(cyc.verdict != Verdict::supported);

  UniformParams q;
  q.grid = {pt(0.0), pt(0.5), pt(1.0)};
  q.mu_star = dyadic_lebesgue(8);
  q.mode = EvalMode::exact;
  q.horizon = 12;
  const auto dict = default_dictionary(pt(0.0), pt(1.0), MetricSpec::euclidean());
  const auto h = uniform_compact_convergence(test::halving_ifs(), dict, q);
  CHECK(h.verdict == Verdict::supported);
  const auto c = uniform_compact_convergence(test::halving_ifs(), {TestFunction::constant(1.0)}, q);
  CHECK(c.estimates["sup_deviation"].get<std::vector<double>>().back() <= 1e-12);
}
