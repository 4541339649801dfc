#include <doctest.h>

#include "feller/chain.hpp"
#include "feller/errors.hpp"
#include "feller/semigroup.hpp"
#include "support.hpp"

using namespace feller;

TEST_CASE("chain dual step and stationary distribution") {
  const Chain c = test::two_state();
  const Eigen::VectorXd one = chain_dual_step(c, Eigen::Vector2d(1, 0));
  CHECK(one(0) == doctest::Approx(0.9));
  CHECK(one(1) == doctest::Approx(0.1));
  const Eigen::VectorXd pi = chain_stationary(c);
  CHECK(pi(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(pi(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK((chain_dual_step(c, pi) - pi).cwiseAbs().sum() <= 1e-14);

  const Chain id(Eigen::MatrixXd::Identity(3, 3));
  const Eigen::VectorXd d = Eigen::Vector3d(0.2, 0.3, 0.5);
  CHECK((chain_dual_step(id, d) - d).norm() == 0.0);
  CHECK(chain_stationary(Chain(Eigen::MatrixXd::Identity(1, 1)))(0) == 1.0);
  CHECK_THROWS_AS(chain_stationary(id), DegenerateError);

  Eigen::MatrixXd ds(4, 4);
  ds << 0.1, 0.2, 0.3, 0.4, 0.4, 0.1, 0.2, 0.3, 0.3, 0.4, 0.1, 0.2, 0.2, 0.3, 0.4, 0.1;
  CHECK((chain_stationary(Chain(ds)) - Eigen::Vector4d::Constant(0.25)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("chain validation") {
  Eigen::MatrixXd bad(2, 2);
  bad << 0.5, 0.6, 0.5, 0.5;
  CHECK_THROWS_AS(Chain{bad}, InputError);
  bad << 1.2, -0.2, 0.5, 0.5;
  CHECK_THROWS_AS(Chain{bad}, InputError);
  CHECK_THROWS_AS(Chain(Eigen::MatrixXd::Identity(2, 3)), InputError);
  CHECK_THROWS_AS(chain_dual_step(test::two_state(), Eigen::VectorXd(Eigen::Vector2d(0.5, 0.6))), InputError);
}

TEST_CASE("class structure and periods") {
  Eigen::MatrixXd P(4, 4);
  // 0 -> {1,2} cycle of period 2; 3 absorbing and reachable from 0
  P << 0.0, 0.5, 0.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  const Chain c(P);
  const ChainStructure s = analyze_chain(c);
  CHECK(s.class_of[1] == s.class_of[2]);
  CHECK(s.class_of[0] != s.class_of[1]);
  CHECK(s.class_closed[s.class_of[1]]);
  CHECK(s.class_closed[s.class_of[3]]);
  CHECK_FALSE(s.class_closed[s.class_of[0]]);
  CHECK(s.class_period[s.class_of[1]] == 2);
  CHECK(s.class_period[s.class_of[3]] == 1);

  // from state 0: half the mass enters the 2-cycle at step 1 (state 1), so state 1
  // alternates between 1/2 and 0
  const LimitMasses lm = limit_ball_masses(c, s, c.basis(0), {1});
  CHECK(lm.liminf == doctest::Approx(0.0));
  CHECK(lm.limsup == doctest::Approx(0.5));
  CHECK(lm.cesaro == doctest::Approx(0.25));
  CHECK(lm.cesaro_positive_structural);
}

TEST_CASE("Cesaro averages on chains") {
  const Chain c = test::two_state();
  const Eigen::VectorXd pi = chain_stationary(c);
  double prev = 10.0;
  for (std::size_t n : {10, 100, 1000}) {
    const double err = (cesaro_vector(c, c.basis(0), n) - pi).cwiseAbs().sum();
    // the geometric tail of 0.7^k sums to a constant: n * err stays bounded
    CHECK(static_cast<double>(n) * err <= 2.0);
    CHECK(err < prev);
    prev = err;
  }
  CHECK((cesaro_vector(c, c.basis(0), 1) - chain_dual_step(c, c.basis(0))).norm() == 0.0);
  const Chain id(Eigen::MatrixXd::Identity(3, 3));
  CHECK((cesaro_vector(id, id.basis(2), 7) - id.basis(2)).norm() == 0.0);
}

TEST_CASE("Cesaro TV residual") {
  const Chain c = test::two_state();
  // numpy oracle, tests/oracles/fm_lp.py
  CHECK(std::abs(cesaro_tv_residual(c, 0, 10) - 0.04534844883799999) <= 1e-14);
  CHECK(std::abs(cesaro_tv_residual(c, 0, 100) - 0.0046666666666666575) <= 1e-14);
  CHECK(cesaro_tv_residual(Chain(Eigen::MatrixXd::Identity(3, 3)), 1, 5) == 0.0);

  Eigen::MatrixXd flip(2, 2);
  flip << 0, 1, 1, 0;
  const Chain cyc(flip);
  for (std::size_t n : {2, 10, 100}) CHECK(cesaro_tv_residual(cyc, 0, n) == 0.0);
  for (std::size_t n : {1, 11, 101}) CHECK(cesaro_tv_residual(cyc, 0, n) == doctest::Approx(2.0 / n));

  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const Chain r = test::random_chain(rng, 5);
    for (std::size_t n : {10, 100}) CHECK(cesaro_tv_residual(r, i % 5, n) <= 2.0 / n);
  }
}

TEST_CASE("composed Cesaro operators") {
  const Chain c = test::two_state();
  CHECK(std::abs(composed_cesaro_gap(c, {3, 5}, 100) - 0.024939053253333343) <= 1e-14);
  CHECK(std::abs(composed_cesaro_gap(c, {3, 5}, 1000) - 0.002493905325333279) <= 1e-14);
  CHECK(composed_cesaro_gap(c, {}, 50) == 0.0);
  const Eigen::VectorXd qT = cesaro_vector(c, c.basis(1), 50);
  CHECK((composed_cesaro(c, c.basis(1), {}, 50) - qT).norm() <= 1e-15);

  const Chain id(Eigen::MatrixXd::Identity(3, 3));
  CHECK((composed_cesaro(id, id.basis(0), {2, 7}, 9) - id.basis(0)).norm() == 0.0);
  CHECK_THROWS_AS(cesaro_matrix(c, 0), InputError);
}
