#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "lp_vertex_oracle.hpp"
#include "relaymec/lp.hpp"

using namespace relaymec;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("single variable, one row") {
  lp::LinearProgram p = lp::make_lp(1);
  p.c << 1.0;
  p.A_ub = MatrixXd::Constant(1, 1, 1.0);
  p.b_ub = VectorXd::Constant(1, 1.0);
  const auto s = lp::solve_lp(p);
  REQUIRE(s.status == lp::LpStatus::optimal);
  CHECK(s.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.x(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("equality simplex face") {
  lp::LinearProgram p = lp::make_lp(2);
  p.c << 1.0, 1.0;
  p.A_eq = MatrixXd::Constant(1, 2, 1.0);
  p.b_eq = VectorXd::Constant(1, 1.0);
  const auto s = lp::solve_lp(p);
  REQUIRE(s.status == lp::LpStatus::optimal);
  CHECK(s.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.x(0) + s.x(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unbounded detection") {
  lp::LinearProgram p = lp::make_lp(2);
  p.c << 1.0, -1.0;
  CHECK(lp::solve_lp(p).status == lp::LpStatus::unbounded);

  // a row that does not block the improving ray
  p.A_ub = MatrixXd(1, 2);
  p.A_ub << 0.0, 1.0;
  p.b_ub = VectorXd::Constant(1, 3.0);
  CHECK(lp::solve_lp(p).status == lp::LpStatus::unbounded);
}

TEST_CASE("infeasible detection") {
  {
    lp::LinearProgram p = lp::make_lp(1);
    p.c << 1.0;
    p.A_ub = MatrixXd::Constant(1, 1, 1.0);
    p.b_ub = VectorXd::Constant(1, -1.0);  // x <= -1 vs x >= 0
    CHECK(lp::solve_lp(p).status == lp::LpStatus::infeasible);
  }
  {
    lp::LinearProgram p = lp::make_lp(2);
    p.c << 1.0, 0.0;
    p.A_eq = MatrixXd(2, 2);
    p.A_eq << 1.0, 1.0, 1.0, 1.0;
    p.b_eq = VectorXd(2);
    p.b_eq << 1.0, 2.0;  // parallel, conflicting
    CHECK(lp::solve_lp(p).status == lp::LpStatus::infeasible);
  }
  {
    lp::LinearProgram p = lp::make_lp(1);
    p.c << 1.0;
    p.lower << 2.0;
    p.upper << 1.0;  // crossed bounds
    CHECK(lp::solve_lp(p).status == lp::LpStatus::infeasible);
  }
}

TEST_CASE("bounds handling") {
  lp::LinearProgram p = lp::make_lp(1);
  p.c << -1.0;
  p.lower << 2.0;
  p.upper << 5.0;
  auto s = lp::solve_lp(p);
  REQUIRE(s.status == lp::LpStatus::optimal);
  CHECK(s.x(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.value == doctest::Approx(-2.0).epsilon(1e-12));

  p.c << 1.0;
  s = lp::solve_lp(p);
  REQUIRE(s.status == lp::LpStatus::optimal);
  CHECK(s.x(0) == doctest::Approx(5.0).epsilon(1e-12));

  p.lower << -3.0;
  p.upper << -1.0;
  s = lp::solve_lp(p);
  REQUIRE(s.status == lp::LpStatus::optimal);
  CHECK(s.x(0) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("dimension checks") {
  lp::LinearProgram p = lp::make_lp(2);
  p.c << 1.0, 1.0;
  p.A_ub = MatrixXd::Constant(1, 3, 1.0);  // wrong column count
  p.b_ub = VectorXd::Constant(1, 1.0);
  CHECK_THROWS_AS(lp::solve_lp(p), DimensionMismatch);
}

TEST_CASE("mixed-magnitude rows") {
  // bits-vs-seconds style scaling: R <= 3e7 * t, t <= 0.1, maximize R - eps t
  lp::LinearProgram p = lp::make_lp(2);
  p.c << 1.0, -1e-3;
  p.A_ub = MatrixXd(1, 2);
  p.A_ub << 1.0, -3e7;
  p.b_ub = VectorXd::Constant(1, 0.0);
  p.upper << std::numeric_limits<double>::infinity(), 0.1;
  const auto s = lp::solve_lp(p);
  REQUIRE(s.status == lp::LpStatus::optimal);
  CHECK(s.x(1) == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(s.x(0) == doctest::Approx(3e6).epsilon(1e-10));
}

TEST_CASE("random LPs vs vertex enumeration") {
  std::mt19937_64 rng(20240817);
  int n_feasible = 0;
  int n_infeasible = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = testutil::random_box_lp(rng);
    const auto oracle = testutil::vertex_oracle(p);
    const auto s = lp::solve_lp(p);
    CAPTURE(trial);
    if (oracle.feasible) {
      ++n_feasible;
      REQUIRE(s.status == lp::LpStatus::optimal);
      CHECK(std::abs(s.value - oracle.value) <=
            1e-8 * std::max(1.0, std::abs(oracle.value)));
      // solution satisfies everything it claims to
      for (int i = 0; i < p.b_ub.size(); ++i)
        CHECK(p.A_ub.row(i).dot(s.x) <= p.b_ub(i) + 1e-8);
      for (int i = 0; i < p.b_eq.size(); ++i)
        CHECK(std::abs(p.A_eq.row(i).dot(s.x) - p.b_eq(i)) <= 1e-8);
      for (int j = 0; j < p.c.size(); ++j) {
        CHECK(s.x(j) >= p.lower(j) - 1e-9);
        CHECK(s.x(j) <= p.upper(j) + 1e-9);
      }
    } else {
      ++n_infeasible;
      CHECK(s.status == lp::LpStatus::infeasible);
    }
  }
  // the generator must exercise both outcomes
  CHECK(n_feasible >= 50);
  CHECK(n_infeasible >= 10);
}

TEST_CASE("value is basis-independent") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = testutil::random_box_lp(rng);
    const auto s = lp::solve_lp(p);
    if (s.status != lp::LpStatus::optimal) continue;

    // permute variables: a different initial basis walks a different path
    const int n = static_cast<int>(p.c.size());
    std::vector<int> perm(n);
    for (int j = 0; j < n; ++j) perm[j] = j;
    std::shuffle(perm.begin(), perm.end(), rng);

    lp::LinearProgram q = p;
    for (int j = 0; j < n; ++j) {
      q.c(j) = p.c(perm[j]);
      q.lower(j) = p.lower(perm[j]);
      q.upper(j) = p.upper(perm[j]);
      for (int i = 0; i < p.b_ub.size(); ++i) q.A_ub(i, j) = p.A_ub(i, perm[j]);
      for (int i = 0; i < p.b_eq.size(); ++i) q.A_eq(i, j) = p.A_eq(i, perm[j]);
    }
    const auto s2 = lp::solve_lp(q);
    REQUIRE(s2.status == lp::LpStatus::optimal);
    CHECK(std::abs(s2.value - s.value) <=
          1e-8 * std::max(1.0, std::abs(s.value)));
  }
}

TEST_CASE("degenerate vertices do not cycle") {
  // several redundant rows through the same optimal corner
  lp::LinearProgram p = lp::make_lp(3);
  p.c << 1.0, 1.0, 1.0;
  p.A_ub = MatrixXd(4, 3);
  p.A_ub << 1.0, 1.0, 0.0,
            1.0, 0.0, 1.0,
            0.0, 1.0, 1.0,
            1.0, 1.0, 1.0;
  p.b_ub = VectorXd(4);
  p.b_ub << 1.0, 1.0, 1.0, 1.0;
  const auto s = lp::solve_lp(p);
  REQUIRE(s.status == lp::LpStatus::optimal);
  CHECK(s.value == doctest::Approx(1.0).epsilon(1e-10));
}
