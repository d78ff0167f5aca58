#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "platoon/qp.hpp"

using namespace platoon;
using namespace platoon::qp;

namespace {

Row row(std::initializer_list<double> c, double rhs, Sense sense) {
  Row r;
  r.coeffs = Eigen::VectorXd(static_cast<int>(c.size()));
  int i = 0;
  for (double v : c) r.coeffs(i++) = v;
  r.rhs = rhs;
  r.sense = sense;
  return r;
}

Problem identity_problem(int dim, Eigen::VectorXd q) {
  Problem pb;
  pb.P = Eigen::MatrixXd::Identity(dim, dim);
  pb.q = std::move(q);
  return pb;
}

}  // namespace

TEST_CASE("unconstrained minimizer") {
  Problem pb = identity_problem(1, Eigen::VectorXd::Zero(1));
  const Solution s = solve(pb);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.x(0) == doctest::Approx(0.0));
  const KktReport k = kkt_check(pb, s);
  CHECK(k.ok);
  CHECK(k.stationarity == 0.0);
  CHECK(k.primal_violation == 0.0);
}

TEST_CASE("clamped minimizer has one active row") {
  // min 1/2 (u - 1)^2 = 1/2 u^2 - u + const, s.t. u <= 0
  Problem pb = identity_problem(1, Eigen::VectorXd::Constant(1, -1.0));
  pb.rows.push_back(row({1.0}, 0.0, Sense::LessEqual));
  const Solution s = solve(pb);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.x(0) == doctest::Approx(0.0));
  CHECK(s.active_set == std::vector<int>{0});
  CHECK(s.multipliers(0) == doctest::Approx(1.0));
  CHECK(kkt_check(pb, s).ok);
}

TEST_CASE("two lower bounds") {
  Problem pb = identity_problem(2, Eigen::VectorXd::Zero(2));
  pb.rows.push_back(row({1, 0}, 1.0, Sense::GreaterEqual));
  pb.rows.push_back(row({0, 1}, 2.0, Sense::GreaterEqual));
  const Solution s = solve(pb);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.x(0) == doctest::Approx(1.0));
  CHECK(s.x(1) == doctest::Approx(2.0));
  CHECK(s.objective == doctest::Approx(2.5));
  CHECK(kkt_check(pb, s).ok);
}

TEST_CASE("empty feasible set is reported") {
  Problem pb = identity_problem(1, Eigen::VectorXd::Zero(1));
  pb.rows.push_back(row({1.0}, 1.0, Sense::GreaterEqual));
  pb.rows.push_back(row({1.0}, 0.0, Sense::LessEqual));
  CHECK(solve(pb).status == Status::Infeasible);
}

TEST_CASE("kkt_check on a hand-built optimum and a perturbed point") {
  Problem pb = identity_problem(2, Eigen::VectorXd::Zero(2));
  pb.rows.push_back(row({1, 1}, 2.0, Sense::GreaterEqual));
  // Optimum (1, 1) with multiplier 1: x - lambda (1, 1) = 0.
  Solution s;
  s.status = Status::Optimal;
  s.x = Eigen::Vector2d(1.0, 1.0);
  s.multipliers = Eigen::VectorXd::Constant(1, 1.0);
  CHECK(kkt_check(pb, s).ok);

  s.x = Eigen::Vector2d(1.0 - 1e-3, 1.0);
  const KktReport k = kkt_check(pb, s);
  CHECK_FALSE(k.ok);
  CHECK(std::find(k.failures.begin(), k.failures.end(), "primal feasibility") != k.failures.end());
}

TEST_CASE("problem validity") {
  Problem pb = identity_problem(2, Eigen::VectorXd::Zero(2));
  CHECK(pb.valid());
  pb.P(0, 1) = 0.5;
  CHECK_FALSE(pb.valid());  // asymmetric
  pb.P(1, 0) = 0.5;
  CHECK(pb.valid());
  pb.P(1, 1) = -1.0;
  CHECK_FALSE(pb.valid());  // indefinite
}

TEST_CASE("random problems agree with the projected-gradient oracle") {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> dim_d(1, 6), rows_d(0, 8);
  int optimal = 0;
  for (int k = 0; k < 300; ++k) {
    const Problem pb = oracle::random_problem(rng, dim_d(rng), rows_d(rng));
    const Solution s = solve(pb);
    if (s.status != Status::Optimal) continue;
    ++optimal;
    const KktReport rep = kkt_check(pb, s);
    CHECK(rep.ok);
    const double ref = oracle::projected_gradient_objective(pb);
    CHECK(std::abs(s.objective - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
  }
  CHECK(optimal > 100);
}

TEST_CASE("infeasibility agrees with vertex enumeration") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> dim_d(1, 3), rows_d(1, 8);
  int infeasible = 0;
  for (int k = 0; k < 200; ++k) {
    const int dim = dim_d(rng);
    const Problem pb = oracle::random_feasibility_instance(rng, dim, rows_d(rng));
    const bool feasible = oracle::feasible_by_vertices(pb.rows, dim);
    const Solution s = solve(pb);
    CHECK((s.status == Status::Optimal) == feasible);
    infeasible += !feasible;
  }
  CHECK(infeasible > 10);
}

TEST_CASE("solve is deterministic") {
  std::mt19937 rng(5);
  const Problem pb = oracle::random_problem(rng, 5, 8);
  const Solution a = solve(pb), b = solve(pb);
  CHECK(a.status == b.status);
  if (a.status == Status::Optimal) {
    CHECK(a.x == b.x);
    CHECK(a.active_set == b.active_set);
  }
}
