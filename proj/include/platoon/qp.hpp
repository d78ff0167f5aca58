#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "platoon/certificates.hpp"

namespace platoon::qp {

/// One linear inequality  coeffs . x  (sense)  rhs.
struct Row {
  Eigen::VectorXd coeffs;
  double rhs = 0.0;
  Sense sense = Sense::LessEqual;
};

/// minimize 1/2 x'Px + q'x subject to rows. P must be symmetric positive-definite.
struct Problem {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  std::vector<Row> rows;

  int dim() const { return static_cast<int>(q.size()); }
  /// Symmetry within 1e-12 and a successful Cholesky factorization.
  bool valid() const;
  double objective(const Eigen::VectorXd& x) const;
};

enum class Status { Optimal, Infeasible };

struct Solution {
  Status status = Status::Infeasible;
  Eigen::VectorXd x;
  std::vector<int> active_set;  // row indices, ascending
  // One multiplier per row, >= 0, for the row written as sigma*coeffs.x <= sigma*rhs
  // with sigma = +1 for <= rows and -1 for >= rows:
  //   P x + q + sum_i lambda_i sigma_i coeffs_i = 0
  Eigen::VectorXd multipliers;
  double objective = 0.0;
  int iterations = 0;
};

/// Dual active-set method: starts at the unconstrained minimizer -P^{-1} q, adds
/// the most violated row (lowest index on ties), drops rows whose multiplier would
/// turn negative, and reports Infeasible when a violated row cannot be satisfied
/// by any primal or dual step (a Farkas certificate for the active rows).
Solution solve(const Problem& problem);

struct KktReport {
  bool ok = true;
  double primal_violation = 0.0;
  double min_multiplier = 0.0;
  double stationarity = 0.0;
  double complementarity = 0.0;
  std::vector<std::string> failures;
};

inline constexpr double kPrimalTol = 1e-8;
inline constexpr double kDualTol = 1e-9;
inline constexpr double kStationarityTol = 1e-7;
inline constexpr double kComplementarityTol = 1e-7;

/// Checks primal feasibility, dual feasibility, stationarity and complementary
/// slackness of an Optimal solution.
KktReport kkt_check(const Problem& problem, const Solution& solution);

}  // namespace platoon::qp
