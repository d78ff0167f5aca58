#include "platoon/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace platoon::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Violations below this (in the row's own units) are treated as satisfied.
double feasibility_tol(double rhs) { return std::min(5e-9, 1e-11 * (1.0 + std::abs(rhs))); }

double sigma_of(Sense s) { return s == Sense::LessEqual ? 1.0 : -1.0; }

// Re-solves the equality-constrained problem on the final active set with a
// pivoted factorization and one refinement step, which removes the drift the
// incremental updates accumulate. Kept only if it stays primal and dual feasible.
void polish(const Problem& problem, const std::vector<Eigen::VectorXd>& normal,
            const Eigen::VectorXd& bound, const std::vector<int>& active, Eigen::VectorXd& x,
            std::vector<double>& mult) {
  const int n = problem.dim();
  const int k = static_cast<int>(active.size());
  if (k == 0) return;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
  Eigen::VectorXd rhs(n + k);
  kkt.topLeftCorner(n, n) = problem.P;
  rhs.head(n) = -problem.q;
  for (int j = 0; j < k; ++j) {
    kkt.block(0, n + j, n, 1) = -normal[active[j]];
    kkt.block(n + j, 0, 1, n) = normal[active[j]].transpose();
    rhs(n + j) = bound(active[j]);
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) return;
  Eigen::VectorXd sol = lu.solve(rhs);
  sol += lu.solve(rhs - kkt * sol);
  if (!sol.allFinite()) return;
  for (int j = 0; j < k; ++j) {
    if (sol(n + j) < 0.0) return;
  }
  for (int i = 0; i < static_cast<int>(normal.size()); ++i) {
    if (normal[i].isZero()) continue;
    const double viol = bound(i) - normal[i].dot(sol.head(n));
    if (viol > feasibility_tol(problem.rows[i].rhs)) return;
  }
  x = sol.head(n);
  for (int j = 0; j < k; ++j) mult[j] = sol(n + j);
}

}  // namespace

bool Problem::valid() const {
  const auto n = q.size();
  if (P.rows() != n || P.cols() != n) return false;
  if (!P.allFinite() || !q.allFinite()) return false;
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  for (const auto& r : rows) {
    if (r.coeffs.size() != n || !r.coeffs.allFinite() || !std::isfinite(r.rhs)) return false;
  }
  return Eigen::LLT<Eigen::MatrixXd>(P).info() == Eigen::Success;
}

double Problem::objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(P * x) + q.dot(x);
}

namespace {

// Factorization state of the dual active-set method: J = L^-T Q with P = L L'
// and R upper triangular such that J' N_active = [R; 0].
struct ActiveFactor {
  Eigen::MatrixXd J;
  Eigen::MatrixXd R;  // n x n, leading q x q block in use
  int q = 0;
};

// Givens rotation zeroing b in (a, b); returns (c, s) with c a + s b = r.
void givens(double a, double b, double& c, double& s) {
  const double r = std::hypot(a, b);
  if (r == 0.0) {
    c = 1.0;
    s = 0.0;
    return;
  }
  c = a / r;
  s = b / r;
}

// Appends a constraint whose transformed normal is d = J' n. Rotations fold
// d(q..n-1) into d(q) and are applied to the matching columns of J.
void add_constraint(ActiveFactor& f, Eigen::VectorXd d) {
  const int n = static_cast<int>(d.size());
  for (int k = n - 1; k > f.q; --k) {
    double c, s;
    givens(d(k - 1), d(k), c, s);
    if (s == 0.0) continue;
    d(k - 1) = c * d(k - 1) + s * d(k);
    d(k) = 0.0;
    for (int row = 0; row < n; ++row) {
      const double a = f.J(row, k - 1), b = f.J(row, k);
      f.J(row, k - 1) = c * a + s * b;
      f.J(row, k) = -s * a + c * b;
    }
  }
  f.R.col(f.q).head(f.q + 1) = d.head(f.q + 1);
  ++f.q;
}

// Removes active column k and restores the triangular form of R.
void drop_constraint(ActiveFactor& f, int k) {
  const int n = static_cast<int>(f.J.rows());
  for (int col = k; col < f.q - 1; ++col) f.R.col(col) = f.R.col(col + 1);
  f.R.col(f.q - 1).setZero();
  --f.q;
  for (int col = k; col < f.q; ++col) {
    double c, s;
    givens(f.R(col, col), f.R(col + 1, col), c, s);
    if (s == 0.0) continue;
    for (int j = col; j < f.q; ++j) {
      const double a = f.R(col, j), b = f.R(col + 1, j);
      f.R(col, j) = c * a + s * b;
      f.R(col + 1, j) = -s * a + c * b;
    }
    f.R(col + 1, col) = 0.0;
    for (int row = 0; row < n; ++row) {
      const double a = f.J(row, col), b = f.J(row, col + 1);
      f.J(row, col) = c * a + s * b;
      f.J(row, col + 1) = -s * a + c * b;
    }
  }
}

}  // namespace

Solution solve(const Problem& problem) {
  const int n = problem.dim();
  const int m = static_cast<int>(problem.rows.size());

  Solution sol;
  sol.multipliers = Eigen::VectorXd::Zero(m);

  const Eigen::LLT<Eigen::MatrixXd> llt(problem.P);
  Eigen::VectorXd x = llt.solve(-problem.q);

  // Rows in unit-normal ">=" form: normal . x >= bound.
  std::vector<Eigen::VectorXd> normal(m);
  Eigen::VectorXd bound = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(m);
  std::vector<bool> ignored(m, false);  // zero rows that hold trivially
  auto infeasible = [&](int iterations) {
    sol.status = Status::Infeasible;
    sol.x = x;
    sol.iterations = iterations;
    sol.objective = problem.objective(x);
    return sol;
  };
  for (int i = 0; i < m; ++i) {
    const auto& row = problem.rows[i];
    const double dir = -sigma_of(row.sense);
    const double norm = row.coeffs.norm();
    normal[i] = Eigen::VectorXd::Zero(n);
    if (norm == 0.0) {
      if (dir * row.rhs > feasibility_tol(row.rhs)) return infeasible(0);  // 0 >= dir * rhs
      ignored[i] = true;
      continue;
    }
    normal[i] = dir * row.coeffs / norm;
    bound(i) = dir * row.rhs / norm;
    scale(i) = norm;
  }

  ActiveFactor f;
  f.J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));  // L^-T
  f.R = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> active;
  std::vector<double> mult;
  std::vector<bool> in_active(m, false);

  auto violation = [&](int i) {  // positive when violated, in original row units
    return (bound(i) - normal[i].dot(x)) * scale(i);
  };

  const int max_iter = 50 * (m + n) + 100;
  int iter = 0;
  while (true) {
    int p = -1;
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      if (in_active[i] || ignored[i]) continue;
      const double viol = violation(i);
      if (viol > feasibility_tol(problem.rows[i].rhs) && viol > worst) {
        worst = viol;
        p = i;
      }
    }
    if (p < 0) break;

    double added_mult = 0.0;
    while (true) {
      if (++iter > max_iter) return infeasible(iter);
      const int k = f.q;
      const Eigen::VectorXd d = f.J.transpose() * normal[p];
      // Primal direction in the null space of the active rows, and the change
      // of the active multipliers per unit step.
      const Eigen::VectorXd z = f.J.rightCols(n - k) * d.tail(n - k);
      Eigen::VectorXd r = Eigen::VectorXd::Zero(k);
      if (k > 0) {
        r = f.R.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(d.head(k));
      }

      double partial = kInf;
      int drop = -1;
      for (int j = 0; j < k; ++j) {
        if (r(j) > 0.0) {
          const double ratio = mult[j] / r(j);
          if (ratio < partial) {
            partial = ratio;
            drop = j;
          }
        }
      }
      // np lies in the span of the active rows when d has no null-space part.
      const bool dependent = d.tail(n - k).norm() <= 1e-10 * d.norm();
      const double slack_p = normal[p].dot(x) - bound(p);  // negative while violated
      const double full = dependent ? kInf : -slack_p / z.dot(normal[p]);

      if (partial == kInf && full == kInf) return infeasible(iter);

      const double t = std::min(partial, full);
      if (full != kInf) x += t * z;
      for (int j = 0; j < k; ++j) mult[j] -= t * r(j);
      added_mult += t;
      if (full <= partial) {
        add_constraint(f, d);
        active.push_back(p);
        mult.push_back(added_mult);
        in_active[p] = true;
        break;
      }
      in_active[active[drop]] = false;
      active.erase(active.begin() + drop);
      mult.erase(mult.begin() + drop);
      drop_constraint(f, drop);
    }
  }

  polish(problem, normal, bound, active, x, mult);

  sol.status = Status::Optimal;
  sol.x = x;
  sol.iterations = iter;
  sol.objective = problem.objective(x);
  for (std::size_t j = 0; j < active.size(); ++j) {
    sol.multipliers(active[j]) = std::max(mult[j], 0.0) / scale(active[j]);
  }
  sol.active_set = active;
  std::sort(sol.active_set.begin(), sol.active_set.end());
  return sol;
}

KktReport kkt_check(const Problem& problem, const Solution& solution) {
  KktReport rep;
  const int m = static_cast<int>(problem.rows.size());
  if (solution.status != Status::Optimal) {
    rep.ok = false;
    rep.failures.emplace_back("solution is not optimal");
    return rep;
  }
  const Eigen::VectorXd& x = solution.x;
  const Eigen::VectorXd& lambda = solution.multipliers;
  Eigen::VectorXd grad = problem.P * x + problem.q;
  double comp = 0.0;
  rep.min_multiplier = m > 0 ? lambda.minCoeff() : 0.0;
  for (int i = 0; i < m; ++i) {
    const auto& row = problem.rows[i];
    const double sigma = sigma_of(row.sense);
    const double resid = sigma * (row.coeffs.dot(x) - row.rhs);  // <= 0 when satisfied
    rep.primal_violation = std::max(rep.primal_violation, resid);
    grad += lambda(i) * sigma * row.coeffs;
    comp += lambda(i) * resid;
  }
  rep.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  rep.complementarity = std::abs(comp);

  if (rep.primal_violation > kPrimalTol) rep.failures.emplace_back("primal feasibility");
  if (rep.min_multiplier < -kDualTol) rep.failures.emplace_back("dual feasibility");
  if (rep.stationarity >= kStationarityTol) rep.failures.emplace_back("stationarity");
  if (rep.complementarity >= kComplementarityTol) {
    rep.failures.emplace_back("complementary slackness");
  }
  rep.ok = rep.failures.empty();
  return rep;
}

}  // namespace platoon::qp
