#include "platoon/controller.hpp"

#include <algorithm>
#include <cmath>

namespace platoon {

std::string_view to_string(ControllerVariant v) {
  switch (v) {
    case ControllerVariant::ClfCbfQp: return "clf-cbf-qp";
    case ControllerVariant::ClfQp: return "clf-qp";
    case ControllerVariant::SingleVehicleCbf: return "single-cbf";
  }
  return "?";
}

std::optional<ControllerVariant> variant_from_string(std::string_view name) {
  for (auto v : {ControllerVariant::ClfCbfQp, ControllerVariant::ClfQp,
                 ControllerVariant::SingleVehicleCbf}) {
    if (to_string(v) == name) return v;
  }
  return std::nullopt;
}

bool ControllerParams::valid() const {
  const bool h_ok = std::abs(H(0, 1) - H(1, 0)) < 1e-12 &&
                    Eigen::LLT<Eigen::Matrix2d>(H).info() == Eigen::Success;
  return h_ok && p_l > 0 && p_y > 0 && p_psi > 0 && alpha_l > 0 && alpha_y > 0 &&
         alpha_psi > 0 && a_max > 0 && beta_max > 0;
}

namespace {

qp::Row input_row(const ConstraintRow& c, int slack_index) {
  qp::Row row;
  row.coeffs = Eigen::VectorXd::Zero(kDecisionDim);
  row.coeffs(0) = c.coeff_a;
  row.coeffs(1) = c.coeff_beta;
  if (slack_index >= 0) row.coeffs(slack_index) = -c.coeff_slack;
  row.rhs = c.rhs;
  row.sense = c.sense;
  return row;
}

qp::Row box_row(int index, double bound, Sense sense) {
  qp::Row row;
  row.coeffs = Eigen::VectorXd::Zero(kDecisionDim);
  row.coeffs(index) = 1.0;
  row.rhs = bound;
  row.sense = sense;
  return row;
}

}  // namespace

AssembledQp assemble(const ControlContext& ctx, const VehicleGeometry& geom,
                     const CbfParams& cbf, const ControllerParams& ctrl) {
  AssembledQp out;
  auto& pb = out.problem;
  pb.P = Eigen::MatrixXd::Zero(kDecisionDim, kDecisionDim);
  pb.P.topLeftCorner<2, 2>() = ctrl.H;
  pb.P(2, 2) = 2.0 * ctrl.p_l;
  pb.P(3, 3) = 2.0 * ctrl.p_y;
  pb.P(4, 4) = 2.0 * ctrl.p_psi;
  pb.q = Eigen::VectorXd::Zero(kDecisionDim);

  const bool cooperative = ctrl.variant != ControllerVariant::SingleVehicleCbf;
  std::optional<Certificate> lon =
      clf_longitudinal(ctx.ego, ctx.leader, ctx.tau, ctx.clf, geom, ctrl.alpha_l);
  if (!lon) lon = clf_speed(ctx.ego, ctx.clf, ctrl.alpha_l);
  out.clfs = {*lon, clf_lateral(ctx.ego, ctx.clf, ctrl.alpha_y),
              clf_heading(ctx.ego, geom, ctrl.alpha_psi)};
  for (int k = 0; k < 3; ++k) {
    pb.rows.push_back(input_row(out.clfs[k].row, 2 + k));
    out.labels.push_back(out.clfs[k].row.label);
  }

  if (ctrl.variant != ControllerVariant::ClfQp) {
    FsmState state = ctx.state;
    if (!cooperative && (state == FsmState::Split || state == FsmState::Join)) {
      state = FsmState::CarFollowing;
    }
    out.barriers = barrier_bundle(state, ctx.ego, ctx.hood, cbf);
    for (const auto& b : out.barriers) {
      pb.rows.push_back(input_row(b.row, -1));
      out.labels.push_back(b.row.label);
    }
  }

  pb.rows.push_back(box_row(0, ctrl.a_max, Sense::LessEqual));
  pb.rows.push_back(box_row(0, -ctrl.a_max, Sense::GreaterEqual));
  pb.rows.push_back(box_row(1, ctrl.beta_max, Sense::LessEqual));
  pb.rows.push_back(box_row(1, -ctrl.beta_max, Sense::GreaterEqual));
  for (const char* label : {"box_a_max", "box_a_min", "box_beta_max", "box_beta_min"}) {
    out.labels.emplace_back(label);
  }
  return out;
}

ControlInput fallback_input(const VehicleState& ego, const VehicleGeometry& geom,
                            const ControllerParams& ctrl) {
  ControlInput u;
  u.a = -ctrl.a_max;
  // Smallest |beta| that satisfies the heading CLF row without slack.
  const ConstraintRow row = clf_heading(ego, geom, ctrl.alpha_psi).row;
  double beta = 0.0;
  if (row.rhs < 0.0 && row.coeff_beta != 0.0) beta = row.rhs / row.coeff_beta;
  u.beta = std::clamp(beta, -ctrl.beta_max, ctrl.beta_max);
  return u;
}

ControlDecision decide(const ControlContext& ctx, const VehicleGeometry& geom,
                       const CbfParams& cbf, const ControllerParams& ctrl) {
  const AssembledQp qp = assemble(ctx, geom, cbf, ctrl);
  const qp::Solution sol = qp::solve(qp.problem);

  ControlDecision d;
  d.barriers = qp.barriers;
  if (sol.status != qp::Status::Optimal) {
    d.feasible = false;
    d.input = fallback_input(ctx.ego, geom, ctrl);
    return d;
  }
  d.input = {sol.x(0), sol.x(1)};
  d.delta_l = sol.x(2);
  d.delta_y = sol.x(3);
  d.delta_psi = sol.x(4);
  const int first = qp.first_barrier_row;
  const int last = first + static_cast<int>(qp.barriers.size());
  for (int idx : sol.active_set) {
    if (idx >= first && idx < last) d.active_barriers.push_back(qp.labels[idx]);
  }
  return d;
}

}  // namespace platoon
