#include "platoon/certificates.hpp"

#include <cmath>

namespace platoon {

std::string_view to_string(FsmState s) {
  switch (s) {
    case FsmState::CarFollowing: return "CarFollowing";
    case FsmState::LaneChange: return "LaneChange";
    case FsmState::BackToInitialLane: return "BackToInitialLane";
    case FsmState::Split: return "Split";
    case FsmState::Join: return "Join";
  }
  return "?";
}

std::optional<FsmState> fsm_state_from_string(std::string_view name) {
  for (FsmState s : {FsmState::CarFollowing, FsmState::LaneChange, FsmState::BackToInitialLane,
                     FsmState::Split, FsmState::Join}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::string_view to_string(NeighborRole r) {
  switch (r) {
    case NeighborRole::Fc: return "fc";
    case NeighborRole::Ft: return "ft";
    case NeighborRole::Bt: return "bt";
    case NeighborRole::Peer: return "peer";
  }
  return "?";
}

double ConstraintRow::margin(double a, double beta, double slack) const {
  const double lhs = coeff_a * a + coeff_beta * beta;
  const double bound = rhs + coeff_slack * slack;
  return sense == Sense::LessEqual ? bound - lhs : lhs - bound;
}

namespace {

// Partial derivatives of a certificate: gradient w.r.t. the ego state and the
// explicit time derivative contributed by the neighbor's motion.
struct Partials {
  StateVector ego = StateVector::Zero();
  double explicit_dt = 0.0;
};

// l_r only enters through d/dpsi, which is zero for every barrier.
ConstraintRow lie_row(const VehicleState& ego, const Partials& d, double l_r) {
  VehicleGeometry geom;
  geom.l_r = l_r;
  const Eigen::RowVector2d lg = d.ego.transpose() * control_matrix(ego, geom);
  const double lf = d.ego.dot(drift(ego));
  ConstraintRow row;
  row.coeff_a = lg(0);
  row.coeff_beta = lg(1);
  row.rhs = -lf - d.explicit_dt;
  return row;
}

Certificate clf_certificate(const VehicleState& ego, double value, const Partials& d, double l_r,
                            double decay, const char* label) {
  Certificate c;
  c.value = value;
  c.row = lie_row(ego, d, l_r);
  c.row.rhs += -decay * value;
  c.row.coeff_slack = 1.0;
  c.row.sense = Sense::LessEqual;
  c.row.label = label;
  return c;
}

Certificate cbf_certificate(const VehicleState& ego, double value, const Partials& d,
                            double gamma, const NeighborObservation& n) {
  Certificate c;
  c.value = value;
  c.row = lie_row(ego, d, 1.0);
  c.row.rhs += -gamma * value;
  c.row.sense = Sense::GreaterEqual;
  c.row.label = std::string("cbf_") + std::string(to_string(n.role));
  c.neighbor_id = n.id;
  c.role = n.role;
  return c;
}

double neighbor_vx(const NeighborObservation& n) { return n.v * std::cos(n.psi); }
double neighbor_vy(const NeighborObservation& n) { return n.v * std::sin(n.psi); }

Certificate front_certificate(const VehicleState& ego, const NeighborObservation& f,
                              const CbfParams& p, double gamma) {
  const double closing = ego.v - f.v;
  const bool braking_branch = ego.v >= f.v;
  double h = (f.x - ego.x) - (1.0 + p.eps_x) * ego.v;
  Partials d;
  d.ego(0) = -1.0;
  d.ego(3) = -(1.0 + p.eps_x);
  double dh_dvf = 0.0;
  if (braking_branch) {
    h -= closing * closing / (2.0 * p.a_max);
    d.ego(3) -= closing / p.a_max;
    dh_dvf = closing / p.a_max;
  }
  d.explicit_dt = neighbor_vx(f) + dh_dvf * f.a;
  return cbf_certificate(ego, h, d, gamma, f);
}

Certificate rear_certificate(const VehicleState& ego, const NeighborObservation& b,
                             const CbfParams& p, double gamma) {
  const double closing = b.v - ego.v;
  const bool braking_branch = b.v >= ego.v;
  double h = (ego.x - b.x) - (1.0 + p.eps_x) * b.v;
  Partials d;
  d.ego(0) = 1.0;
  double dh_dvb = -(1.0 + p.eps_x);
  if (braking_branch) {
    h -= closing * closing / (2.0 * p.a_max);
    d.ego(3) = closing / p.a_max;
    dh_dvb -= closing / p.a_max;
  }
  d.explicit_dt = -neighbor_vx(b) + dh_dvb * b.a;
  return cbf_certificate(ego, h, d, gamma, b);
}

Certificate lateral_certificate(const VehicleState& ego, const NeighborObservation& n,
                                const CbfParams& p, double gamma, int side) {
  const double s = side >= 0 ? 1.0 : -1.0;
  const double h = s * (n.y - ego.y) - p.eps_y;
  Partials d;
  d.ego(1) = -s;
  d.explicit_dt = s * neighbor_vy(n);
  return cbf_certificate(ego, h, d, gamma, n);
}

}  // namespace

std::optional<Certificate> clf_longitudinal(const VehicleState& ego,
                                            const NeighborObservation& leader, double tau,
                                            const ClfParams& params,
                                            const VehicleGeometry& geom, double decay) {
  if (!leader.present) return std::nullopt;
  const double spacing = leader.x - ego.x - geom.length();
  const double desired = params.s_0 + ego.v * tau;
  const double speed_err = ego.v - params.v_d;
  const double gap_err = spacing - desired;
  const double value =
      params.alpha1 * speed_err * speed_err + params.alpha2 * gap_err * gap_err;
  Partials d;
  d.ego(0) = -2.0 * params.alpha2 * gap_err;
  d.ego(3) = 2.0 * params.alpha1 * speed_err - 2.0 * params.alpha2 * gap_err * tau;
  d.explicit_dt = 2.0 * params.alpha2 * gap_err * neighbor_vx(leader);
  Certificate c = clf_certificate(ego, value, d, geom.l_r, decay, "clf_l");
  c.neighbor_id = leader.id;
  c.role = leader.role;
  return c;
}

Certificate clf_speed(const VehicleState& ego, const ClfParams& params, double decay) {
  const double speed_err = ego.v - params.v_d;
  Partials d;
  d.ego(3) = 2.0 * params.alpha1 * speed_err;
  return clf_certificate(ego, params.alpha1 * speed_err * speed_err, d, 1.0, decay, "clf_l");
}

Certificate clf_lateral(const VehicleState& ego, const ClfParams& params, double decay) {
  const double err = ego.y - params.y_d;
  Partials d;
  d.ego(1) = 2.0 * err;
  return clf_certificate(ego, err * err, d, 1.0, decay, "clf_y");
}

Certificate clf_heading(const VehicleState& ego, const VehicleGeometry& geom, double decay) {
  Partials d;
  d.ego(2) = 2.0 * ego.psi;
  return clf_certificate(ego, ego.psi * ego.psi, d, geom.l_r, decay, "clf_psi");
}

std::optional<Certificate> barrier_front(const VehicleState& ego,
                                         const NeighborObservation& front,
                                         const CbfParams& params, double gamma) {
  if (!front.present) return std::nullopt;
  return front_certificate(ego, front, params, gamma);
}

std::optional<Certificate> barrier_rear(const VehicleState& ego, const NeighborObservation& rear,
                                        const CbfParams& params, double gamma) {
  if (!rear.present) return std::nullopt;
  return rear_certificate(ego, rear, params, gamma);
}

std::optional<Certificate> barrier_overlap_front(const VehicleState& ego,
                                                 const NeighborObservation& front_target,
                                                 const CbfParams& params, double gamma,
                                                 int side) {
  if (!front_target.present) return std::nullopt;
  if (front_target.x - ego.x >= 0.0) return front_certificate(ego, front_target, params, gamma);
  return lateral_certificate(ego, front_target, params, gamma, side);
}

std::optional<Certificate> barrier_overlap_rear(const VehicleState& ego,
                                                const NeighborObservation& rear_target,
                                                const CbfParams& params, double gamma,
                                                int side) {
  if (!rear_target.present) return std::nullopt;
  if (ego.x - rear_target.x >= 0.0) return rear_certificate(ego, rear_target, params, gamma);
  return lateral_certificate(ego, rear_target, params, gamma, side);
}

std::vector<Certificate> barrier_bundle(FsmState state, const VehicleState& ego,
                                        const Neighborhood& hood, const CbfParams& params) {
  std::vector<Certificate> rows;
  auto push = [&rows](std::optional<Certificate> c) {
    if (c) rows.push_back(std::move(*c));
  };
  auto side_of = [&ego](const NeighborObservation& n) { return n.y >= ego.y ? 1 : -1; };

  switch (state) {
    case FsmState::CarFollowing:
      push(barrier_front(ego, hood.fc, params, params.gamma_fc));
      break;
    case FsmState::LaneChange:
      push(barrier_front(ego, hood.fc, params, params.gamma_fc));
      push(barrier_front(ego, hood.ft, params, params.gamma_ft));
      push(barrier_rear(ego, hood.bt, params, params.gamma_bt));
      break;
    case FsmState::BackToInitialLane:
      push(barrier_front(ego, hood.fc, params, params.gamma_fc));
      push(barrier_overlap_front(ego, hood.ft, params, params.gamma_ft, side_of(hood.ft)));
      push(barrier_overlap_rear(ego, hood.bt, params, params.gamma_bt, side_of(hood.bt)));
      break;
    case FsmState::Split:
    case FsmState::Join:
      push(barrier_front(ego, hood.peer, params, params.gamma_fc));
      break;
  }
  if (state == FsmState::Split || state == FsmState::Join) {
    for (auto& c : rows) c.row.label = state == FsmState::Split ? "cbf_split" : "cbf_join";
  }
  return rows;
}

}  // namespace platoon
