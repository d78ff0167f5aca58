#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "platoon/certificates.hpp"
#include "platoon/fsm_state.hpp"
#include "platoon/qp.hpp"
#include "platoon/vehicle.hpp"

namespace platoon {

enum class ControllerVariant {
  ClfCbfQp,          // relaxed CLFs + hard CBFs with platoon cooperation
  ClfQp,             // relaxed CLFs only
  SingleVehicleCbf,  // CLF-CBF-QP without split/join cooperation
};

std::string_view to_string(ControllerVariant v);
std::optional<ControllerVariant> variant_from_string(std::string_view name);

struct ControllerParams {
  Eigen::Matrix2d H = (Eigen::Matrix2d() << 1.0, 0.0, 0.0, 100.0).finished();
  double p_l = 15.0;
  double p_y = 0.05;
  double p_psi = 400.0;
  double alpha_l = 1.7;
  double alpha_y = 0.6;
  double alpha_psi = 18.0;
  ControllerVariant variant = ControllerVariant::ClfCbfQp;
  double a_max = 9.0;
  double beta_max = 0.3;

  bool valid() const;
};

/// Everything one CAV's lower-level controller sees in a tick.
struct ControlContext {
  VehicleState ego;
  Neighborhood hood;
  // Vehicle whose spacing the longitudinal CLF regulates; absent means speed tracking.
  NeighborObservation leader;
  FsmState state = FsmState::CarFollowing;
  double tau = 0.6;
  ClfParams clf;  // v_d and y_d are the FSM-selected targets
};

/// Decision vector layout [a, beta, delta_l, delta_y, delta_psi].
inline constexpr int kDecisionDim = 5;

struct AssembledQp {
  qp::Problem problem;
  std::vector<std::string> labels;    // one per row
  std::vector<Certificate> clfs;      // longitudinal, lateral, heading
  std::vector<Certificate> barriers;  // hard rows, in row order after the CLFs
  int first_barrier_row = 3;
};

struct ControlDecision {
  ControlInput input;
  double delta_l = 0.0;
  double delta_y = 0.0;
  double delta_psi = 0.0;
  bool feasible = true;
  std::vector<std::string> active_barriers;
  std::vector<Certificate> barriers;  // evaluated barriers (values for logging)
};

AssembledQp assemble(const ControlContext& ctx, const VehicleGeometry& geom,
                     const CbfParams& cbf, const ControllerParams& ctrl);

/// Solves the assembled QP. An infeasible QP is reported in the decision and
/// answered with full braking plus heading-only steering.
ControlDecision decide(const ControlContext& ctx, const VehicleGeometry& geom,
                       const CbfParams& cbf, const ControllerParams& ctrl);

/// Input used when the QP has no solution.
ControlInput fallback_input(const VehicleState& ego, const VehicleGeometry& geom,
                            const ControllerParams& ctrl);

}  // namespace platoon
