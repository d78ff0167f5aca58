#pragma once

#include <optional>
#include <string>
#include <vector>

#include "platoon/fsm_state.hpp"
#include "platoon/vehicle.hpp"

namespace platoon {

struct ClfParams {
  double alpha1 = 1.0;   // speed-error weight
  double alpha2 = 1.0;   // spacing-error weight
  double v_d = 27.5;     // desired speed (m/s)
  double y_d = 1.8;      // desired lateral position (m)
  double s_0 = 28.5;     // standstill spacing gap (m)
};

struct CbfParams {
  double eps_x = 0.2;    // longitudinal safety factor on the 1 s headway term
  double eps_y = 0.5;    // lateral margin (m)
  double a_max = 9.0;    // braking capability assumed in the stopping-distance term
  double gamma_fc = 1.0;
  double gamma_ft = 1.0;
  double gamma_bt = 1.0;
};

/// Relative position of a sensed vehicle with respect to the ego CAV.
/// Peer marks a platoon CAV bound by V2V (split and join barriers, leader spacing).
enum class NeighborRole { Fc, Ft, Bt, Peer };

std::string_view to_string(NeighborRole r);

struct NeighborObservation {
  bool present = false;
  int id = -1;  // world vehicle id
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double v = 0.0;
  // Observed rate of change of v. Zero reproduces the constant-velocity
  // neighbor model; the simulator fills it from successive V2V speeds.
  double a = 0.0;
  int cav_index = 0;  // i of the (i, j) pair
  NeighborRole role = NeighborRole::Fc;

  static NeighborObservation absent() { return {}; }
  static NeighborObservation of(const VehicleState& s, int id = -1, double accel = 0.0) {
    NeighborObservation n;
    n.present = true;
    n.id = id;
    n.x = s.x;
    n.y = s.y;
    n.psi = s.psi;
    n.v = s.v;
    n.a = accel;
    return n;
  }
};

/// The sensed surroundings of one CAV plus its platoon leader binding.
struct Neighborhood {
  NeighborObservation fc;
  NeighborObservation ft;
  NeighborObservation bt;
  NeighborObservation peer;  // CAV i-1 (i-2 before renumbering in Join)
};

enum class Sense { LessEqual, GreaterEqual };

/// Linear row in the ego input:
///   coeff_a * a + coeff_beta * beta  (sense)  rhs + coeff_slack * slack
/// CLF rows carry coeff_slack = 1 on their own relaxation variable; CBF rows are hard.
struct ConstraintRow {
  double coeff_a = 0.0;
  double coeff_beta = 0.0;
  double coeff_slack = 0.0;
  double rhs = 0.0;
  Sense sense = Sense::LessEqual;
  std::string label;

  /// Signed satisfaction margin at (a, beta, slack); >= 0 means satisfied.
  double margin(double a, double beta, double slack = 0.0) const;
};

/// Value of a CLF or CBF together with the constraint row it induces.
struct Certificate {
  double value = 0.0;
  ConstraintRow row;
  int neighbor_id = -1;
  NeighborRole role = NeighborRole::Fc;
};

/// V_l = alpha1 (v - v_d)^2 + alpha2 (s - s_d)^2 with s = x_lead - x - L and
/// s_d = s_0 + v tau. The leader is extrapolated at constant velocity.
std::optional<Certificate> clf_longitudinal(const VehicleState& ego,
                                            const NeighborObservation& leader, double tau,
                                            const ClfParams& params,
                                            const VehicleGeometry& geom, double decay);

/// Speed-tracking fallback when no leader is bound: V = alpha1 (v - v_d)^2.
Certificate clf_speed(const VehicleState& ego, const ClfParams& params, double decay);

/// V_y = (y - y_d)^2.
Certificate clf_lateral(const VehicleState& ego, const ClfParams& params, double decay);

/// V_psi = psi^2.
Certificate clf_heading(const VehicleState& ego, const VehicleGeometry& geom, double decay);

/// Longitudinal barrier against a vehicle ahead:
///   h = (x_f - x) - (1 + eps_x) v - [v >= v_f] (v_f - v)^2 / (2 a_max)
std::optional<Certificate> barrier_front(const VehicleState& ego,
                                         const NeighborObservation& front,
                                         const CbfParams& params, double gamma);

/// Longitudinal barrier against a vehicle behind:
///   h = (x - x_b) - (1 + eps_x) v_b - [v_b >= v] (v_b - v)^2 / (2 a_max)
std::optional<Certificate> barrier_rear(const VehicleState& ego, const NeighborObservation& rear,
                                        const CbfParams& params, double gamma);

/// Front barrier while the target-lane vehicle is ahead, otherwise the lateral
/// barrier side * (y_n - y) - eps_y. side = +1 when the neighbor's lane is to
/// the left (larger y) of the ego.
std::optional<Certificate> barrier_overlap_front(const VehicleState& ego,
                                                 const NeighborObservation& front_target,
                                                 const CbfParams& params, double gamma,
                                                 int side = 1);

/// Rear barrier while the target-lane vehicle is behind, otherwise lateral.
std::optional<Certificate> barrier_overlap_rear(const VehicleState& ego,
                                                const NeighborObservation& rear_target,
                                                const CbfParams& params, double gamma,
                                                int side = 1);

/// All hard barrier rows that apply in the given state. Absent neighbors give no row.
std::vector<Certificate> barrier_bundle(FsmState state, const VehicleState& ego,
                                        const Neighborhood& hood, const CbfParams& params);

}  // namespace platoon
