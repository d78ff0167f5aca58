#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "platoon/certificates.hpp"
#include "platoon/coordination.hpp"
#include "platoon/scenario.hpp"
#include "platoon/vehicle.hpp"

namespace platoon {

/// One vehicle in the world snapshot of a tick.
struct WorldVehicle {
  int id = 0;
  bool cav = false;
  VehicleState state;
  double accel = 0.0;  // measured acceleration, zero unless sim.neighbor_accel is set
};

using Snapshot = std::vector<WorldVehicle>;

/// Nearest vehicle ahead in the ego's current lane (fc) and nearest ahead /
/// behind in target_lane (ft / bt). Lane membership is the nearest lane center.
Neighborhood perceive(int ego_id, const Snapshot& world, int target_lane,
                      const LaneGeometry& lanes);

/// Oriented footprint overlap (separating-axis test). Each footprint spans
/// [-l_rc, l_fc] along the heading and +-w/2 across it, around the c.g.
bool footprints_overlap(const VehicleState& a, const VehicleState& b, const VehicleGeometry& geom);

/// Colliding id pairs (smaller id first), in ascending order.
std::vector<std::pair<int, int>> detect_collision(const Snapshot& world,
                                                  const VehicleGeometry& geom);

/// Bumper-to-bumper gap over closing speed, +inf when the gap is opening.
double ttc(const VehicleState& ego, const VehicleState& neighbor, const VehicleGeometry& geom);

struct LogRow {
  double t = 0.0;
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double v = 0.0;
  double a = 0.0;
  std::optional<double> beta;
  std::optional<FsmState> fsm_state;
  std::optional<double> h_fc;  // front barrier (the platoon-peer barrier in Split / Join)
  std::optional<double> h_ft;
  std::optional<double> h_bt;
  std::optional<double> delta_l;
  std::optional<double> delta_y;
  std::optional<double> delta_psi;
  std::optional<bool> feasible;
  bool collision = false;
};

using TrajectoryLog = std::vector<LogRow>;

struct CollisionReport {
  bool occurred = false;
  double first_time = 0.0;
  std::pair<int, int> pair{-1, -1};
  double min_ttc = std::numeric_limits<double>::infinity();
};

struct InfeasibleEvent {
  double t = 0.0;
  int id = 0;
};

struct RunResult {
  TrajectoryLog log;
  CollisionReport collision;
  std::vector<InfeasibleEvent> infeasible;
  std::vector<TransitionEvent> transitions;
  std::vector<std::string> warnings;
};

/// Ticks the world for config.duration: snapshot, lane-change safety and
/// perception, state-machine update, per-CAV QP, HDV scripts, integration.
RunResult run(const ScenarioConfig& config);

}  // namespace platoon
