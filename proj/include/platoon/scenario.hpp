#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "platoon/certificates.hpp"
#include "platoon/controller.hpp"
#include "platoon/coordination.hpp"
#include "platoon/vehicle.hpp"

namespace platoon {

/// From `start` on, accelerate at `accel` until `target` speed is reached (then
/// hold it), or indefinitely when no target is given. Speed never drops below 0.
struct SpeedSegment {
  double start = 0.0;
  double accel = 0.0;
  std::optional<double> target;
};

/// Lateral move to the center of `target_lane` along a quintic blend.
struct LaneManeuver {
  double start = 0.0;
  int target_lane = 0;
  double duration = 3.0;
};

/// Open-loop behavior of a human-driven vehicle.
struct HdvScript {
  VehicleState initial;
  std::vector<SpeedSegment> segments;  // time-ordered
  std::optional<LaneManeuver> maneuver;

  bool valid() const;
};

/// Quintic smoothstep 10 s^3 - 15 s^4 + 6 s^5 on [0, 1], clamped outside.
double quintic_blend(double s);

/// Longitudinal speed of the script at time t (the lateral motion is not included).
double hdv_longitudinal_speed(const HdvScript& script, double t);

/// Scripted longitudinal speed and lateral position at time t.
std::pair<double, double> hdv_speed(const HdvScript& script, double t, const LaneGeometry& lanes);

/// Full pose at time t. Reported v and psi include the lateral component of the
/// lane-change maneuver: v = hypot(v_long, y'), psi = atan2(y', v_long).
VehicleState hdv_kinematics(const HdvScript& script, double t, const LaneGeometry& lanes);

/// Scripted longitudinal acceleration at time t.
double hdv_accel(const HdvScript& script, double t);

struct CavSpec {
  int id = 0;
  std::string name;
  VehicleState initial;
};

struct HdvSpec {
  int id = 0;
  std::string name;
  HdvScript script;
};

struct ScenarioConfig {
  std::string name;
  std::vector<CavSpec> cavs;  // platoon order, leader first
  std::vector<HdvSpec> hdvs;
  LaneGeometry lanes;
  VehicleGeometry geom;
  double dt = 0.05;
  double duration = 20.0;
  ControllerParams ctrl;
  ClfParams clf;
  CbfParams cbf;
  CoordinationParams coordination;
  int lane_changer = 2;      // CAV id receiving the command
  int direction = 1;         // +1 left, -1 right
  double command_time = 0.0;
  bool neighbor_accel = false;  // feed observed neighbor accelerations into the barriers
  unsigned seed = 0;           // reserved; runs are deterministic

  /// Empty when valid, otherwise the first problem found.
  std::optional<std::string> validate() const;
};

std::vector<std::string> scenario_names();

/// Preset configuration by name (cutin, fdec, bacc, ffdec). Throws
/// std::invalid_argument for an unknown name.
ScenarioConfig scenario_preset(const std::string& name);

}  // namespace platoon
