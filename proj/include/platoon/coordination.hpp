#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "platoon/certificates.hpp"
#include "platoon/fsm_state.hpp"
#include "platoon/vehicle.hpp"

namespace platoon {

// ---------------------------------------------------------------------------
// Headway scheduling

enum class HeadwayMode { Split, Join, Hold };

struct HeadwayProfile {
  double t0 = 0.0;  // state entry time (s)
  HeadwayMode mode = HeadwayMode::Hold;
  double tau_min = 0.6;
  double tau_max = 1.4;
  double rate = 0.2;  // s of headway per s
};

/// Split ramps up from tau_min, join ramps down from tau_max; both are clamped
/// to [tau_min, tau_max]. Hold stays at tau_min.
double headway(const HeadwayProfile& profile, double t_now);

// ---------------------------------------------------------------------------
// Signals

/// Lane-position progress: 0 in the original lane, 0.5 crossing, 1 in the target lane.
enum class LaneProgress { Original, Crossing, Target };

double to_double(LaneProgress p);

struct SignalSet {
  bool e = true;    // safe lane change condition
  bool ps = false;  // prepare split
  bool pj = false;  // prepare join
  int c = 0;        // lane-change command: +1 left, -1 right, 0 none
  LaneProgress p = LaneProgress::Original;

  bool valid() const { return c >= -1 && c <= 1; }
};

/// e = 1 iff every present lane-change barrier (fc front, ft front, bt rear)
/// is non-negative. Absent neighbors count as safe.
bool lane_change_safe(const VehicleState& ego, const Neighborhood& hood, const CbfParams& params);

/// Geometric lane progress of a vehicle moving from origin to target lane:
/// Original within a quarter lane of the origin center, Target within a quarter
/// lane of the target center with |psi| below heading_tol, Crossing otherwise.
LaneProgress lane_progress(const VehicleState& s, double origin_center, double target_center,
                           double lane_width, double heading_tol = 0.05);

struct TransitionInputs {
  SignalSet own;
  std::optional<SignalSet> predecessor;  // the platoon CAV directly ahead
  bool retry_ready = true;               // e held for the debounce window
  bool join_settled = false;             // tau at minimum and gap within tolerance
};

/// Total transition function of the platoon state machine:
///   CarFollowing --(c != 0 and e)--> LaneChange
///   CarFollowing --(ps)--> Split
///   LaneChange --(p = 1)--> CarFollowing (target lane)
///   LaneChange --(not e and p < 1)--> BackToInitialLane
///   BackToInitialLane --(p = 0, e, c != 0, debounced)--> LaneChange
///   BackToInitialLane --(p = 0, c = 0)--> CarFollowing
///   Split --(pj or predecessor p = 1)--> Join
///   Split --(not ps)--> CarFollowing
///   Join --(settled)--> CarFollowing
FsmState transition(FsmState current, const TransitionInputs& in);

// ---------------------------------------------------------------------------
// Platoon ordering

struct RenumberResult {
  std::vector<int> order;
  std::optional<std::string> warning;
};

/// Removes the departed CAV; followers move up one index so that a follower of
/// the departed CAV is now bound to its old i-2.
RenumberResult renumber(const std::vector<int>& order, int departed);

// ---------------------------------------------------------------------------
// Per-tick coordination

struct CoordinationParams {
  bool cooperative = true;        // split/join signalling (off for single-vehicle control)
  bool changer_splits = true;     // lane changer widens its own headway while changing
  int retry_debounce_ticks = 10;  // consecutive e = 1 ticks before a retry
  double join_settle_tol = 0.05;  // relative gap error to leave Join
  double progress_heading_tol = 0.05;
  HeadwayProfile headway_template;
};

struct CavAgent {
  int id = -1;
  FsmState state = FsmState::CarFollowing;
  SignalSet signals;
  HeadwayProfile profile;
  int home_lane = 0;    // lane the CAV keeps when not changing lanes
  int target_lane = 0;  // lane requested by the command
  int safe_streak = 0;
  bool departed = false;  // left the platoon after a completed lane change
  double state_entry = 0.0;
};

struct TransitionEvent {
  double t = 0.0;
  int id = -1;
  FsmState from = FsmState::CarFollowing;
  FsmState to = FsmState::CarFollowing;
};

/// Higher-level controller for all CAVs. Every update reads only the previous
/// tick's agents and the supplied snapshot, then commits all agents at once.
class PlatoonCoordinator {
 public:
  PlatoonCoordinator(std::vector<int> order, const std::map<int, VehicleState>& initial,
                     const LaneGeometry& lanes, const VehicleGeometry& geom,
                     const ClfParams& clf, CoordinationParams params);

  /// Issues a lane-change command (direction +1 / -1) to one CAV.
  void command_lane_change(int id, int direction);

  /// safe[id] is the freshly evaluated e signal of each CAV holding a command.
  void update(double t, const std::map<int, VehicleState>& states,
              const std::map<int, bool>& safe);

  const std::vector<int>& order() const { return order_; }
  const CavAgent& agent(int id) const { return agents_.at(id); }
  const std::map<int, CavAgent>& agents() const { return agents_; }
  const std::vector<TransitionEvent>& events() const { return events_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Platoon CAV whose spacing this CAV regulates (its current i-1), if any.
  std::optional<int> peer_of(int id) const;
  double tau_of(int id, double t) const;
  /// Lateral reference for the lateral CLF.
  double lateral_target(int id) const;
  /// Lane whose vehicles fill the ft / bt slots for this CAV.
  int perception_target_lane(int id) const;
  /// 1-based position in the platoon (0 when departed).
  int index_of(int id) const;

 private:
  bool join_settled(const CavAgent& a, double t, const std::map<int, VehicleState>& states) const;

  std::vector<int> order_;
  std::map<int, CavAgent> agents_;
  LaneGeometry lanes_;
  VehicleGeometry geom_;
  ClfParams clf_;
  CoordinationParams params_;
  std::vector<TransitionEvent> events_;
  std::vector<std::string> warnings_;
  std::map<int, bool> pending_join_;  // follower id -> pj raised by a completed lane change
};

}  // namespace platoon
