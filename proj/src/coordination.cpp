#include "platoon/coordination.hpp"

#include <algorithm>
#include <cmath>

namespace platoon {

double headway(const HeadwayProfile& profile, double t_now) {
  const double elapsed = std::max(t_now - profile.t0, 0.0);
  switch (profile.mode) {
    case HeadwayMode::Split:
      return std::clamp(profile.tau_min + profile.rate * elapsed, profile.tau_min,
                        profile.tau_max);
    case HeadwayMode::Join:
      return std::clamp(profile.tau_max - profile.rate * elapsed, profile.tau_min,
                        profile.tau_max);
    case HeadwayMode::Hold:
      break;
  }
  return profile.tau_min;
}

double to_double(LaneProgress p) {
  switch (p) {
    case LaneProgress::Original: return 0.0;
    case LaneProgress::Crossing: return 0.5;
    case LaneProgress::Target: return 1.0;
  }
  return 0.0;
}

bool lane_change_safe(const VehicleState& ego, const Neighborhood& hood, const CbfParams& params) {
  for (const auto& c : barrier_bundle(FsmState::LaneChange, ego, hood, params)) {
    if (c.value < 0.0) return false;
  }
  return true;
}

LaneProgress lane_progress(const VehicleState& s, double origin_center, double target_center,
                           double lane_width, double heading_tol) {
  const double band = 0.25 * lane_width;
  if (std::abs(s.y - origin_center) < band) return LaneProgress::Original;
  if (std::abs(s.y - target_center) < band && std::abs(s.psi) < heading_tol) {
    return LaneProgress::Target;
  }
  return LaneProgress::Crossing;
}

FsmState transition(FsmState current, const TransitionInputs& in) {
  const SignalSet& s = in.own;
  switch (current) {
    case FsmState::CarFollowing:
      if (s.c != 0 && s.e) return FsmState::LaneChange;
      if (s.ps) return FsmState::Split;
      return FsmState::CarFollowing;
    case FsmState::LaneChange:
      if (s.p == LaneProgress::Target) return FsmState::CarFollowing;
      if (!s.e) return FsmState::BackToInitialLane;
      return FsmState::LaneChange;
    case FsmState::BackToInitialLane:
      if (s.p != LaneProgress::Original) return FsmState::BackToInitialLane;
      if (s.c == 0) return FsmState::CarFollowing;
      if (s.e && in.retry_ready) return FsmState::LaneChange;
      return FsmState::BackToInitialLane;
    case FsmState::Split:
      if (s.pj || (in.predecessor && in.predecessor->p == LaneProgress::Target)) {
        return FsmState::Join;
      }
      if (!s.ps) return FsmState::CarFollowing;
      return FsmState::Split;
    case FsmState::Join:
      return in.join_settled ? FsmState::CarFollowing : FsmState::Join;
  }
  return current;
}

RenumberResult renumber(const std::vector<int>& order, int departed) {
  RenumberResult out;
  out.order = order;
  const auto it = std::find(out.order.begin(), out.order.end(), departed);
  if (it == out.order.end()) {
    out.warning = "renumber: vehicle " + std::to_string(departed) + " is not in the platoon";
    return out;
  }
  out.order.erase(it);
  return out;
}

// ---------------------------------------------------------------------------

PlatoonCoordinator::PlatoonCoordinator(std::vector<int> order,
                                       const std::map<int, VehicleState>& initial,
                                       const LaneGeometry& lanes, const VehicleGeometry& geom,
                                       const ClfParams& clf, CoordinationParams params)
    : order_(std::move(order)), lanes_(lanes), geom_(geom), clf_(clf), params_(params) {
  for (int id : order_) {
    CavAgent a;
    a.id = id;
    a.home_lane = lanes_.lane_of(initial.at(id).y);
    a.target_lane = a.home_lane;
    a.profile = params_.headway_template;
    a.profile.mode = HeadwayMode::Hold;
    agents_[id] = a;
  }
}

void PlatoonCoordinator::command_lane_change(int id, int direction) {
  auto& a = agents_.at(id);
  const int target = std::clamp(a.home_lane + direction, 0, lanes_.lane_count - 1);
  if (target == a.home_lane || a.departed) return;
  a.signals.c = direction;
  a.target_lane = target;
}

std::optional<int> PlatoonCoordinator::peer_of(int id) const {
  if (!params_.cooperative) return std::nullopt;
  const auto it = std::find(order_.begin(), order_.end(), id);
  if (it == order_.end() || it == order_.begin()) return std::nullopt;
  return *(it - 1);
}

double PlatoonCoordinator::tau_of(int id, double t) const {
  return headway(agents_.at(id).profile, t);
}

double PlatoonCoordinator::lateral_target(int id) const {
  const auto& a = agents_.at(id);
  if (a.state == FsmState::LaneChange) return lanes_.lane_center(a.target_lane);
  return lanes_.lane_center(a.home_lane);
}

int PlatoonCoordinator::perception_target_lane(int id) const {
  const auto& a = agents_.at(id);
  if (a.state == FsmState::BackToInitialLane) return a.home_lane;
  return a.target_lane;
}

int PlatoonCoordinator::index_of(int id) const {
  const auto it = std::find(order_.begin(), order_.end(), id);
  if (it == order_.end()) return 0;
  return static_cast<int>(it - order_.begin()) + 1;
}

bool PlatoonCoordinator::join_settled(const CavAgent& a, double t,
                                      const std::map<int, VehicleState>& states) const {
  if (headway(a.profile, t) > a.profile.tau_min) return false;
  const auto peer = peer_of(a.id);
  if (!peer) return true;
  const VehicleState& ego = states.at(a.id);
  const VehicleState& lead = states.at(*peer);
  const double s = lead.x - ego.x - geom_.length();
  const double s_d = clf_.s_0 + ego.v * a.profile.tau_min;
  return std::abs(s - s_d) <= params_.join_settle_tol * s_d;
}

void PlatoonCoordinator::update(double t, const std::map<int, VehicleState>& states,
                                const std::map<int, bool>& safe) {
  const std::map<int, CavAgent> prev = agents_;
  std::map<int, CavAgent> next = prev;
  std::vector<int> departures;

  for (std::size_t i = 0; i < order_.size(); ++i) {
    const int id = order_[i];
    const CavAgent& old = prev.at(id);
    CavAgent& a = next.at(id);
    const VehicleState& s = states.at(id);

    const auto e_it = safe.find(id);
    a.signals.e = e_it == safe.end() ? true : e_it->second;
    a.safe_streak = a.signals.e ? old.safe_streak + 1 : 0;

    // Lane progress moves by at most one level per tick.
    if (a.signals.c != 0) {
      const LaneProgress geo =
          lane_progress(s, lanes_.lane_center(a.home_lane), lanes_.lane_center(a.target_lane),
                        lanes_.lane_width, params_.progress_heading_tol);
      const int before = static_cast<int>(old.signals.p);
      int now = static_cast<int>(geo);
      if (old.state == FsmState::LaneChange) {
        now = std::max(before, std::min(now, before + 1));
      } else if (old.state == FsmState::BackToInitialLane) {
        now = now == 0 ? 0 : std::max(before, 1);
      } else {
        now = std::min(now, before + 1);
      }
      a.signals.p = static_cast<LaneProgress>(now);
    }

    // The immediate follower is asked to split while its predecessor changes lanes.
    const CavAgent* pred = i > 0 ? &prev.at(order_[i - 1]) : nullptr;
    const bool pred_changing = pred && (pred->state == FsmState::LaneChange ||
                                        pred->state == FsmState::BackToInitialLane);
    a.signals.ps = params_.cooperative && pred_changing;
    const auto pj_it = pending_join_.find(id);
    a.signals.pj = params_.cooperative && pj_it != pending_join_.end() && pj_it->second;

    TransitionInputs in;
    in.own = a.signals;
    if (pred) in.predecessor = pred->signals;
    in.retry_ready = a.safe_streak >= params_.retry_debounce_ticks;
    in.join_settled = old.state == FsmState::Join && join_settled(old, t, states);

    const FsmState to = transition(old.state, in);
    if (to == old.state) continue;

    events_.push_back({t, id, old.state, to});
    a.state = to;
    a.state_entry = t;
    switch (to) {
      case FsmState::LaneChange:
        if (params_.changer_splits && params_.cooperative &&
            old.profile.mode != HeadwayMode::Split) {
          a.profile.mode = HeadwayMode::Split;
          a.profile.t0 = t;
        }
        break;
      case FsmState::Split:
        a.profile.mode = HeadwayMode::Split;
        a.profile.t0 = t;
        break;
      case FsmState::Join:
        a.profile.mode = HeadwayMode::Join;
        a.profile.t0 = t;
        a.signals.pj = false;
        break;
      case FsmState::CarFollowing:
        a.profile.mode = HeadwayMode::Hold;
        if (old.state == FsmState::LaneChange) {
          // Lane change finished: the CAV leaves the platoon in its new lane.
          a.home_lane = a.target_lane;
          a.signals.c = 0;
          a.departed = true;
          departures.push_back(id);
        }
        break;
      case FsmState::BackToInitialLane:
        a.safe_streak = 0;
        break;
    }
  }

  for (int id : departures) {
    const auto it = std::find(order_.begin(), order_.end(), id);
    if (it != order_.end() && it + 1 != order_.end()) pending_join_[*(it + 1)] = true;
  }
  for (auto& [id, a] : next) {
    if (a.state == FsmState::Join || a.state == FsmState::CarFollowing) pending_join_.erase(id);
  }
  agents_ = std::move(next);
  for (int id : departures) {
    RenumberResult r = renumber(order_, id);
    order_ = std::move(r.order);
    if (r.warning) warnings_.push_back(*r.warning);
  }
}

}  // namespace platoon
