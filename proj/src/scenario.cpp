#include "platoon/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace platoon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Longitudinal {
  double x = 0.0;
  double v = 0.0;
  double a = 0.0;  // acceleration in effect at the end of the integration
};

// Advances (x, v) by `span` seconds under one segment's rule.
void advance(Longitudinal& s, const SpeedSegment& seg, double span) {
  if (span <= 0.0) return;
  double reach = kInf;  // time until the segment stops accelerating
  if (seg.accel == 0.0) {
    reach = 0.0;
  } else if (seg.target) {
    const double dv = *seg.target - s.v;
    reach = dv * seg.accel > 0.0 ? dv / seg.accel : 0.0;
  }
  if (seg.accel < 0.0) reach = std::min(reach, s.v / -seg.accel);

  const double t1 = std::min(span, reach);
  s.x += s.v * t1 + 0.5 * seg.accel * t1 * t1;
  s.v = std::max(s.v + seg.accel * t1, 0.0);
  s.x += s.v * (span - t1);
  s.a = span < reach ? seg.accel : 0.0;
}

Longitudinal integrate(const HdvScript& script, double t) {
  Longitudinal s{script.initial.x, script.initial.v, 0.0};
  double clock = 0.0;
  for (std::size_t k = 0; k < script.segments.size() && clock < t; ++k) {
    const auto& seg = script.segments[k];
    const double start = std::max(seg.start, 0.0);
    if (start > clock) {
      const double until = std::min(start, t);
      s.x += s.v * (until - clock);
      s.a = 0.0;
      clock = until;
      if (clock >= t) break;
    }
    const double end = k + 1 < script.segments.size() ? script.segments[k + 1].start : kInf;
    // Assign rather than accumulate so rounding cannot leave a sliver before t.
    const double until = std::min(end, t);
    advance(s, seg, until - clock);
    clock = until;
  }
  if (clock < t) {
    s.x += s.v * (t - clock);
    s.a = 0.0;
  }
  return s;
}

// Lateral position and rate of the lane-change maneuver.
std::pair<double, double> lateral(const HdvScript& script, double t, const LaneGeometry& lanes) {
  const double y0 = script.initial.y;
  if (!script.maneuver || t <= script.maneuver->start) return {y0, 0.0};
  const auto& m = script.maneuver;
  const double shift = lanes.lane_center(m->target_lane) - y0;
  const double s = (t - m->start) / m->duration;
  if (s >= 1.0) return {y0 + shift, 0.0};
  const double rate = 30.0 * s * s * (1.0 - s) * (1.0 - s);  // derivative of the blend
  return {y0 + shift * quintic_blend(s), shift * rate / m->duration};
}

// Accelerate at `accel` from `start` until `target` (if any).
SpeedSegment seg(double start, double accel, std::optional<double> target = std::nullopt) {
  return {start, accel, target};
}

VehicleState at(double x, double y, double v) { return {x, y, 0.0, v}; }

}  // namespace

bool HdvScript::valid() const {
  if (!initial.valid()) return false;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    if (!std::isfinite(segments[k].start) || !std::isfinite(segments[k].accel)) return false;
    if (segments[k].target && *segments[k].target < 0.0) return false;
    if (k > 0 && segments[k].start <= segments[k - 1].start) return false;
  }
  return !maneuver || maneuver->duration > 0.0;
}

double quintic_blend(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double hdv_longitudinal_speed(const HdvScript& script, double t) {
  return integrate(script, t).v;
}

std::pair<double, double> hdv_speed(const HdvScript& script, double t, const LaneGeometry& lanes) {
  return {hdv_longitudinal_speed(script, t), lateral(script, t, lanes).first};
}

VehicleState hdv_kinematics(const HdvScript& script, double t, const LaneGeometry& lanes) {
  const Longitudinal lon = integrate(script, t);
  const auto [y, y_rate] = lateral(script, t, lanes);
  VehicleState s;
  s.x = lon.x;
  s.y = y;
  s.v = std::hypot(lon.v, y_rate);
  s.psi = y_rate == 0.0 ? 0.0 : std::atan2(y_rate, lon.v);
  return s;
}

double hdv_accel(const HdvScript& script, double t) { return integrate(script, t).a; }

std::optional<std::string> ScenarioConfig::validate() const {
  if (!(dt > 0.0)) return "sim.dt must be positive";
  if (!(duration > 0.0)) return "sim.duration must be positive";
  if (cavs.empty()) return "scenario has no CAVs";
  if (!geom.valid()) return "vehicle geometry must be positive";
  if (!(lanes.lane_width > 0.0) || lanes.lane_count < 1) return "invalid lane geometry";
  if (!ctrl.valid()) return "controller parameters invalid (H must be SPD, weights positive)";
  if (direction != 1 && direction != -1) return "direction must be +1 or -1";
  if (!(cbf.a_max > 0.0)) return "cbf.a_max must be positive";
  if (!(cbf.eps_x >= 0.0 && cbf.eps_x <= 1.0)) return "cbf.eps_x must lie in [0, 1]";
  if (!(cbf.eps_y > 0.0)) return "cbf.eps_y must be positive";
  if (!(cbf.gamma_fc > 0.0 && cbf.gamma_ft > 0.0 && cbf.gamma_bt > 0.0)) {
    return "cbf gammas must be positive";
  }
  if (!(clf.alpha1 > 0.0 && clf.alpha2 > 0.0 && clf.s_0 > 0.0)) {
    return "clf.alpha1, clf.alpha2 and clf.s_0 must be positive";
  }

  std::set<int> ids;
  bool changer_found = false;
  auto on_center = [this](double y) {
    return std::abs(y - lanes.lane_center(lanes.lane_of(y))) < 1e-9;
  };
  for (const auto& c : cavs) {
    if (!ids.insert(c.id).second) return "duplicate vehicle id " + std::to_string(c.id);
    if (!c.initial.valid()) return "invalid initial state for " + c.name;
    if (!on_center(c.initial.y)) return c.name + " does not start on a lane center";
    changer_found = changer_found || c.id == lane_changer;
  }
  for (const auto& h : hdvs) {
    if (!ids.insert(h.id).second) return "duplicate vehicle id " + std::to_string(h.id);
    if (!h.script.valid()) return "invalid script for " + h.name;
    if (!on_center(h.script.initial.y)) return h.name + " does not start on a lane center";
  }
  if (!changer_found) return "lane changer is not a CAV";
  return std::nullopt;
}

std::vector<std::string> scenario_names() { return {"cutin", "fdec", "bacc", "ffdec"}; }

ScenarioConfig scenario_preset(const std::string& name) {
  ScenarioConfig cfg;
  cfg.name = name;
  const LaneGeometry& lanes = cfg.lanes;
  const double lane0 = lanes.lane_center(0);
  const double lane1 = lanes.lane_center(1);
  const double lane2 = lanes.lane_center(2);

  // Longitudinal CLF weights, cruise speed and standstill gap per scenario.
  auto tracking = [&](double alpha1, double alpha2, double v_d, double s_0) {
    cfg.clf.alpha1 = alpha1;
    cfg.clf.alpha2 = alpha2;
    cfg.clf.v_d = v_d;
    cfg.clf.s_0 = s_0;
  };

  auto platoon = [&](double x1, double x2, double x3, double v) {
    cfg.cavs = {{1, "cav1", at(x1, lane0, v)},
                {2, "cav2", at(x2, lane0, v)},
                {3, "cav3", at(x3, lane0, v)}};
  };

  if (name == "cutin") {
    platoon(100.0, 50.0, 0.0, 27.5);
    HdvScript lcv{at(45.0, lane2, 27.0), {}, LaneManeuver{0.5, 1, 3.0}};
    cfg.hdvs = {{4, "lcv", lcv}};
    tracking(0.03, 0.02, 22.5, 28.5);
  } else if (name == "fdec") {
    platoon(100.0, 50.0, 0.0, 27.5);
    HdvScript ftv{at(75.0, lane1, 30.0), {seg(1.8, -9.0), seg(3.0, 3.0, 31.0)}, std::nullopt};
    cfg.hdvs = {{4, "ftv", ftv}};
    cfg.ctrl.alpha_psi = 20.0;
    cfg.ctrl.p_y = 0.02;
    tracking(0.00625, 0.016, 27.5, 19.0);
    cfg.coordination.changer_splits = false;
  } else if (name == "bacc") {
    platoon(100.0, 50.0, 0.0, 27.5);
    HdvScript btv{at(0.0, lane1, 30.0), {seg(1.8, 9.0), seg(3.0, -3.0, 22.0)}, std::nullopt};
    cfg.hdvs = {{4, "btv", btv}};
    cfg.ctrl.p_y = 0.02;
    cfg.ctrl.p_psi = 900.0;
    tracking(0.4, 0.003, 27.1, 25.0);
    cfg.coordination.changer_splits = false;
  } else if (name == "ffdec") {
    platoon(60.0, 30.0, 0.0, 20.0);
    HdvScript ftv{at(70.0, lane1, 20.0), {seg(1.0, -6.0), seg(3.8, 3.0, 28.0)}, std::nullopt};
    HdvScript fcv{at(90.0, lane0, 20.0), {seg(1.0, -1.0, 15.0)}, std::nullopt};
    cfg.hdvs = {{4, "ftv", ftv}, {5, "fcv", fcv}};
    cfg.ctrl.alpha_y = 0.5;
    cfg.ctrl.alpha_psi = 24.0;
    cfg.ctrl.p_y = 0.001;
    cfg.ctrl.p_psi = 1000.0;
    tracking(0.0125, 0.002, 29.25, 18.0);
  } else {
    throw std::invalid_argument("unknown scenario '" + name + "'");
  }
  cfg.clf.y_d = lane0;
  return cfg;
}

}  // namespace platoon
