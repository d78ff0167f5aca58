#include "platoon/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "platoon/controller.hpp"

namespace platoon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const WorldVehicle* find_vehicle(const Snapshot& world, int id) {
  for (const auto& v : world) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

NeighborObservation observe(const WorldVehicle& v, NeighborRole role) {
  NeighborObservation n = NeighborObservation::of(v.state, v.id, v.accel);
  n.role = role;
  return n;
}

struct Footprint {
  Eigen::Vector2d center;
  std::array<Eigen::Vector2d, 2> axes;  // unit heading and unit lateral
  double half_length = 0.0;
  double half_width = 0.0;
};

Footprint footprint(const VehicleState& s, const VehicleGeometry& geom) {
  Footprint f;
  const Eigen::Vector2d heading(std::cos(s.psi), std::sin(s.psi));
  f.axes = {heading, Eigen::Vector2d(-heading.y(), heading.x())};
  f.center = Eigen::Vector2d(s.x, s.y) + 0.5 * (geom.l_fc - geom.l_rc) * heading;
  f.half_length = 0.5 * geom.length();
  f.half_width = 0.5 * geom.w;
  return f;
}

double projected_radius(const Footprint& f, const Eigen::Vector2d& axis) {
  return f.half_length * std::abs(f.axes[0].dot(axis)) +
         f.half_width * std::abs(f.axes[1].dot(axis));
}

}  // namespace

Neighborhood perceive(int ego_id, const Snapshot& world, int target_lane,
                      const LaneGeometry& lanes) {
  Neighborhood hood;
  const WorldVehicle* ego = find_vehicle(world, ego_id);
  if (!ego) return hood;
  const int own_lane = lanes.lane_of(ego->state.y);
  const double x0 = ego->state.x;

  const WorldVehicle* fc = nullptr;
  const WorldVehicle* ft = nullptr;
  const WorldVehicle* bt = nullptr;
  for (const auto& v : world) {
    if (v.id == ego_id) continue;
    const int lane = lanes.lane_of(v.state.y);
    const double x = v.state.x;
    if (lane == own_lane && x > x0 && (!fc || x < fc->state.x)) fc = &v;
    if (lane == target_lane && x > x0 && (!ft || x < ft->state.x)) ft = &v;
    if (lane == target_lane && x < x0 && (!bt || x > bt->state.x)) bt = &v;
  }
  if (fc) hood.fc = observe(*fc, NeighborRole::Fc);
  if (ft) hood.ft = observe(*ft, NeighborRole::Ft);
  if (bt) hood.bt = observe(*bt, NeighborRole::Bt);
  return hood;
}

bool footprints_overlap(const VehicleState& a, const VehicleState& b,
                        const VehicleGeometry& geom) {
  const Footprint fa = footprint(a, geom);
  const Footprint fb = footprint(b, geom);
  const Eigen::Vector2d d = fb.center - fa.center;
  for (const auto* f : {&fa, &fb}) {
    for (const auto& axis : f->axes) {
      if (std::abs(d.dot(axis)) >= projected_radius(fa, axis) + projected_radius(fb, axis)) {
        return false;
      }
    }
  }
  return true;
}

std::vector<std::pair<int, int>> detect_collision(const Snapshot& world,
                                                  const VehicleGeometry& geom) {
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < world.size(); ++i) {
    for (std::size_t j = i + 1; j < world.size(); ++j) {
      if (footprints_overlap(world[i].state, world[j].state, geom)) {
        pairs.emplace_back(std::min(world[i].id, world[j].id), std::max(world[i].id, world[j].id));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

double ttc(const VehicleState& ego, const VehicleState& neighbor, const VehicleGeometry& geom) {
  const double ego_vx = ego.v * std::cos(ego.psi);
  const double n_vx = neighbor.v * std::cos(neighbor.psi);
  const bool ahead = neighbor.x >= ego.x;
  const double gap = std::max(std::abs(neighbor.x - ego.x) - geom.length(), 0.0);
  const double closing = ahead ? ego_vx - n_vx : n_vx - ego_vx;
  if (closing <= 0.0) return kInf;
  return gap / closing;
}

RunResult run(const ScenarioConfig& cfg) {
  RunResult result;
  const auto ticks = static_cast<long>(std::llround(cfg.duration / cfg.dt));
  const bool cooperative = cfg.ctrl.variant != ControllerVariant::SingleVehicleCbf;
  const bool barriers_on = cfg.ctrl.variant != ControllerVariant::ClfQp;

  Snapshot world;
  std::map<int, VehicleState> cav_states;
  std::vector<int> order;
  for (const auto& c : cfg.cavs) {
    world.push_back({c.id, true, c.initial, 0.0});
    cav_states[c.id] = c.initial;
    order.push_back(c.id);
  }
  std::map<int, const HdvScript*> scripts;
  for (const auto& h : cfg.hdvs) {
    world.push_back({h.id, false, hdv_kinematics(h.script, 0.0, cfg.lanes), 0.0});
    scripts[h.id] = &h.script;
  }
  std::sort(world.begin(), world.end(),
            [](const WorldVehicle& a, const WorldVehicle& b) { return a.id < b.id; });

  CoordinationParams coord = cfg.coordination;
  coord.cooperative = cooperative;
  PlatoonCoordinator coordinator(order, cav_states, cfg.lanes, cfg.geom, cfg.clf, coord);
  bool commanded = false;

  for (long k = 0; k < ticks; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    if (!commanded && t >= cfg.command_time - 1e-9) {
      coordinator.command_lane_change(cfg.lane_changer, cfg.direction);
      commanded = true;
    }

    // Safe-lane-change flags from the current snapshot.
    std::map<int, bool> safe;
    for (int id : order) {
      const CavAgent& agent = coordinator.agent(id);
      if (agent.signals.c == 0) continue;
      if (!barriers_on) {
        safe[id] = true;
        continue;
      }
      const Neighborhood hood = perceive(id, world, agent.target_lane, cfg.lanes);
      safe[id] = lane_change_safe(cav_states.at(id), hood, cfg.cbf);
    }
    coordinator.update(t, cav_states, safe);

    std::map<int, ControlDecision> decisions;
    for (int id : order) {
      ControlContext ctx;
      ctx.ego = cav_states.at(id);
      ctx.hood = perceive(id, world, coordinator.perception_target_lane(id), cfg.lanes);
      if (const auto peer = coordinator.peer_of(id)) {
        ctx.hood.peer = observe(*find_vehicle(world, *peer), NeighborRole::Peer);
      }
      ctx.state = coordinator.agent(id).state;
      ctx.tau = coordinator.tau_of(id, t);
      // Longitudinal CLF target: the platoon predecessor (the renumbered one in
      // Join), else the vehicle ahead in the current lane. A CAV that has left
      // the platoon has no predecessor and tracks speed only.
      if (ctx.hood.peer.present) ctx.leader = ctx.hood.peer;
      else if (!coordinator.agent(id).departed) ctx.leader = ctx.hood.fc;
      ctx.clf = cfg.clf;
      ctx.clf.y_d = coordinator.lateral_target(id);
      decisions[id] = decide(ctx, cfg.geom, cfg.cbf, cfg.ctrl);
      if (!decisions[id].feasible) result.infeasible.push_back({t, id});
    }

    // Collisions and time-to-collision on the current snapshot.
    const auto pairs = detect_collision(world, cfg.geom);
    if (!pairs.empty() && !result.collision.occurred) {
      result.collision.occurred = true;
      result.collision.first_time = t;
      result.collision.pair = pairs.front();
    }
    for (std::size_t i = 0; i < world.size(); ++i) {
      for (std::size_t j = i + 1; j < world.size(); ++j) {
        if (std::abs(world[i].state.y - world[j].state.y) >= cfg.geom.w) continue;
        result.collision.min_ttc = std::min(result.collision.min_ttc,
                                            ttc(world[i].state, world[j].state, cfg.geom));
      }
    }

    for (const auto& wv : world) {
      LogRow row;
      row.t = t;
      row.id = wv.id;
      row.x = wv.state.x;
      row.y = wv.state.y;
      row.psi = wv.state.psi;
      row.v = wv.state.v;
      row.collision = std::any_of(pairs.begin(), pairs.end(), [&](const auto& p) {
        return p.first == wv.id || p.second == wv.id;
      });
      if (wv.cav) {
        const ControlDecision& d = decisions.at(wv.id);
        row.a = d.input.a;
        row.beta = d.input.beta;
        row.fsm_state = coordinator.agent(wv.id).state;
        for (const auto& b : d.barriers) {
          switch (b.role) {
            case NeighborRole::Fc:
            case NeighborRole::Peer: row.h_fc = b.value; break;
            case NeighborRole::Ft: row.h_ft = b.value; break;
            case NeighborRole::Bt: row.h_bt = b.value; break;
          }
        }
        if (d.feasible) {
          row.delta_l = d.delta_l;
          row.delta_y = d.delta_y;
          row.delta_psi = d.delta_psi;
        }
        row.feasible = d.feasible;
      } else {
        row.a = hdv_accel(*scripts.at(wv.id), t);
      }
      result.log.push_back(row);
    }

    // Integrate to the next tick.
    const double t_next = static_cast<double>(k + 1) * cfg.dt;
    for (auto& wv : world) {
      const double v_before = wv.state.v;
      if (wv.cav) {
        wv.state = step(wv.state, decisions.at(wv.id).input, cfg.dt, cfg.geom);
        cav_states[wv.id] = wv.state;
      } else {
        wv.state = hdv_kinematics(*scripts.at(wv.id), t_next, cfg.lanes);
      }
      // Human drivers report their current acceleration; a CAV's is the last
      // step's, since all CAVs decide within the same tick.
      if (!cfg.neighbor_accel) wv.accel = 0.0;
      else if (wv.cav) wv.accel = (wv.state.v - v_before) / cfg.dt;
      else wv.accel = hdv_accel(*scripts.at(wv.id), t_next);
    }
  }

  result.transitions = coordinator.events();
  result.warnings = coordinator.warnings();
  return result;
}

}  // namespace platoon
