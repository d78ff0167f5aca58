#include "platoon/vehicle.hpp"

#include <algorithm>
#include <cmath>

namespace platoon {

bool VehicleState::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(psi) && std::isfinite(v) &&
         v >= 0.0;
}

bool VehicleGeometry::valid() const {
  return l_r > 0.0 && l_f > 0.0 && l_fc > 0.0 && l_rc > 0.0 && w > 0.0;
}

int LaneGeometry::lane_of(double y) const {
  int best = 0;
  double best_dist = std::abs(y - lane_center(0));
  for (int k = 1; k < lane_count; ++k) {
    const double d = std::abs(y - lane_center(k));
    if (d < best_dist) {
      best = k;
      best_dist = d;
    }
  }
  return best;
}

StateVector drift(const VehicleState& s) {
  return {s.v * std::cos(s.psi), s.v * std::sin(s.psi), 0.0, 0.0};
}

InputMatrix control_matrix(const VehicleState& s, const VehicleGeometry& geom) {
  InputMatrix g = InputMatrix::Zero();
  g(0, 1) = -s.v * std::sin(s.psi);
  g(1, 1) = s.v * std::cos(s.psi);
  g(2, 1) = s.v / geom.l_r;
  g(3, 0) = 1.0;
  return g;
}

VehicleState step(const VehicleState& s, const ControlInput& u, double dt,
                  const VehicleGeometry& geom) {
  const Eigen::Vector2d input(u.a, u.beta);
  const StateVector next = to_vector(s) + dt * (drift(s) + control_matrix(s, geom) * input);
  VehicleState out = from_vector(next);
  out.v = std::max(out.v, 0.0);
  return out;
}

StateVector to_vector(const VehicleState& s) { return {s.x, s.y, s.psi, s.v}; }

VehicleState from_vector(const StateVector& v) { return {v(0), v(1), v(2), v(3)}; }

}  // namespace platoon
