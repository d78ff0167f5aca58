#pragma once

#include <Eigen/Dense>

namespace platoon {

/// Pose and speed of one vehicle. x is longitudinal, y lateral (up = left).
struct VehicleState {
  double x = 0.0;    // m
  double y = 0.0;    // m
  double psi = 0.0;  // rad
  double v = 0.0;    // m/s

  bool valid() const;
};

/// Acceleration and slip angle of one CAV.
struct ControlInput {
  double a = 0.0;     // m/s^2
  double beta = 0.0;  // rad
};

/// Vehicle dimensions around the center of gravity. All vehicles share one geometry.
struct VehicleGeometry {
  double l_r = 1.74;   // c.g. to rear axle
  double l_f = 1.11;   // c.g. to front axle (kept for completeness, unused by the kinematic model)
  double l_fc = 2.15;  // c.g. to front bumper
  double l_rc = 2.77;  // c.g. to rear bumper
  double w = 1.86;

  double length() const { return l_fc + l_rc; }
  bool valid() const;
};

/// Three parallel lanes, index 0 at the bottom.
struct LaneGeometry {
  double lane_width = 3.6;
  int lane_count = 3;

  double lane_center(int lane) const { return lane_width / 2.0 + lane * lane_width; }
  /// Nearest lane center; ties go to the lower index. Clamped to the road.
  int lane_of(double y) const;
};

using StateVector = Eigen::Vector4d;
using InputMatrix = Eigen::Matrix<double, 4, 2>;

/// Drift field F(x) = [v cos psi, v sin psi, 0, 0].
StateVector drift(const VehicleState& s);

/// Input matrix G(x); column 0 multiplies a, column 1 multiplies beta.
InputMatrix control_matrix(const VehicleState& s, const VehicleGeometry& geom);

/// One explicit Euler step of x' = F(x) + G(x) u. Speed is clamped at zero.
VehicleState step(const VehicleState& s, const ControlInput& u, double dt,
                  const VehicleGeometry& geom);

StateVector to_vector(const VehicleState& s);
VehicleState from_vector(const StateVector& v);

}  // namespace platoon
