#include "qpsim/flatness.hpp"

#include <cmath>
#include <vector>

namespace qpsim::flatness {

using dynamics::FrameSet;
using dynamics::QpsParams;
using dynamics::QpsState;

FlatState state_to_flat(const QpsState& x, const QpsParams& params) {
  const FrameSet f = dynamics::frames(x.angles);
  const Eigen::Vector3d omega = dynamics::angular_velocity(x.angles, x.rates);
  FlatState z;
  z.position = x.position;
  z.velocity = x.velocity;
  z.acceleration =
      (x.thrust / params.mass) * f.b3 - Eigen::Vector3d(0, 0, params.gravity);
  z.jerk = (x.thrust_rate / params.mass) * f.b3 + (x.thrust / params.mass) * omega.cross(f.b3);
  z.yaw = x.angles.z();
  z.yaw_rate = x.rates.z();
  return z;
}

QpsState flat_to_state(const FlatState& z, const QpsParams& params,
                       const SingularityMargins& margins) {
  const Eigen::Vector3d thrust_vec =
      params.mass * (z.acceleration + Eigen::Vector3d(0, 0, params.gravity));
  const double p = thrust_vec.norm();
  if (p < margins.min_thrust)
    throw Error(ErrorCode::singularity, "thrust vector vanishes (free-fall flat state)");
  const Eigen::Vector3d b3 = thrust_vec / p;
  const double tilt = std::acos(std::clamp(b3.z(), -1.0, 1.0));
  if (tilt > margins.max_tilt)
    throw Error(ErrorCode::singularity, "attitude beyond tilt margin");

  // Rotate b3 into the yaw frame; there it reads (cos(phi) sin(theta),
  // -sin(phi), cos(phi) cos(theta)), which pins phi and theta on |theta| < pi/2.
  const double cp = std::cos(z.yaw), sp = std::sin(z.yaw);
  const Eigen::Vector3d w(cp * b3.x() + sp * b3.y(), -sp * b3.x() + cp * b3.y(), b3.z());
  QpsState x;
  x.position = z.position;
  x.velocity = z.velocity;
  x.angles = {std::asin(std::clamp(-w.y(), -1.0, 1.0)), std::atan2(w.x(), w.z()), z.yaw};
  x.thrust = p;

  const FrameSet f = dynamics::frames(x.angles);
  Eigen::Matrix3d jacobian;
  jacobian.col(0) = f.b3 / params.mass;
  jacobian.col(1) = -(p / params.mass) * f.b2;
  jacobian.col(2) = (p / params.mass) * f.d2.cross(f.b3);
  const Eigen::Vector3d rhs =
      z.jerk - (p / params.mass) * z.yaw_rate * f.c3.cross(f.b3);
  const Eigen::Vector3d solved = jacobian.partialPivLu().solve(rhs);
  x.thrust_rate = solved(0);
  x.rates = {solved(1), solved(2), z.yaw_rate};
  return x;
}

Decoupling decoupling(const QpsState& x, const QpsParams& params,
                      const SingularityMargins& margins) {
  if (x.thrust < margins.min_thrust)
    throw Error(ErrorCode::singularity, "thrust below margin in decoupling");
  if (std::abs(x.angles.y()) > margins.max_tilt)
    throw Error(ErrorCode::singularity, "pitch beyond tilt margin in decoupling");

  const FrameSet f = dynamics::frames(x.angles);
  const double m = params.mass;
  const Eigen::Vector3d omega = dynamics::angular_velocity(x.angles, x.rates);
  // Axis motion under zero input: the residual part of omega_dot.
  const Eigen::Vector3d omega_dot_res =
      dynamics::angular_acceleration(x.angles, x.rates, Eigen::Vector3d::Zero());

  Decoupling out;
  out.input_map.block<3, 1>(0, 0) = f.b3 / m;
  out.input_map.block<3, 1>(0, 1) = -(x.thrust / m) * f.b2;
  out.input_map.block<3, 1>(0, 2) = (x.thrust / m) * f.d2.cross(f.b3);
  out.input_map.block<3, 1>(0, 3) = (x.thrust / m) * f.c3.cross(f.b3);
  out.input_map(3, 3) = 1;

  out.drift.head<3>() = (2 * x.thrust_rate / m) * omega.cross(f.b3) +
                        (x.thrust / m) * omega_dot_res.cross(f.b3) +
                        (x.thrust / m) * omega.cross(omega.cross(f.b3).eval());
  out.drift(3) = 0;
  return out;
}

FlatDynamics flat_dynamics() {
  FlatDynamics fd;
  fd.A.block<3, 3>(0, 3).setIdentity();
  fd.A.block<3, 3>(3, 6).setIdentity();
  fd.A.block<3, 3>(6, 9).setIdentity();
  fd.A(12, 13) = 1;
  fd.B.block<3, 3>(9, 0).setIdentity();
  fd.B(13, 3) = 1;
  return fd;
}

namespace {

// Coefficients of prod (s - p_i), ascending order, constant term first.
std::vector<double> characteristic(const double* poles, int count) {
  std::vector<double> coef{1.0};
  for (int i = 0; i < count; ++i) {
    if (!(poles[i] < 0))
      throw Error(ErrorCode::domain_error, "closed-loop poles must be strictly negative");
    std::vector<double> next(coef.size() + 1, 0.0);
    for (std::size_t j = 0; j < coef.size(); ++j) {
      next[j + 1] += coef[j];
      next[j] -= poles[i] * coef[j];
    }
    coef = std::move(next);
  }
  return coef;
}

}  // namespace

GainMatrix design_gains(const PoleSets& poles) {
  GainMatrix K = GainMatrix::Zero();
  const std::array<const std::array<double, 4>*, 3> chains{&poles.x, &poles.y, &poles.z};
  for (int axis = 0; axis < 3; ++axis) {
    const auto coef = characteristic(chains[axis]->data(), 4);
    for (int order = 0; order < 4; ++order) K(axis, axis + 3 * order) = coef[order];
  }
  const auto yaw = characteristic(poles.yaw.data(), 2);
  K(3, 12) = yaw[0];
  K(3, 13) = yaw[1];
  return K;
}

dynamics::ControlInput control_step(const QpsState& x, const FlatState& desired,
                                    const GainMatrix& gains, const QpsParams& params,
                                    const SingularityMargins& margins) {
  const Decoupling dec = decoupling(x, params, margins);
  const FlatVector error = to_vector(desired) - to_vector(state_to_flat(x, params));
  const Eigen::Vector4d v = gains * error;
  return dec.input_map.partialPivLu().solve(v - dec.drift);
}

}  // namespace qpsim::flatness
