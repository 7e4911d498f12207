#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "qpsim/errors.hpp"

// Rigid-body model of the quadcopter-payload system (QPS): the payload is
// rigidly attached below the quad, so the assembly is one rigid body with
// combined mass and inertia. State and input follow the thrust-augmented
// convention where thrust magnitude p and its rate are part of the state and
// the input carries the second derivatives (p_ddot, phi_ddot, theta_ddot,
// psi_ddot).
namespace qpsim::dynamics {

struct QpsParams {
  double mass = 0.8;                              // kg, quad + payload
  Eigen::Vector3d inertia{0.0321, 0.0321, 0.0314};  // kg m^2, diagonal body inertia
  double thrust_coeff = 3e-5;                     // b, N s^2/rad^2
  double drag_coeff = 1.1e-6;                     // k, N m s^2/rad^2
  double arm = 0.25;                              // l, m
  double gravity = 9.81;                          // m/s^2
};

inline void validate(const QpsParams& p) {
  if (!(p.mass > 0) || !(p.inertia.array() > 0).all() || !(p.thrust_coeff > 0) ||
      !(p.drag_coeff > 0) || !(p.arm > 0) || !(p.gravity > 0))
    throw Error(ErrorCode::config_error, "vehicle parameters must be strictly positive");
}

struct BodyParams {
  double mass = 0;
  Eigen::Vector3d inertia = Eigen::Vector3d::Zero();
};

// Quad and payload fused into one rigid body. com_offset is the distance from
// the quad's own center of mass down to the joint center of mass.
struct InertiaCombination {
  double mass = 0;
  Eigen::Vector3d inertia = Eigen::Vector3d::Zero();
  double com_offset = 0;
};

// Parallel-axis combination for a payload hanging a fixed distance `spacing`
// below the quad center of mass. Only the transverse axes pick up mass terms;
// the vertical axis passes through both centers.
inline InertiaCombination combine_inertia(const BodyParams& quad, const BodyParams& payload,
                                          double spacing) {
  if (!(quad.mass > 0) || payload.mass < 0 || spacing < 0)
    throw Error(ErrorCode::domain_error, "combine_inertia needs quad mass > 0, payload mass >= 0, spacing >= 0");
  InertiaCombination out;
  out.mass = quad.mass + payload.mass;
  out.com_offset = spacing * payload.mass / out.mass;
  const double quad_shift = out.com_offset;
  const double payload_shift = spacing - out.com_offset;
  for (int axis = 0; axis < 2; ++axis)
    out.inertia[axis] = quad.inertia[axis] + quad.mass * quad_shift * quad_shift +
                        payload.inertia[axis] + payload.mass * payload_shift * payload_shift;
  out.inertia.z() = quad.inertia.z() + payload.inertia.z();
  return out;
}

inline BodyParams reference_quad() {
  return {0.5, {0.0196, 0.0196, 0.0264}};
}

inline BodyParams reference_payload() {
  return {0.3, {0.005, 0.005, 0.005}};
}

inline QpsParams reference_params() {
  const InertiaCombination joint = combine_inertia(reference_quad(), reference_payload(), 0.2);
  QpsParams params;
  params.mass = joint.mass;
  params.inertia = joint.inertia;
  return params;
}

// 14 states: position, velocity, 3-2-1 Euler angles (phi, theta, psi) with
// their rates, thrust magnitude p and its rate. Angles are stored unwrapped.
struct QpsState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d angles = Eigen::Vector3d::Zero();
  Eigen::Vector3d rates = Eigen::Vector3d::Zero();
  double thrust = 0;
  double thrust_rate = 0;
};

using StateVector = Eigen::Matrix<double, 14, 1>;
using ControlInput = Eigen::Vector4d;  // (p_ddot, phi_ddot, theta_ddot, psi_ddot)

// Exact hover equilibrium at a point: thrust balances weight, level attitude,
// everything else at rest.
inline QpsState hover_state(const Eigen::Vector3d& position, const QpsParams& params) {
  QpsState x;
  x.position = position;
  x.thrust = params.mass * params.gravity;
  return x;
}

inline StateVector to_vector(const QpsState& x) {
  StateVector v;
  v << x.position, x.velocity, x.angles, x.rates, x.thrust, x.thrust_rate;
  return v;
}

inline QpsState from_vector(const StateVector& v) {
  QpsState x;
  x.position = v.segment<3>(0);
  x.velocity = v.segment<3>(3);
  x.angles = v.segment<3>(6);
  x.rates = v.segment<3>(9);
  x.thrust = v(12);
  x.thrust_rate = v(13);
  return x;
}

// 3-2-1 Euler rotation, inertial to body: S = R_x(phi) R_y(theta) R_z(psi).
inline Eigen::Matrix3d rotation_matrix(double phi, double theta, double psi) {
  const double cf = std::cos(phi), sf = std::sin(phi);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cp = std::cos(psi), sp = std::sin(psi);
  Eigen::Matrix3d S;
  S << ct * cp, ct * sp, -st,
      sf * st * cp - cf * sp, sf * st * sp + cf * cp, sf * ct,
      cf * st * cp + sf * sp, cf * st * sp - sf * cp, cf * ct;
  return S;
}

// Body axes plus the two intermediate-frame axes that enter the Euler-rate
// kinematics, all expressed in inertial coordinates. c3 is the yaw-frame
// vertical (yaw spins about it, so it stays e3); d2 is the yaw-pitch-frame
// lateral axis, which pitch rotation leaves untouched.
struct FrameSet {
  Eigen::Vector3d b1, b2, b3;
  Eigen::Vector3d c3;
  Eigen::Vector3d d2;
};

inline FrameSet frames(double phi, double theta, double psi) {
  const Eigen::Matrix3d S = rotation_matrix(phi, theta, psi);
  FrameSet f;
  f.b1 = S.row(0);
  f.b2 = S.row(1);
  f.b3 = S.row(2);
  f.c3 = Eigen::Vector3d::UnitZ();
  f.d2 = Eigen::Vector3d(-std::sin(psi), std::cos(psi), 0);
  return f;
}

inline FrameSet frames(const Eigen::Vector3d& angles) {
  return frames(angles.x(), angles.y(), angles.z());
}

// omega = psi_dot c3 + theta_dot d2 + phi_dot b1, inertial coordinates.
inline Eigen::Vector3d angular_velocity(const Eigen::Vector3d& angles,
                                        const Eigen::Vector3d& rates) {
  const FrameSet f = frames(angles);
  return rates.z() * f.c3 + rates.y() * f.d2 + rates.x() * f.b1;
}

// Time derivative of angular_velocity. The residual cross terms come from
// differentiating the moving axes: d2 rotates with psi_dot about c3, and b1
// rotates with the full angular velocity of the yaw-pitch frame.
inline Eigen::Vector3d angular_acceleration(const Eigen::Vector3d& angles,
                                            const Eigen::Vector3d& rates,
                                            const Eigen::Vector3d& accels) {
  const FrameSet f = frames(angles);
  return accels.z() * f.c3 + accels.y() * f.d2 + accels.x() * f.b1 +
         rates.y() * rates.z() * f.c3.cross(f.d2) +
         rates.x() * (rates.z() * f.c3 + rates.y() * f.d2).cross(f.b1);
}

// Right-hand side of the 14-state model: double-integrator chains for the
// angles and thrust driven directly by u, and Newton's law m r_ddot =
// p b3 - m g e3 for translation.
inline StateVector state_derivative(const StateVector& x, const ControlInput& u,
                                    const QpsParams& params) {
  const Eigen::Vector3d b3 = frames(x(6), x(7), x(8)).b3;
  StateVector dx;
  dx.segment<3>(0) = x.segment<3>(3);
  dx.segment<3>(3) = (x(12) / params.mass) * b3 - Eigen::Vector3d(0, 0, params.gravity);
  dx.segment<3>(6) = x.segment<3>(9);
  dx.segment<3>(9) = u.tail<3>();
  dx(12) = x(13);
  dx(13) = u(0);
  return dx;
}

inline StateVector state_derivative(const QpsState& x, const ControlInput& u,
                                    const QpsParams& params) {
  return state_derivative(to_vector(x), u, params);
}

// Torque demanded from the rotors, in body coordinates. The Euler equation
// J w_dot = -w x J w + tau holds in the body frame with diagonal J, so the
// inertial omega and its derivative are rotated down first.
inline Eigen::Vector3d body_torque(const QpsState& x, const ControlInput& u,
                                   const QpsParams& params) {
  const Eigen::Matrix3d S = rotation_matrix(x.angles.x(), x.angles.y(), x.angles.z());
  const Eigen::Vector3d omega_body = S * angular_velocity(x.angles, x.rates);
  const Eigen::Vector3d alpha_body =
      S * angular_acceleration(x.angles, x.rates, u.tail<3>());
  return params.inertia.cwiseProduct(alpha_body) +
         omega_body.cross(params.inertia.cwiseProduct(omega_body).eval());
}

// Forward mixing: (p, tau_phi, tau_theta, tau_psi) = mixing_matrix * s^2.
// Rotors 1 and 3 sit on the pitch arm and spin opposite to 2 and 4.
inline Eigen::Matrix4d mixing_matrix(const QpsParams& params) {
  const double b = params.thrust_coeff, k = params.drag_coeff, l = params.arm;
  Eigen::Matrix4d B;
  B << b, b, b, b,
      0, -b * l, 0, b * l,
      -b * l, 0, b * l, 0,
      -k, k, -k, k;
  return B;
}

struct RotorSpeeds {
  Eigen::Vector4d speed;    // s_j, rad/s
  Eigen::Vector4d squared;  // s_j^2, kept so monitors can see margins
};

// Mixing inverse without the feasibility check. Monitors that must keep
// running through infeasible commands read the signs themselves.
inline Eigen::Vector4d squared_speeds(double thrust, const Eigen::Vector3d& torque,
                                      const QpsParams& params) {
  const double b = params.thrust_coeff, k = params.drag_coeff, l = params.arm;
  const double base = thrust / (4 * b);
  const double roll = torque.x() / (2 * b * l);
  const double pitch = torque.y() / (2 * b * l);
  const double yaw = torque.z() / (4 * k);
  Eigen::Vector4d sq;
  sq << base - yaw - pitch, base + yaw - roll, base - yaw + pitch, base + yaw + roll;
  return sq;
}

// Closed-form inverse of the mixing system. A negative squared speed means
// the commanded wrench is not realizable; the error carries the first
// offending rotor (1-based) so monitors can report it.
inline RotorSpeeds rotor_speeds(double thrust, const Eigen::Vector3d& torque,
                                const QpsParams& params) {
  const Eigen::Vector4d sq = squared_speeds(thrust, torque, params);
  for (int j = 0; j < 4; ++j)
    if (sq(j) < 0)
      throw InfeasibleThrustError(j + 1, sq(j),
                                  "rotor " + std::to_string(j + 1) +
                                      " demands negative squared speed");
  RotorSpeeds out;
  out.squared = sq;
  out.speed = sq.cwiseSqrt();
  return out;
}

}  // namespace qpsim::dynamics
