#pragma once

#include <array>
#include <numbers>

#include <Eigen/Dense>

#include "qpsim/dynamics.hpp"
#include "qpsim/errors.hpp"

// Differential-flatness machinery: the QPS state maps one-to-one onto the
// flat state (position through jerk, yaw, yaw rate) wherever the thrust
// vector is bounded away from zero and the body is not near gimbal lock.
// On that domain the snap/yaw-acceleration vector v relates to the physical
// input u by v = input_map * u + drift, which the controller inverts.
namespace qpsim::flatness {

struct FlatState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
  Eigen::Vector3d jerk = Eigen::Vector3d::Zero();
  double yaw = 0;
  double yaw_rate = 0;
};

using FlatVector = Eigen::Matrix<double, 14, 1>;

inline FlatVector to_vector(const FlatState& z) {
  FlatVector v;
  v << z.position, z.velocity, z.acceleration, z.jerk, z.yaw, z.yaw_rate;
  return v;
}

inline FlatState from_vector(const FlatVector& v) {
  FlatState z;
  z.position = v.segment<3>(0);
  z.velocity = v.segment<3>(3);
  z.acceleration = v.segment<3>(6);
  z.jerk = v.segment<3>(9);
  z.yaw = v(12);
  z.yaw_rate = v(13);
  return z;
}

// The flatness inverse degenerates at free fall (thrust vector vanishes) and
// at 90 degrees of tilt. Both margins keep the controller away from those
// poles; violations surface as singularity errors that abort a mission.
struct SingularityMargins {
  double min_thrust = 0.1;                             // N
  double max_tilt = 80.0 * std::numbers::pi / 180.0;   // rad from vertical
};

dynamics::QpsState flat_to_state(const FlatState& z, const dynamics::QpsParams& params,
                                 const SingularityMargins& margins = {});

FlatState state_to_flat(const dynamics::QpsState& x, const dynamics::QpsParams& params);

// v = input_map * u + drift with v = (snap, yaw acceleration). The drift is
// the full residual of the fourth position derivative under zero input.
struct Decoupling {
  Eigen::Matrix4d input_map = Eigen::Matrix4d::Zero();
  Eigen::Vector4d drift = Eigen::Vector4d::Zero();
};

Decoupling decoupling(const dynamics::QpsState& x, const dynamics::QpsParams& params,
                      const SingularityMargins& margins = {});

// Linear flat dynamics z_dot = A z + B v: three quadruple integrators plus a
// double integrator for yaw.
struct FlatDynamics {
  Eigen::Matrix<double, 14, 14> A = Eigen::Matrix<double, 14, 14>::Zero();
  Eigen::Matrix<double, 14, 4> B = Eigen::Matrix<double, 14, 4>::Zero();
};

FlatDynamics flat_dynamics();

// Closed-loop poles per chain, all strictly negative reals. Defaults keep
// rotor commands within the reference vehicle's speed limit.
struct PoleSets {
  std::array<double, 4> x{-2.0, -2.5, -3.0, -3.5};
  std::array<double, 4> y{-2.0, -2.5, -3.0, -3.5};
  std::array<double, 4> z{-2.0, -2.5, -3.0, -3.5};
  std::array<double, 2> yaw{-3.0, -4.0};
};

using GainMatrix = Eigen::Matrix<double, 4, 14>;

// Pole placement on the decoupled chains; A - B K is Hurwitz by construction.
GainMatrix design_gains(const PoleSets& poles = {});

// u = input_map^-1 (K (z_d - z(x)) - drift), the exact-linearization law.
dynamics::ControlInput control_step(const dynamics::QpsState& x, const FlatState& desired,
                                    const GainMatrix& gains, const dynamics::QpsParams& params,
                                    const SingularityMargins& margins = {});

}  // namespace qpsim::flatness
