#pragma once

#include "qpsim/dynamics.hpp"
#include "qpsim/errors.hpp"

namespace qpsim::sim {

// One classical RK4 step of the QPS model under zero-order-hold input.
// Negative dt integrates backwards, which the tests use for reversibility
// checks. A non-finite result means the trajectory left the regime where the
// model is meaningful, reported as numerical blowup rather than propagated.
inline dynamics::StateVector rk4_step(const dynamics::StateVector& x,
                                      const dynamics::ControlInput& u, double dt,
                                      const dynamics::QpsParams& params) {
  using dynamics::state_derivative;
  const dynamics::StateVector k1 = state_derivative(x, u, params);
  const dynamics::StateVector k2 = state_derivative((x + 0.5 * dt * k1).eval(), u, params);
  const dynamics::StateVector k3 = state_derivative((x + 0.5 * dt * k2).eval(), u, params);
  const dynamics::StateVector k4 = state_derivative((x + dt * k3).eval(), u, params);
  dynamics::StateVector next = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
  if (!next.allFinite())
    throw Error(ErrorCode::numerical_blowup, "state diverged during integration");
  return next;
}

inline dynamics::QpsState rk4_step(const dynamics::QpsState& x, const dynamics::ControlInput& u,
                                   double dt, const dynamics::QpsParams& params) {
  return dynamics::from_vector(rk4_step(dynamics::to_vector(x), u, dt, params));
}

}  // namespace qpsim::sim
