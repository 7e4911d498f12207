#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "qpsim/dynamics.hpp"
#include "qpsim/errors.hpp"
#include "qpsim/flatness.hpp"
#include "qpsim/route.hpp"
#include "qpsim/terrain.hpp"

// Temporal planning: each leg of the waypoint path is traversed with the
// seventh-order full-stop blend, so legs start and end at rest through jerk.
// That makes legs independent, and the minimum safe duration of each is
// found by bisection against a closed-loop feasibility simulation.
namespace qpsim::tempo {

// Value and first three derivatives of the blend polynomial
// sigma(t) = -20 t^7 + 70 t^6 - 84 t^5 + 35 t^4 on [0, 1]. All derivatives
// through the third vanish at both ends.
struct BlendPoint {
  double value;
  double d1;
  double d2;
  double d3;
};

BlendPoint full_stop_blend(double t);

struct TimedTrajectory {
  route::WaypointPath waypoints;
  std::vector<double> times;  // arrival times, times[0] = 0, strictly increasing
};

struct TrajectoryPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
  Eigen::Vector3d jerk = Eigen::Vector3d::Zero();
};

// Evaluates the blended trajectory inside the mission window [t_1, t_N];
// the final endpoint is closed, everything else is a domain error.
TrajectoryPoint eval_trajectory(const TimedTrajectory& traj, double t);

struct TemporalConfig {
  double time_tolerance = 0.05;  // bisection exit ratio
  double initial_guess = 0;      // seconds; 0 picks a per-leg guess from length
  double dt_sim = 1e-3;          // integration and monitoring step, s
  terrain::SafetyParams safety;
};

void validate(const TemporalConfig& config);

// Everything the closed-loop feasibility simulation needs besides the leg.
struct TrackingContext {
  dynamics::QpsParams params;
  flatness::GainMatrix gains = flatness::design_gains();
  flatness::SingularityMargins margins;
};

enum class Verdict { valid, invalid };

// Simulates tracking one leg over [0, duration] from exact hover at `from`.
// Valid iff at every monitoring instant the rotor speeds exist and stay
// within the speed limit and the position error stays within the tracking
// tolerance. Controller singularities and integration blowup count as
// violations, not crashes.
Verdict segment_test(const Eigen::Vector3d& from, const Eigen::Vector3d& to, double duration,
                     const TemporalConfig& config, const TrackingContext& context);

struct BisectResult {
  double time = 0;    // verified-valid duration
  double lower = 0;   // bracket lower end, invalid whenever > 0
  double ratio = 0;   // final bracket ratio (time - lower) / last midpoint
  int probes = 0;     // test evaluations spent
};

// Doubling then bisection, implemented exactly as the printed pseudocode:
// the exit test reuses the midpoint of the previous iteration. Two guards
// are added: the doubling phase gives up once t_max passes 2^30 times the
// guess (no feasible time), and the refinement loop is capped at 256
// iterations, which only an always-valid test can reach; the cap returns the
// smallest duration verified valid.
BisectResult bisect_time(const std::function<Verdict(double)>& test, double initial_guess,
                         double tolerance);

// Minimum-duration timing for every leg; arrival times accumulate from 0.
TimedTrajectory plan_times(const route::WaypointPath& path, const TemporalConfig& config,
                           const TrackingContext& context);

}  // namespace qpsim::tempo
