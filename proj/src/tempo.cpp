#include "qpsim/tempo.hpp"

#include <algorithm>
#include <cmath>

#include "qpsim/sim.hpp"

namespace qpsim::tempo {

BlendPoint full_stop_blend(double t) {
  if (!(t >= 0) || !(t <= 1))
    throw Error(ErrorCode::domain_error, "blend parameter outside [0, 1]");
  const double u = 1 - t;
  BlendPoint out;
  out.value = t * t * t * t * (35 + t * (-84 + t * (70 - 20 * t)));
  out.d1 = 140 * t * t * t * u * u * u;
  out.d2 = 420 * t * t * u * u * (1 - 2 * t);
  out.d3 = 840 * t * u * (5 * t * t - 5 * t + 1);
  return out;
}

TrajectoryPoint eval_trajectory(const TimedTrajectory& traj, double t) {
  const auto& times = traj.times;
  const auto& points = traj.waypoints.points;
  if (times.empty() || times.size() != points.size())
    throw Error(ErrorCode::domain_error, "malformed timed trajectory");
  if (!(t >= times.front()) || !(t <= times.back()))
    throw Error(ErrorCode::domain_error, "time outside mission window");
  TrajectoryPoint out;
  if (points.size() == 1) {
    out.position = points.front();
    return out;
  }
  const auto upper = std::upper_bound(times.begin(), times.end(), t);
  const int seg = std::clamp(static_cast<int>(upper - times.begin()) - 1, 0,
                             static_cast<int>(times.size()) - 2);  // closes t = t_N
  const double T = times[seg + 1] - times[seg];
  const BlendPoint s = full_stop_blend((t - times[seg]) / T);
  const Eigen::Vector3d span = points[seg + 1] - points[seg];
  out.position = points[seg] + s.value * span;
  out.velocity = (s.d1 / T) * span;
  out.acceleration = (s.d2 / (T * T)) * span;
  out.jerk = (s.d3 / (T * T * T)) * span;
  return out;
}

void validate(const TemporalConfig& config) {
  if (!(config.time_tolerance > 0))
    throw Error(ErrorCode::config_error, "time tolerance must be positive");
  if (!(config.initial_guess >= 0))
    throw Error(ErrorCode::config_error, "initial guess must be non-negative");
  if (!(config.dt_sim > 0))
    throw Error(ErrorCode::config_error, "integration step must be positive");
  terrain::validate(config.safety);
}

Verdict segment_test(const Eigen::Vector3d& from, const Eigen::Vector3d& to, double duration,
                     const TemporalConfig& config, const TrackingContext& context) {
  if (!(duration > 0)) throw Error(ErrorCode::domain_error, "segment duration must be positive");
  validate(config);

  TimedTrajectory leg;
  leg.waypoints.points = {from, to};
  leg.times = {0, duration};

  dynamics::QpsState x = dynamics::hover_state(from, context.params);
  const double dt = config.dt_sim;
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(duration / dt - 1e-9)));

  try {
    for (long i = 0; i <= steps; ++i) {
      const double t = std::min(i * dt, duration);
      const TrajectoryPoint ref = eval_trajectory(leg, t);
      flatness::FlatState desired;
      desired.position = ref.position;
      desired.velocity = ref.velocity;
      desired.acceleration = ref.acceleration;
      desired.jerk = ref.jerk;
      const dynamics::ControlInput u =
          flatness::control_step(x, desired, context.gains, context.params, context.margins);
      const auto rotors =
          dynamics::rotor_speeds(x.thrust, dynamics::body_torque(x, u, context.params),
                                 context.params);
      if ((rotors.speed.array() > config.safety.s_max).any()) return Verdict::invalid;
      if ((x.position - ref.position).norm() > config.safety.delta) return Verdict::invalid;
      if (i == steps) break;
      const double step = std::min(dt, duration - t);
      x = sim::rk4_step(x, u, step, context.params);
    }
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::singularity:
      case ErrorCode::infeasible_thrust:
      case ErrorCode::numerical_blowup:
        return Verdict::invalid;
      default:
        throw;
    }
  }
  return Verdict::valid;
}

BisectResult bisect_time(const std::function<Verdict(double)>& test, double initial_guess,
                         double tolerance) {
  if (!(initial_guess > 0) || !std::isfinite(initial_guess))
    throw Error(ErrorCode::domain_error, "initial guess must be positive");
  if (!(tolerance > 0)) throw Error(ErrorCode::domain_error, "tolerance must be positive");

  BisectResult result;
  auto probe = [&](double t) {
    ++result.probes;
    return test(t) == Verdict::valid;
  };

  double t_min = 0;
  double t_max = initial_guess;
  const double cap = std::ldexp(initial_guess, 30);
  while (!probe(t_max)) {
    if (t_max >= cap)
      throw Error(ErrorCode::no_feasible_time, "no feasible duration below doubling cap");
    t_min = t_max;
    t_max = 2 * t_max;
  }

  double t_mid = 0.5 * (t_max + t_min);
  // An always-valid test pins t_min at 0 and the exit ratio at 1; the
  // iteration cap then hands back the smallest duration seen valid.
  for (int iter = 0; (t_max - t_min) / t_mid > tolerance && iter < 256; ++iter) {
    t_mid = 0.5 * (t_max + t_min);
    if (probe(t_mid))
      t_max = t_mid;
    else
      t_min = t_mid;
  }

  result.time = t_max;
  result.lower = t_min;
  result.ratio = (t_max - t_min) / t_mid;
  return result;
}

TimedTrajectory plan_times(const route::WaypointPath& path, const TemporalConfig& config,
                           const TrackingContext& context) {
  validate(config);
  if (path.points.empty()) throw Error(ErrorCode::domain_error, "empty waypoint path");

  TimedTrajectory out;
  out.waypoints = path;
  out.times = {0};
  for (std::size_t n = 0; n + 1 < path.points.size(); ++n) {
    const Eigen::Vector3d& a = path.points[n];
    const Eigen::Vector3d& b = path.points[n + 1];
    const double length = (b - a).norm();
    if (length == 0)
      throw Error(ErrorCode::domain_error, "zero-length leg in waypoint path");
    const double guess =
        config.initial_guess > 0 ? config.initial_guess : std::max(length / 2, 0.05);
    const auto leg_test = [&](double T) { return segment_test(a, b, T, config, context); };
    const BisectResult r = bisect_time(leg_test, guess, config.time_tolerance);
    out.times.push_back(out.times.back() + r.time);
  }
  return out;
}

}  // namespace qpsim::tempo
