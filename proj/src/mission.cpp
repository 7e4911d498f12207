#include "qpsim/mission.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "qpsim/prng.hpp"
#include "qpsim/sim.hpp"

namespace qpsim::mission {

namespace {

void validate(const SynthParams& p) {
  if (p.size_x < 2 || p.size_y < 2)
    throw Error(ErrorCode::config_error, "synthetic terrain needs at least two cells per axis");
  if (!(p.cell > 0)) throw Error(ErrorCode::config_error, "terrain cell size must be positive");
  if (!(p.roughness >= 0))
    throw Error(ErrorCode::config_error, "terrain roughness must be non-negative");
  if (!(p.density >= 0) || !(p.density <= 0.95))
    throw Error(ErrorCode::config_error, "building density must lie in [0, 0.95]");
  if (!(p.height_min >= 0) || !(p.height_max >= p.height_min))
    throw Error(ErrorCode::config_error, "building height range is inverted");
  if (p.density > 0 && (p.size_x < 3 || p.size_y < 3))
    throw Error(ErrorCode::config_error, "grid too small to place buildings");
}

}  // namespace

terrain::ElevationMap synth_terrain(const SynthParams& p) {
  validate(p);

  // Ground: value noise on an 8-cell lattice, bilinearly interpolated.
  const auto lattice = [&](int i, int j) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
        static_cast<std::uint32_t>(j);
    return (hash_mix(key ^ p.seed) >> 11) * 0x1.0p-53;
  };
  Eigen::MatrixXd heights(p.size_y, p.size_x);
  for (int iy = 0; iy < p.size_y; ++iy) {
    for (int ix = 0; ix < p.size_x; ++ix) {
      const int gi = ix / 8, gj = iy / 8;
      const double fx = (ix % 8) / 8.0, fy = (iy % 8) / 8.0;
      const double noise = (1 - fy) * ((1 - fx) * lattice(gi, gj) + fx * lattice(gi + 1, gj)) +
                           fy * ((1 - fx) * lattice(gi, gj + 1) + fx * lattice(gi + 1, gj + 1));
      heights(iy, ix) = p.base + p.roughness * noise;
    }
  }

  // Buildings: random rectangles dropped until they newly cover the density
  // target. Overlaps keep the taller roof.
  const long area = static_cast<long>(p.size_x) * p.size_y;
  const long target = std::lround(p.density * static_cast<double>(area));
  if (target > 0) {
    SplitMix64 rng(p.seed);
    Eigen::MatrixXd roof =
        Eigen::MatrixXd::Constant(p.size_y, p.size_x, -std::numeric_limits<double>::infinity());
    long covered = 0;
    for (long guard = 0; covered < target && guard < 50 * area; ++guard) {
      const int w = static_cast<int>(rng.uniform_int(3, std::min(10, p.size_x)));
      const int h = static_cast<int>(rng.uniform_int(3, std::min(10, p.size_y)));
      const int i0 = static_cast<int>(rng.uniform_int(0, p.size_x - w));
      const int j0 = static_cast<int>(rng.uniform_int(0, p.size_y - h));
      const double top = p.base + rng.uniform(p.height_min, p.height_max);
      for (int j = j0; j < j0 + h; ++j)
        for (int i = i0; i < i0 + w; ++i) {
          if (roof(j, i) == -std::numeric_limits<double>::infinity()) ++covered;
          roof(j, i) = std::max(roof(j, i), top);
        }
    }
    heights = heights.cwiseMax(roof);
  }

  return terrain::ElevationMap({0, 0}, p.cell, std::move(heights));
}

namespace {

[[noreturn]] void rethrow_with_phase(Error& e, const char* phase) {
  if (e.phase().empty()) e.set_phase(phase);
  throw;
}

void check_endpoint(const char* label, const Eigen::Vector3d& point,
                    const Eigen::Vector3i& index, const terrain::ElevationMap& expanded,
                    const terrain::DiscreteElevationMap& levels) {
  if (!expanded.contains(point.x(), point.y()))
    throw Error(ErrorCode::no_path, std::string(label) + " outside the terrain footprint");
  if (!(point.z() > expanded.sample(point.x(), point.y())))
    throw Error(ErrorCode::no_path, std::string(label) + " inside restricted space");
  if (!route::traversable(index, levels))
    throw Error(ErrorCode::no_path,
                std::string(label) + " snaps to a restricted grid cell");
}

}  // namespace

MissionSetup setup(const MissionConfig& config) {
  try {
    MissionConfig cfg = config;
    cfg.temporal.safety = cfg.safety;  // one source of truth for the monitors
    if (cfg.terrain_file.has_value() == cfg.synth.has_value())
      throw Error(ErrorCode::config_error,
                  "exactly one terrain source (file or synthetic) must be given");
    dynamics::validate(cfg.params);
    terrain::validate(cfg.safety);
    route::validate(cfg.planner);
    tempo::validate(cfg.temporal);
    if (!(cfg.settle_time >= 0))
      throw Error(ErrorCode::config_error, "settle time must be non-negative");

    terrain::ElevationMap map =
        cfg.terrain_file ? terrain::load_map(*cfg.terrain_file) : synth_terrain(*cfg.synth);
    terrain::ElevationMap expanded =
        terrain::expand(map, cfg.safety.epsilon + cfg.safety.delta);
    terrain::ElevationMap clearance_map = terrain::expand(map, cfg.safety.epsilon);
    terrain::DiscreteElevationMap levels = terrain::discretize(expanded, cfg.planner.delta);

    const Eigen::Vector3i start_index = terrain::world_to_index(cfg.start, cfg.planner.delta);
    const Eigen::Vector3i goal_index = terrain::world_to_index(cfg.goal, cfg.planner.delta);
    check_endpoint("start", cfg.start, start_index, expanded, levels);
    check_endpoint("goal", cfg.goal, goal_index, expanded, levels);

    tempo::TrackingContext context;
    context.params = cfg.params;
    context.gains = flatness::design_gains(cfg.poles);
    return MissionSetup{std::move(cfg),    std::move(map), std::move(clearance_map),
                        std::move(levels), start_index,    goal_index,
                        std::move(context)};
  } catch (Error& e) {
    rethrow_with_phase(e, "validate");
  }
}

route::DiscretePath plan_route(const MissionSetup& s) {
  try {
    const route::DiscretePath raw =
        route::astar(s.start_index, s.goal_index, s.levels, s.config.planner);
    return route::simplify(raw, s.levels);
  } catch (Error& e) {
    rethrow_with_phase(e, "plan");
  }
}

tempo::TimedTrajectory plan_schedule(const MissionSetup& s,
                                     const route::WaypointPath& waypoints) {
  try {
    return tempo::plan_times(waypoints, s.config.temporal, s.context);
  } catch (Error& e) {
    rethrow_with_phase(e, "time");
  }
}

MissionResult simulate_tracking(const MissionSetup& s, const tempo::TimedTrajectory& traj) {
  try {
    const auto& cfg = s.config;
    const double dt = cfg.temporal.dt_sim;
    const double t_end = traj.times.back();
    const double horizon = t_end + cfg.settle_time;
    const Eigen::Vector3d terminal = traj.waypoints.points.back();

    MissionResult result;
    result.waypoints = traj.waypoints;
    result.trajectory = traj;

    dynamics::QpsState x = dynamics::hover_state(traj.waypoints.points.front(), cfg.params);
    const long steps =
        std::max<long>(0, static_cast<long>(std::ceil(horizon / dt - 1e-9)));
    result.steps.reserve(steps + 1);

    MissionSummary& sum = result.summary;
    sum.total_time = t_end;
    sum.min_clearance = std::numeric_limits<double>::infinity();

    for (long i = 0; i <= steps; ++i) {
      const double t = std::min(i * dt, horizon);
      tempo::TrajectoryPoint ref;
      if (t <= t_end) {
        ref = tempo::eval_trajectory(traj, t);
      } else {
        ref.position = terminal;  // post-arrival hold at the full-stop state
      }
      flatness::FlatState desired;
      desired.position = ref.position;
      desired.velocity = ref.velocity;
      desired.acceleration = ref.acceleration;
      desired.jerk = ref.jerk;

      const dynamics::ControlInput u =
          flatness::control_step(x, desired, s.context.gains, cfg.params, s.context.margins);
      const Eigen::Vector4d squared = dynamics::squared_speeds(
          x.thrust, dynamics::body_torque(x, u, cfg.params), cfg.params);

      StepRecord rec;
      rec.t = t;
      rec.state = x;
      rec.rotor_speed = squared.cwiseMax(0.0).cwiseSqrt();
      rec.desired = ref.position;
      rec.error = (x.position - ref.position).norm();
      rec.rotor_ok = (squared.array() >= 0).all() &&
                     (rec.rotor_speed.array() <= cfg.safety.s_max).all();
      rec.track_ok = rec.error <= cfg.safety.delta;

      const double qx =
          std::clamp(x.position.x(), s.clearance_map.min_x(), s.clearance_map.max_x());
      const double qy =
          std::clamp(x.position.y(), s.clearance_map.min_y(), s.clearance_map.max_y());
      const double margin = x.position.z() - s.clearance_map.sample(qx, qy);
      rec.clear_ok = margin > 0;

      sum.max_error = std::max(sum.max_error, rec.error);
      sum.max_rotor_speed = std::max(sum.max_rotor_speed, rec.rotor_speed.maxCoeff());
      sum.min_clearance = std::min(sum.min_clearance, margin);
      if (!(rec.rotor_ok && rec.track_ok && rec.clear_ok) && sum.category == "ok") {
        if (!rec.rotor_ok)
          sum.category = "rotor-bound";
        else if (!rec.track_ok)
          sum.category = "tracking-bound";
        else
          sum.category = "clearance-bound";
      }
      sum.rotor_ok = sum.rotor_ok && rec.rotor_ok;
      sum.track_ok = sum.track_ok && rec.track_ok;
      sum.clear_ok = sum.clear_ok && rec.clear_ok;
      result.steps.push_back(std::move(rec));

      if (i == steps) break;
      x = sim::rk4_step(x, u, std::min(dt, horizon - t), cfg.params);
    }
    return result;
  } catch (Error& e) {
    rethrow_with_phase(e, "simulate");
  }
}

MissionResult run_mission(const MissionConfig& config) {
  const MissionSetup s = setup(config);
  route::DiscretePath path = plan_route(s);
  route::WaypointPath waypoints = route::to_waypoints(path, s.config.planner.delta);
  const tempo::TimedTrajectory traj = plan_schedule(s, waypoints);
  MissionResult result = simulate_tracking(s, traj);
  result.grid_path = std::move(path);
  return result;
}

namespace {

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  out += buf;
}

}  // namespace

std::string waypoint_table(const route::WaypointPath& waypoints) {
  std::string out = "n x y z\n";
  for (std::size_t n = 0; n < waypoints.points.size(); ++n) {
    out += std::to_string(n + 1);
    for (int axis = 0; axis < 3; ++axis) {
      out += ' ';
      append_num(out, waypoints.points[n][axis]);
    }
    out += '\n';
  }
  return out;
}

std::string timed_table(const tempo::TimedTrajectory& trajectory) {
  std::string out = "n x y z t\n";
  for (std::size_t n = 0; n < trajectory.waypoints.points.size(); ++n) {
    out += std::to_string(n + 1);
    for (int axis = 0; axis < 3; ++axis) {
      out += ' ';
      append_num(out, trajectory.waypoints.points[n][axis]);
    }
    out += ' ';
    append_num(out, trajectory.times[n]);
    out += '\n';
  }
  return out;
}

std::string trace_csv(const std::vector<StepRecord>& steps) {
  std::string out = "# qpsim trace v1\n";
  out += "t,x,y,z,phi,theta,psi,p,s1,s2,s3,s4,err,flag_rotor,flag_track,flag_clear\n";
  out.reserve(out.size() + steps.size() * 140);
  char line[512];
  for (const StepRecord& r : steps) {
    std::snprintf(line, sizeof line,
                  "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%d,%d\n",
                  r.t, r.state.position.x(), r.state.position.y(), r.state.position.z(),
                  r.state.angles.x(), r.state.angles.y(), r.state.angles.z(), r.state.thrust,
                  r.rotor_speed(0), r.rotor_speed(1), r.rotor_speed(2), r.rotor_speed(3),
                  r.error, r.rotor_ok ? 1 : 0, r.track_ok ? 1 : 0, r.clear_ok ? 1 : 0);
    out += line;
  }
  return out;
}

std::string summary_text(const MissionSummary& summary) {
  std::string out;
  const auto field = [&](const char* key, double v) {
    out += key;
    out += " = ";
    append_num(out, v);
    out += '\n';
  };
  const auto flag = [&](const char* key, bool v) {
    out += key;
    out += " = ";
    out += v ? "true" : "false";
    out += '\n';
  };
  field("total_time", summary.total_time);
  field("max_tracking_error", summary.max_error);
  field("max_rotor_speed", summary.max_rotor_speed);
  field("min_clearance", summary.min_clearance);
  flag("rotor_ok", summary.rotor_ok);
  flag("tracking_ok", summary.track_ok);
  flag("clearance_ok", summary.clear_ok);
  out += "category = " + summary.category + "\n";
  return out;
}

int exit_code(const MissionSummary& summary) {
  return summary.rotor_ok && summary.track_ok && summary.clear_ok ? 0 : 4;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error:
    case ErrorCode::config_error:
    case ErrorCode::domain_error:
      return 2;
    case ErrorCode::no_path:
    case ErrorCode::no_feasible_time:
      return 3;
    case ErrorCode::singularity:
    case ErrorCode::infeasible_thrust:
    case ErrorCode::numerical_blowup:
      return 4;
  }
  return 2;
}

}  // namespace qpsim::mission
