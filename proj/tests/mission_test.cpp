#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "qpsim/mission.hpp"
#include "qpsim/sim.hpp"
#include "test_support.hpp"

using namespace qpsim;
using namespace qpsim::mission;

namespace {

// Flat synthetic world, 24 x 24 m at 1 m cells, ground at z = 0.
MissionConfig flat_config(const Eigen::Vector3d& start, const Eigen::Vector3d& goal) {
  MissionConfig cfg;
  SynthParams synth;
  synth.size_x = 24;
  synth.size_y = 24;
  synth.density = 0;
  cfg.synth = synth;
  cfg.start = start;
  cfg.goal = goal;
  return cfg;
}

MissionConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ErrorCode parse_failure(const std::string& text, std::string* message = nullptr) {
  try {
    parse(text);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  FAIL("expected a parse failure");
  return ErrorCode::parse_error;
}

}  // namespace

TEST_CASE("integrator holds the hover equilibrium") {
  const dynamics::QpsParams params = dynamics::reference_params();
  const dynamics::QpsState hover = dynamics::hover_state({1, 2, 3}, params);
  const dynamics::ControlInput u = dynamics::ControlInput::Zero();
  for (double dt : {1e-3, 0.1, 0.5}) {
    const dynamics::QpsState next = sim::rk4_step(hover, u, dt, params);
    CHECK((dynamics::to_vector(next) - dynamics::to_vector(hover)).norm() < 1e-14);
  }
}

TEST_CASE("integrator reproduces free fall exactly") {
  const dynamics::QpsParams params = dynamics::reference_params();
  dynamics::QpsState drop;
  drop.position = {0, 0, 10};  // level attitude, zero thrust
  const dynamics::ControlInput u = dynamics::ControlInput::Zero();
  const dynamics::QpsState next = sim::rk4_step(drop, u, 0.1, params);
  // Constant acceleration is a quadratic flow, which RK4 integrates without
  // truncation error.
  CHECK(next.position.z() == doctest::Approx(10 - 0.04905).epsilon(1e-13));
  CHECK(next.velocity.z() == doctest::Approx(-0.981).epsilon(1e-13));
  CHECK(next.position.x() == 0);
  CHECK(next.position.y() == 0);
  CHECK(next.velocity.head<2>().norm() == 0);
  CHECK(next.angles == Eigen::Vector3d::Zero());
  CHECK(next.rates == Eigen::Vector3d::Zero());
  CHECK(next.thrust == 0);
}

TEST_CASE("integrator converges at fourth order") {
  const dynamics::QpsParams params = dynamics::reference_params();
  const dynamics::ControlInput u{2.0, 0.4, -0.3, 0.2};
  const double T = 0.16;
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 3; ++trial) {
    const dynamics::StateVector x0 = dynamics::to_vector(test::random_feasible_state(rng));
    const auto flow = [&](int n) {
      dynamics::StateVector x = x0;
      for (int i = 0; i < n; ++i) x = sim::rk4_step(x, u, T / n, params);
      return x;
    };
    const dynamics::StateVector ref = flow(256);
    const double coarse = (flow(4) - ref).norm();
    const double fine = (flow(8) - ref).norm();
    REQUIRE(fine > 1e-13);  // above the roundoff floor
    const double order = std::log2(coarse / fine);
    CHECK(order > 3.5);
    CHECK(order < 4.6);
  }
}

TEST_CASE("integrator rejects non-finite excursions") {
  const dynamics::QpsParams params = dynamics::reference_params();
  dynamics::QpsState x;
  x.position = {0, 0, 1e301};
  x.velocity = {0, 0, 1e308};
  CHECK_THROWS_AS(sim::rk4_step(x, dynamics::ControlInput::Zero(), 1e6, params), Error);
}

TEST_CASE("synthetic terrain: flat when density is zero") {
  SynthParams p;
  p.size_x = 16;
  p.size_y = 12;
  p.base = 2.5;
  p.density = 0;
  const terrain::ElevationMap map = synth_terrain(p);
  CHECK(map.rows() == 12);
  CHECK(map.cols() == 16);
  CHECK(map.cell_size() == 1.0);
  CHECK((map.heights().array() == 2.5).all());
}

TEST_CASE("synthetic terrain: seed determinism and seed sensitivity") {
  SynthParams p;
  p.seed = 42;
  p.roughness = 2.0;
  p.density = 0.25;
  const terrain::ElevationMap a = synth_terrain(p);
  const terrain::ElevationMap b = synth_terrain(p);
  CHECK(a.heights() == b.heights());

  p.seed = 43;
  const terrain::ElevationMap c = synth_terrain(p);
  CHECK(a.heights() != c.heights());
}

TEST_CASE("synthetic terrain: building coverage tracks the density knob") {
  for (std::uint64_t seed : {1u, 7u, 99u}) {
    SynthParams p;
    p.seed = seed;
    p.density = 0.1;  // heights default to [5, 20] above base 0
    const terrain::ElevationMap map = synth_terrain(p);
    const double covered =
        (map.heights().array() >= 5.0).count() / static_cast<double>(64 * 64);
    CHECK(covered >= 0.05);
    CHECK(covered <= 0.2);
    CHECK(map.max_value() <= 20.0);
  }
}

TEST_CASE("synthetic terrain: parameter validation") {
  const auto reject = [](auto mutate) {
    SynthParams p;
    mutate(p);
    CHECK_THROWS_AS(synth_terrain(p), Error);
  };
  reject([](SynthParams& p) { p.size_x = 1; });
  reject([](SynthParams& p) { p.size_y = 0; });
  reject([](SynthParams& p) { p.cell = 0; });
  reject([](SynthParams& p) { p.roughness = -1; });
  reject([](SynthParams& p) { p.density = -0.1; });
  reject([](SynthParams& p) { p.density = 0.96; });
  reject([](SynthParams& p) { p.height_max = 1; });  // below height_min
  reject([](SynthParams& p) {
    p.size_x = 2;
    p.size_y = 2;  // too small to hold any building footprint
  });
}

TEST_CASE("config parsing: minimal document and defaults") {
  const MissionConfig cfg = parse(
      "mission.start = 4 4 3\n"
      "mission.goal = 10 4 3\n"
      "terrain.synth.density = 0\n");
  CHECK(cfg.start == Eigen::Vector3d(4, 4, 3));
  CHECK(cfg.goal == Eigen::Vector3d(10, 4, 3));
  REQUIRE(cfg.synth.has_value());
  CHECK(cfg.synth->density == 0);
  CHECK(cfg.synth->size_x == 64);
  CHECK(!cfg.terrain_file.has_value());
  CHECK(cfg.settle_time == 2.0);
  CHECK(cfg.safety.epsilon == 0.65);
  CHECK(cfg.safety.delta == 0.35);
  CHECK(cfg.safety.s_max == 400.0);
  CHECK(cfg.planner.delta == 1.0);
  CHECK(cfg.planner.weight == 1.1);
  CHECK(cfg.planner.max_expansions == 10'000'000);
  CHECK(cfg.planner.weight_edges == false);
  CHECK(cfg.temporal.time_tolerance == 0.05);
  CHECK(cfg.temporal.initial_guess == 0);
  CHECK(cfg.temporal.dt_sim == 1e-3);
  const dynamics::QpsParams ref = dynamics::reference_params();
  CHECK(cfg.params.mass == ref.mass);
  CHECK(cfg.params.inertia == ref.inertia);
  CHECK(cfg.params.arm == ref.arm);
  CHECK(cfg.params.thrust_coeff == ref.thrust_coeff);
  CHECK(cfg.params.drag_coeff == ref.drag_coeff);
  CHECK(cfg.params.gravity == ref.gravity);
  CHECK(cfg.poles.x[0] == -2.0);
  CHECK(cfg.poles.yaw[1] == -4.0);
}

TEST_CASE("config parsing: every key lands in its slot") {
  const MissionConfig cfg = parse(
      "# full schema exercise\n"
      "mission.start = 1 2 3\n"
      "mission.goal = 4 5 6\n"
      "mission.settle_time = 1.5\n"
      "terrain.synth.seed = 9\n"
      "terrain.synth.size_x = 32\n"
      "terrain.synth.size_y = 48\n"
      "terrain.synth.cell = 0.5\n"
      "terrain.synth.base = 1\n"
      "terrain.synth.roughness = 0.25\n"
      "terrain.synth.density = 0.15\n"
      "terrain.synth.height_min = 4\n"
      "terrain.synth.height_max = 12\n"
      "safety.epsilon = 0.7\n"
      "safety.delta = 0.3\n"
      "safety.s_max = 380\n"
      "planner.delta = 2\n"
      "planner.weight = 1.25\n"
      "planner.max_expansions = 5000\n"
      "planner.literal_weighting = true\n"
      "temporal.time_tolerance = 0.02\n"
      "temporal.initial_guess = 1.5\n"
      "temporal.dt_sim = 0.002\n"
      "qps.mass = 0.9\n"
      "qps.inertia = 0.03 0.031 0.032\n"
      "qps.arm = 0.3\n"
      "qps.thrust_coeff = 4e-5\n"
      "qps.drag_coeff = 1.2e-6\n"
      "qps.gravity = 9.8\n"
      "control.poles.x = -1 -2 -3 -4\n"
      "control.poles.y = -1.5 -2.5 -3.5 -4.5\n"
      "control.poles.z = -2 -3 -4 -5\n"
      "control.poles.yaw = -2 -6\n");
  REQUIRE(cfg.synth.has_value());
  CHECK(cfg.synth->seed == 9);
  CHECK(cfg.synth->size_x == 32);
  CHECK(cfg.synth->size_y == 48);
  CHECK(cfg.synth->cell == 0.5);
  CHECK(cfg.synth->base == 1);
  CHECK(cfg.synth->roughness == 0.25);
  CHECK(cfg.synth->density == 0.15);
  CHECK(cfg.synth->height_min == 4);
  CHECK(cfg.synth->height_max == 12);
  CHECK(cfg.settle_time == 1.5);
  CHECK(cfg.safety.epsilon == 0.7);
  CHECK(cfg.safety.delta == 0.3);
  CHECK(cfg.safety.s_max == 380);
  CHECK(cfg.planner.delta == 2);
  CHECK(cfg.planner.weight == 1.25);
  CHECK(cfg.planner.max_expansions == 5000);
  CHECK(cfg.planner.weight_edges == true);
  CHECK(cfg.temporal.time_tolerance == 0.02);
  CHECK(cfg.temporal.initial_guess == 1.5);
  CHECK(cfg.temporal.dt_sim == 0.002);
  CHECK(cfg.params.mass == 0.9);
  CHECK(cfg.params.inertia == Eigen::Vector3d(0.03, 0.031, 0.032));
  CHECK(cfg.params.arm == 0.3);
  CHECK(cfg.params.thrust_coeff == 4e-5);
  CHECK(cfg.params.drag_coeff == 1.2e-6);
  CHECK(cfg.params.gravity == 9.8);
  CHECK(cfg.poles.x == std::array<double, 4>{-1, -2, -3, -4});
  CHECK(cfg.poles.y == std::array<double, 4>{-1.5, -2.5, -3.5, -4.5});
  CHECK(cfg.poles.z == std::array<double, 4>{-2, -3, -4, -5});
  CHECK(cfg.poles.yaw == std::array<double, 2>{-2, -6});
}

TEST_CASE("config parsing: vehicle assembly group combines inertia") {
  const MissionConfig cfg = parse(
      "mission.start = 0 0 3\n"
      "mission.goal = 1 0 3\n"
      "terrain.synth.density = 0\n"
      "quad.mass = 0.5\n"
      "quad.inertia = 0.0196 0.0196 0.0264\n"
      "payload.mass = 0.3\n"
      "payload.inertia = 0.005 0.005 0.005\n"
      "assembly.spacing = 0.2\n");
  const dynamics::InertiaCombination joint = dynamics::combine_inertia(
      dynamics::reference_quad(), dynamics::reference_payload(), 0.2);
  CHECK(cfg.params.mass == joint.mass);
  CHECK(cfg.params.inertia == joint.inertia);
  CHECK(cfg.params.mass == 0.8);
}

TEST_CASE("config parsing: malformed lines report their line number") {
  std::string message;

  CHECK(parse_failure("mission.start = 4 4 3\nnot a key value line\n", &message) ==
        ErrorCode::config_error);
  CHECK(message.find("line 2") != std::string::npos);

  CHECK(parse_failure("# comment\n\nmission.start = 1 2\n", &message) ==
        ErrorCode::config_error);
  CHECK(message.find("line 3") != std::string::npos);
  CHECK(message.find("three values") != std::string::npos);

  CHECK(parse_failure("planner.delta = abc\n", &message) == ErrorCode::config_error);
  CHECK(message.find("line 1") != std::string::npos);

  CHECK(parse_failure("planner.delt = 1\n", &message) == ErrorCode::config_error);
  CHECK(message.find("unknown key") != std::string::npos);

  CHECK(parse_failure("planner.delta = 1\nplanner.delta = 2\n", &message) ==
        ErrorCode::config_error);
  CHECK(message.find("duplicate") != std::string::npos);
  CHECK(message.find("line 2") != std::string::npos);

  CHECK(parse_failure("planner.delta =\n", &message) == ErrorCode::config_error);
  CHECK(message.find("missing value") != std::string::npos);

  CHECK(parse_failure("= 5\n", &message) == ErrorCode::config_error);
  CHECK(message.find("missing key") != std::string::npos);

  CHECK(parse_failure("planner.literal_weighting = maybe\n", &message) ==
        ErrorCode::config_error);
  CHECK(message.find("boolean") != std::string::npos);

  CHECK(parse_failure("control.poles.yaw = -1\n", &message) == ErrorCode::config_error);
  CHECK(message.find("two poles") != std::string::npos);
}

TEST_CASE("config parsing: structural requirements") {
  // Start and goal are mandatory.
  CHECK(parse_failure("terrain.synth.density = 0\nmission.goal = 1 1 3\n") ==
        ErrorCode::config_error);
  // Exactly one terrain source.
  CHECK(parse_failure("mission.start = 0 0 3\nmission.goal = 1 1 3\n") ==
        ErrorCode::config_error);
  CHECK(parse_failure("mission.start = 0 0 3\nmission.goal = 1 1 3\n"
                      "terrain.file = map.txt\nterrain.synth.seed = 1\n") ==
        ErrorCode::config_error);
  // Direct and assembled vehicle parameters are exclusive.
  CHECK(parse_failure("mission.start = 0 0 3\nmission.goal = 1 1 3\n"
                      "terrain.synth.density = 0\n"
                      "qps.mass = 0.8\nquad.mass = 0.5\n") == ErrorCode::config_error);

  CHECK_THROWS_AS(load_config("/nonexistent/qpsim.cfg"), Error);
  CHECK(exit_code(ErrorCode::config_error) == 2);
}

TEST_CASE("setup validates endpoints against the expanded terrain") {
  const auto expect_no_path = [](const MissionConfig& cfg) {
    try {
      setup(cfg);
      FAIL("expected endpoint rejection");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::no_path);
      CHECK(e.phase() == "validate");
      CHECK(exit_code(e.code()) == 3);
    }
  };

  // Below the expanded surface: flat ground 0 expands to epsilon + delta = 1.
  expect_no_path(flat_config({4, 4, 0.5}, {10, 4, 3}));
  expect_no_path(flat_config({4, 4, 3}, {10, 4, 0.9}));
  // Outside the footprint.
  expect_no_path(flat_config({-5, 4, 3}, {10, 4, 3}));
  // Above the surface but snapping into a restricted grid cell.
  expect_no_path(flat_config({4, 4, 1.2}, {10, 4, 3}));

  // Invalid structure is a config error, not a planning error.
  MissionConfig both = flat_config({4, 4, 3}, {10, 4, 3});
  both.terrain_file = "map.txt";
  try {
    setup(both);
    FAIL("expected config rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
    CHECK(e.phase() == "validate");
  }

  // A clean setup exposes the planning artifacts.
  const MissionSetup s = setup(flat_config({4, 4, 3}, {10, 4, 3}));
  CHECK(s.start_index == Eigen::Vector3i(4, 4, 3));
  CHECK(s.goal_index == Eigen::Vector3i(10, 4, 3));
  CHECK(s.map.sample(4, 4) == 0);
  CHECK(s.clearance_map.sample(4, 4) == doctest::Approx(0.65).epsilon(1e-12));
  CHECK(s.levels.level(4, 4) == 1);  // ground 0 + 1.0 expansion, cell 1
}

TEST_CASE("trivial mission: start equals goal") {
  const MissionConfig cfg = flat_config({4, 4, 3}, {4, 4, 3});
  const MissionResult result = run_mission(cfg);

  CHECK(result.summary.total_time == 0);
  CHECK(result.waypoints.points.size() == 1);
  CHECK(result.trajectory.times == std::vector<double>{0});
  // The settle hold still runs: 2 s at 1 ms steps, endpoints included.
  REQUIRE(result.steps.size() == 2001);
  CHECK(result.steps.front().t == 0);
  CHECK(result.steps.back().t == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(result.summary.rotor_ok);
  CHECK(result.summary.track_ok);
  CHECK(result.summary.clear_ok);
  CHECK(result.summary.category == "ok");
  CHECK(result.summary.max_error < 1e-9);
  CHECK(result.summary.min_clearance == doctest::Approx(3 - 0.65).epsilon(1e-9));
  CHECK(exit_code(result.summary) == 0);
}

TEST_CASE("flat hop mission: all monitors green and records consistent") {
  const MissionConfig cfg = flat_config({4, 4, 3}, {10, 4, 3});
  const MissionResult result = run_mission(cfg);
  const MissionSetup s = setup(cfg);

  REQUIRE(result.waypoints.points.size() >= 2);
  CHECK(result.waypoints.points.front() == Eigen::Vector3d(4, 4, 3));
  CHECK(result.waypoints.points.back() == Eigen::Vector3d(10, 4, 3));
  CHECK(result.summary.total_time > 0);
  CHECK(result.summary.rotor_ok);
  CHECK(result.summary.track_ok);
  CHECK(result.summary.clear_ok);
  CHECK(exit_code(result.summary) == 0);

  // The settle hold brings the state onto the goal.
  const StepRecord& last = result.steps.back();
  CHECK(last.t == doctest::Approx(result.summary.total_time + 2.0).epsilon(1e-12));
  CHECK((last.state.position - Eigen::Vector3d(10, 4, 3)).norm() < 0.05);

  // Per-record flag consistency and summary aggregation.
  double max_err = 0, max_rotor = 0, min_margin = 1e300;
  double prev_t = -1;
  const double p_max = 4 * cfg.params.thrust_coeff * cfg.safety.s_max * cfg.safety.s_max;
  for (const StepRecord& rec : result.steps) {
    CHECK(rec.t > prev_t);
    prev_t = rec.t;
    CHECK(rec.track_ok == (rec.error <= cfg.safety.delta));
    if (rec.rotor_ok) CHECK(rec.rotor_speed.maxCoeff() <= cfg.safety.s_max);
    if (rec.rotor_speed.maxCoeff() > cfg.safety.s_max) CHECK(!rec.rotor_ok);
    // Thrust is the only non-gravity force; inside the rotor envelope the
    // specific thrust cannot exceed p_max/m.
    if (rec.rotor_ok) CHECK(rec.state.thrust <= p_max + 1e-9);
    const double qx = std::clamp(rec.state.position.x(), s.clearance_map.min_x(),
                                 s.clearance_map.max_x());
    const double qy = std::clamp(rec.state.position.y(), s.clearance_map.min_y(),
                                 s.clearance_map.max_y());
    const double margin = rec.state.position.z() - s.clearance_map.sample(qx, qy);
    CHECK(rec.clear_ok == (margin > 0));
    max_err = std::max(max_err, rec.error);
    max_rotor = std::max(max_rotor, rec.rotor_speed.maxCoeff());
    min_margin = std::min(min_margin, margin);
  }
  CHECK(result.summary.max_error == max_err);
  CHECK(result.summary.max_rotor_speed == max_rotor);
  CHECK(result.summary.min_clearance == doctest::Approx(min_margin).epsilon(1e-12));

  // Determinism: the whole pipeline serializes byte-identically.
  const MissionResult again = run_mission(cfg);
  CHECK(trace_csv(result.steps) == trace_csv(again.steps));
  CHECK(summary_text(result.summary) == summary_text(again.summary));
  CHECK(timed_table(result.trajectory) == timed_table(again.trajectory));
}

TEST_CASE("monitors flag violations instead of hiding them") {
  // A rotor ceiling below the hover speed reddens the very first record.
  MissionConfig strangled = flat_config({4, 4, 3}, {10, 4, 3});
  strangled.safety.s_max = 200;  // hover needs about 256 rad/s
  const MissionSetup tight = setup(strangled);
  tempo::TimedTrajectory hold;
  hold.waypoints.points = {{4, 4, 3}};
  hold.times = {0};
  const MissionResult parked = simulate_tracking(tight, hold);
  CHECK(!parked.summary.rotor_ok);
  CHECK(!parked.steps.front().rotor_ok);
  CHECK(parked.summary.category == "rotor-bound");
  CHECK(exit_code(parked.summary) == 4);

  // A 6 m dash in 1.1 s demands more thrust than four rotors at 400 rad/s
  // can produce; the plant still flies it, the monitor records the breach.
  const MissionConfig cfg = flat_config({4, 4, 3}, {10, 4, 3});
  const MissionSetup s = setup(cfg);
  tempo::TimedTrajectory dash;
  dash.waypoints.points = {{4, 4, 3}, {10, 4, 3}};
  dash.times = {0, 1.1};
  const MissionResult rushed = simulate_tracking(s, dash);
  CHECK(!rushed.summary.rotor_ok);
  CHECK(exit_code(rushed.summary) == 4);
  bool any_over = false;
  for (const StepRecord& rec : rushed.steps)
    any_over = any_over || rec.rotor_speed.maxCoeff() > cfg.safety.s_max;
  CHECK(any_over);
}

TEST_CASE("serialized forms are stable") {
  route::WaypointPath wp;
  wp.points = {{4, 4, 3}, {10.5, 4, 3}};
  CHECK(waypoint_table(wp) == "n x y z\n1 4 4 3\n2 10.5 4 3\n");

  tempo::TimedTrajectory traj;
  traj.waypoints = wp;
  traj.times = {0, 6.25};
  CHECK(timed_table(traj) == "n x y z t\n1 4 4 3 0\n2 10.5 4 3 6.25\n");

  StepRecord rec;
  rec.t = 0.25;
  rec.state.position = {1, 2, 3};
  rec.state.angles = {0.1, -0.2, 0.3};
  rec.state.thrust = 7.848;
  rec.rotor_speed = {1, 2, 3, 4};
  rec.error = 0.5;
  rec.track_ok = false;
  CHECK(trace_csv({rec}) ==
        "# qpsim trace v1\n"
        "t,x,y,z,phi,theta,psi,p,s1,s2,s3,s4,err,flag_rotor,flag_track,flag_clear\n"
        "0.25,1,2,3,0.1,-0.2,0.3,7.848,1,2,3,4,0.5,1,0,1\n");

  MissionSummary sum;
  sum.total_time = 12.5;
  sum.max_error = 0.125;
  sum.max_rotor_speed = 321.5;
  sum.min_clearance = 2.25;
  sum.clear_ok = false;
  sum.category = "clearance-bound";
  CHECK(summary_text(sum) ==
        "total_time = 12.5\n"
        "max_tracking_error = 0.125\n"
        "max_rotor_speed = 321.5\n"
        "min_clearance = 2.25\n"
        "rotor_ok = true\n"
        "tracking_ok = true\n"
        "clearance_ok = false\n"
        "category = clearance-bound\n");
}

TEST_CASE("exit codes map error categories") {
  MissionSummary ok;
  CHECK(exit_code(ok) == 0);
  ok.track_ok = false;
  CHECK(exit_code(ok) == 4);

  CHECK(exit_code(ErrorCode::parse_error) == 2);
  CHECK(exit_code(ErrorCode::config_error) == 2);
  CHECK(exit_code(ErrorCode::domain_error) == 2);
  CHECK(exit_code(ErrorCode::no_path) == 3);
  CHECK(exit_code(ErrorCode::no_feasible_time) == 3);
  CHECK(exit_code(ErrorCode::singularity) == 4);
  CHECK(exit_code(ErrorCode::infeasible_thrust) == 4);
  CHECK(exit_code(ErrorCode::numerical_blowup) == 4);
}
