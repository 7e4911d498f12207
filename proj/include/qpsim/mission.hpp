#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qpsim/dynamics.hpp"
#include "qpsim/errors.hpp"
#include "qpsim/flatness.hpp"
#include "qpsim/route.hpp"
#include "qpsim/tempo.hpp"
#include "qpsim/terrain.hpp"

// End-to-end mission pipeline: configuration, synthetic terrain, endpoint
// validation, spatial and temporal planning, the monitored closed-loop
// simulation, and the serialized outputs of the command-line driver.
namespace qpsim::mission {

// Deterministic field of rectangular buildings over gently varying ground.
// Everything derives from the seed through integer hashing, so maps are
// bit-identical across platforms.
struct SynthParams {
  std::uint64_t seed = 1;
  int size_x = 64;          // cells
  int size_y = 64;          // cells
  double cell = 1.0;        // m
  double base = 0.0;        // ground level, m
  double roughness = 0.0;   // ground noise amplitude, m
  double density = 0.1;     // fraction of cells covered by buildings
  double height_min = 5.0;  // building height above base, m
  double height_max = 20.0;
};

terrain::ElevationMap synth_terrain(const SynthParams& params);

struct MissionConfig {
  std::optional<std::string> terrain_file;
  std::optional<SynthParams> synth;
  Eigen::Vector3d start = Eigen::Vector3d::Zero();
  Eigen::Vector3d goal = Eigen::Vector3d::Zero();
  double settle_time = 2.0;  // post-arrival hold, s
  terrain::SafetyParams safety;
  route::PlannerConfig planner;
  tempo::TemporalConfig temporal;
  dynamics::QpsParams params;
  flatness::PoleSets poles;
};

// Flat dotted-key text document, `key = value` per line, full-line #
// comments. Unknown and duplicate keys are rejected. See the README for the
// schema.
MissionConfig parse_config(std::istream& in);
MissionConfig load_config(const std::string& path);

// Terrain artifacts and planning inputs shared by every pipeline stage.
// The discrete map is built from the terrain expanded by epsilon + delta;
// the clearance map keeps only the epsilon expansion for monitoring, since
// the tracking monitor separately owns the delta budget.
struct MissionSetup {
  MissionConfig config;
  terrain::ElevationMap map;
  terrain::ElevationMap clearance_map;
  terrain::DiscreteElevationMap levels;
  Eigen::Vector3i start_index;
  Eigen::Vector3i goal_index;
  tempo::TrackingContext context;
};

MissionSetup setup(const MissionConfig& config);

// Weighted A* plus string pulling on the discrete map. The returned path is
// the simplified one.
route::DiscretePath plan_route(const MissionSetup& setup);

tempo::TimedTrajectory plan_schedule(const MissionSetup& setup,
                                     const route::WaypointPath& waypoints);

struct StepRecord {
  double t = 0;
  dynamics::QpsState state;
  Eigen::Vector4d rotor_speed = Eigen::Vector4d::Zero();
  Eigen::Vector3d desired = Eigen::Vector3d::Zero();
  double error = 0;  // tracking error norm, m
  bool rotor_ok = true;
  bool track_ok = true;
  bool clear_ok = true;
};

struct MissionSummary {
  double total_time = 0;       // mission window t_N, without the settle hold
  double max_error = 0;        // max tracking error norm, m
  double max_rotor_speed = 0;  // rad/s
  double min_clearance = 0;    // min height margin above the epsilon-expanded map, m
  bool rotor_ok = true;
  bool track_ok = true;
  bool clear_ok = true;
  std::string category = "ok";  // "ok" or the first violated bound
};

struct MissionResult {
  route::DiscretePath grid_path;
  route::WaypointPath waypoints;
  tempo::TimedTrajectory trajectory;
  std::vector<StepRecord> steps;
  MissionSummary summary;
};

// Monitored fixed-step simulation over the mission window plus the settle
// hold. Safety-bound violations show up as red flags in the records and
// summary; controller singularities and integrator blowup abort with a
// phase-annotated error.
MissionResult simulate_tracking(const MissionSetup& setup,
                                const tempo::TimedTrajectory& trajectory);

// Full pipeline. Stage failures carry the phase they occurred in:
// "validate", "plan", "time", or "simulate".
MissionResult run_mission(const MissionConfig& config);

// Serialized forms used by the CLI. All floating-point output is printed
// with %.9g so identical missions produce byte-identical files.
std::string waypoint_table(const route::WaypointPath& waypoints);
std::string timed_table(const tempo::TimedTrajectory& trajectory);
std::string trace_csv(const std::vector<StepRecord>& steps);
std::string summary_text(const MissionSummary& summary);

// 0 for a clean mission, 4 when any safety flag went red.
int exit_code(const MissionSummary& summary);
// 2 for parse/config/domain errors, 3 for planner infeasibility, 4 for
// in-flight failures.
int exit_code(ErrorCode code);

}  // namespace qpsim::mission
