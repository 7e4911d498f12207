#include "qpsim/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qpsim/mission.hpp"

namespace qpsim::cli {

namespace {

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::config_error, "cannot write output file '" + path + "'");
  out << content;
}

void report(const Error& e) {
  std::cerr << "error: category=" << to_string(e.code());
  if (!e.phase().empty()) std::cerr << " phase=" << e.phase();
  std::cerr << ": " << e.what() << "\n";
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"quadcopter-payload transport: planning, timing, and monitored simulation"};
  app.require_subcommand(1);

  mission::SynthParams synth;
  std::string terrain_out;
  CLI::App* terrain_cmd = app.add_subcommand("terrain", "Generate a synthetic terrain file");
  terrain_cmd->add_option("--seed", synth.seed, "Generator seed");
  terrain_cmd->add_option("--size-x", synth.size_x, "Cells along x");
  terrain_cmd->add_option("--size-y", synth.size_y, "Cells along y");
  terrain_cmd->add_option("--cell", synth.cell, "Cell size in meters");
  terrain_cmd->add_option("--base", synth.base, "Ground level in meters");
  terrain_cmd->add_option("--roughness", synth.roughness, "Ground noise amplitude");
  terrain_cmd->add_option("--density", synth.density, "Building coverage fraction");
  terrain_cmd->add_option("--height-min", synth.height_min, "Minimum building height");
  terrain_cmd->add_option("--height-max", synth.height_max, "Maximum building height");
  terrain_cmd->add_option("--out", terrain_out, "Output file (default stdout)");

  std::string config_path;
  std::string table_out;
  CLI::App* plan_cmd = app.add_subcommand("plan", "Plan the waypoint path");
  plan_cmd->add_option("--config", config_path, "Mission config file")->required();
  plan_cmd->add_option("--out", table_out, "Waypoint table output (default stdout)");

  CLI::App* time_cmd = app.add_subcommand("time", "Plan waypoint arrival times");
  time_cmd->add_option("--config", config_path, "Mission config file")->required();
  time_cmd->add_option("--out", table_out, "Timed table output (default stdout)");

  std::string trace_out;
  std::string summary_out;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "Run the monitored closed-loop simulation");
  sim_cmd->add_option("--config", config_path, "Mission config file")->required();
  sim_cmd->add_option("--trace", trace_out, "Trace CSV output (default stdout)");
  sim_cmd->add_option("--summary", summary_out, "Summary output (default stderr)");

  CLI::App* run_cmd = app.add_subcommand("run", "Full pipeline with summary on stdout");
  run_cmd->add_option("--config", config_path, "Mission config file")->required();
  run_cmd->add_option("--trace", trace_out, "Also write the trace CSV here");
  run_cmd->add_option("--waypoints", table_out, "Also write the timed waypoint table here");
  run_cmd->add_option("--summary", summary_out, "Summary output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (terrain_cmd->parsed()) {
      std::ostringstream buffer;
      terrain::write_map(buffer, mission::synth_terrain(synth));
      write_output(terrain_out, buffer.str());
      return 0;
    }

    const mission::MissionConfig config = mission::load_config(config_path);
    if (plan_cmd->parsed()) {
      const mission::MissionSetup s = mission::setup(config);
      const route::WaypointPath waypoints =
          route::to_waypoints(mission::plan_route(s), s.config.planner.delta);
      write_output(table_out, mission::waypoint_table(waypoints));
      return 0;
    }
    if (time_cmd->parsed()) {
      const mission::MissionSetup s = mission::setup(config);
      const route::WaypointPath waypoints =
          route::to_waypoints(mission::plan_route(s), s.config.planner.delta);
      write_output(table_out, mission::timed_table(mission::plan_schedule(s, waypoints)));
      return 0;
    }

    const mission::MissionResult result = mission::run_mission(config);
    if (sim_cmd->parsed()) {
      write_output(trace_out, mission::trace_csv(result.steps));
      if (summary_out.empty())
        std::cerr << mission::summary_text(result.summary);
      else
        write_output(summary_out, mission::summary_text(result.summary));
    } else {
      if (!trace_out.empty()) write_output(trace_out, mission::trace_csv(result.steps));
      if (!table_out.empty())
        write_output(table_out, mission::timed_table(result.trajectory));
      write_output(summary_out, mission::summary_text(result.summary));
    }
    return mission::exit_code(result.summary);
  } catch (const Error& e) {
    report(e);
    return mission::exit_code(e.code());
  }
}

}  // namespace qpsim::cli
