#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qpsim/mission.hpp"

namespace qpsim::mission {

namespace {

std::vector<std::string_view> tokenize(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  return text;
}

[[noreturn]] void fail(int line, const std::string& message) {
  throw Error(ErrorCode::config_error, "line " + std::to_string(line) + ": " + message);
}

double parse_real(std::string_view tok, int line) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value))
    fail(line, "invalid number '" + std::string(tok) + "'");
  return value;
}

template <typename Int>
Int parse_int(std::string_view tok, int line) {
  Int value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    fail(line, "invalid integer '" + std::string(tok) + "'");
  return value;
}

bool parse_bool(std::string_view tok, int line) {
  if (tok == "true" || tok == "1") return true;
  if (tok == "false" || tok == "0") return false;
  fail(line, "invalid boolean '" + std::string(tok) + "'");
}

}  // namespace

MissionConfig parse_config(std::istream& in) {
  MissionConfig cfg;
  SynthParams synth;
  dynamics::BodyParams quad = dynamics::reference_quad();
  dynamics::BodyParams payload = dynamics::reference_payload();
  double spacing = 0.2;
  bool any_qps = false, any_combo = false, any_synth = false;
  bool has_file = false, has_start = false, has_goal = false;

  using Tokens = std::vector<std::string_view>;
  const auto scalar = [](double* slot) {
    return [slot](const Tokens& v, int line) {
      if (v.size() != 1) fail(line, "expected one value");
      *slot = parse_real(v[0], line);
    };
  };
  const auto triple = [](Eigen::Vector3d* slot) {
    return [slot](const Tokens& v, int line) {
      if (v.size() != 3) fail(line, "expected three values");
      for (int i = 0; i < 3; ++i) (*slot)[i] = parse_real(v[i], line);
    };
  };
  const auto poles4 = [](std::array<double, 4>* slot) {
    return [slot](const Tokens& v, int line) {
      if (v.size() != 4) fail(line, "expected four poles");
      for (int i = 0; i < 4; ++i) (*slot)[i] = parse_real(v[i], line);
    };
  };

  std::map<std::string, std::function<void(const Tokens&, int)>, std::less<>> handlers;
  const auto tag = [](bool* flag, std::function<void(const Tokens&, int)> fn) {
    return [flag, fn = std::move(fn)](const Tokens& v, int line) {
      *flag = true;
      fn(v, line);
    };
  };

  handlers["qps.mass"] = tag(&any_qps, scalar(&cfg.params.mass));
  handlers["qps.inertia"] = tag(&any_qps, triple(&cfg.params.inertia));
  handlers["qps.arm"] = tag(&any_qps, scalar(&cfg.params.arm));
  handlers["qps.thrust_coeff"] = tag(&any_qps, scalar(&cfg.params.thrust_coeff));
  handlers["qps.drag_coeff"] = tag(&any_qps, scalar(&cfg.params.drag_coeff));
  handlers["qps.gravity"] = tag(&any_qps, scalar(&cfg.params.gravity));

  handlers["quad.mass"] = tag(&any_combo, scalar(&quad.mass));
  handlers["quad.inertia"] = tag(&any_combo, triple(&quad.inertia));
  handlers["payload.mass"] = tag(&any_combo, scalar(&payload.mass));
  handlers["payload.inertia"] = tag(&any_combo, triple(&payload.inertia));
  handlers["assembly.spacing"] = tag(&any_combo, scalar(&spacing));

  handlers["control.poles.x"] = poles4(&cfg.poles.x);
  handlers["control.poles.y"] = poles4(&cfg.poles.y);
  handlers["control.poles.z"] = poles4(&cfg.poles.z);
  handlers["control.poles.yaw"] = [&cfg](const Tokens& v, int line) {
    if (v.size() != 2) fail(line, "expected two poles");
    for (int i = 0; i < 2; ++i) cfg.poles.yaw[i] = parse_real(v[i], line);
  };

  handlers["planner.delta"] = scalar(&cfg.planner.delta);
  handlers["planner.weight"] = scalar(&cfg.planner.weight);
  handlers["planner.max_expansions"] = [&cfg](const Tokens& v, int line) {
    if (v.size() != 1) fail(line, "expected one value");
    cfg.planner.max_expansions = parse_int<long>(v[0], line);
  };
  handlers["planner.literal_weighting"] = [&cfg](const Tokens& v, int line) {
    if (v.size() != 1) fail(line, "expected one value");
    cfg.planner.weight_edges = parse_bool(v[0], line);
  };

  handlers["temporal.time_tolerance"] = scalar(&cfg.temporal.time_tolerance);
  handlers["temporal.initial_guess"] = scalar(&cfg.temporal.initial_guess);
  handlers["temporal.dt_sim"] = scalar(&cfg.temporal.dt_sim);

  handlers["safety.epsilon"] = scalar(&cfg.safety.epsilon);
  handlers["safety.delta"] = scalar(&cfg.safety.delta);
  handlers["safety.s_max"] = scalar(&cfg.safety.s_max);

  handlers["mission.start"] = tag(&has_start, triple(&cfg.start));
  handlers["mission.goal"] = tag(&has_goal, triple(&cfg.goal));
  handlers["mission.settle_time"] = scalar(&cfg.settle_time);

  handlers["terrain.file"] = [&](const Tokens& v, int line) {
    if (v.size() != 1) fail(line, "expected one path");
    has_file = true;
    cfg.terrain_file = std::string(v[0]);
  };
  handlers["terrain.synth.seed"] = tag(&any_synth, [&synth](const Tokens& v, int line) {
    if (v.size() != 1) fail(line, "expected one value");
    synth.seed = parse_int<std::uint64_t>(v[0], line);
  });
  const auto synth_int = [&any_synth, &tag](int* slot) {
    return tag(&any_synth, [slot](const Tokens& v, int line) {
      if (v.size() != 1) fail(line, "expected one value");
      *slot = parse_int<int>(v[0], line);
    });
  };
  handlers["terrain.synth.size_x"] = synth_int(&synth.size_x);
  handlers["terrain.synth.size_y"] = synth_int(&synth.size_y);
  handlers["terrain.synth.cell"] = tag(&any_synth, scalar(&synth.cell));
  handlers["terrain.synth.base"] = tag(&any_synth, scalar(&synth.base));
  handlers["terrain.synth.roughness"] = tag(&any_synth, scalar(&synth.roughness));
  handlers["terrain.synth.density"] = tag(&any_synth, scalar(&synth.density));
  handlers["terrain.synth.height_min"] = tag(&any_synth, scalar(&synth.height_min));
  handlers["terrain.synth.height_max"] = tag(&any_synth, scalar(&synth.height_max));

  std::set<std::string, std::less<>> seen;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    const std::string_view stripped = trim(text);
    if (stripped.empty() || stripped.front() == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos) fail(line, "expected 'key = value'");
    const std::string key{trim(stripped.substr(0, eq))};
    const std::string_view value = trim(stripped.substr(eq + 1));
    if (key.empty()) fail(line, "missing key");
    const auto handler = handlers.find(key);
    if (handler == handlers.end()) fail(line, "unknown key '" + key + "'");
    if (!seen.insert(key).second) fail(line, "duplicate key '" + key + "'");
    const Tokens tokens = tokenize(value);
    if (tokens.empty()) fail(line, "missing value for '" + key + "'");
    handler->second(tokens, line);
  }

  if (!has_start || !has_goal)
    throw Error(ErrorCode::config_error, "mission.start and mission.goal are required");
  if (has_file && any_synth)
    throw Error(ErrorCode::config_error, "terrain.file and terrain.synth.* are exclusive");
  if (!has_file && !any_synth)
    throw Error(ErrorCode::config_error, "a terrain source (file or synthetic) is required");
  if (any_qps && any_combo)
    throw Error(ErrorCode::config_error,
                "qps.* and quad/payload/assembly vehicle groups are exclusive");
  if (any_synth) cfg.synth = synth;
  if (any_combo) {
    const dynamics::InertiaCombination joint =
        dynamics::combine_inertia(quad, payload, spacing);
    cfg.params.mass = joint.mass;
    cfg.params.inertia = joint.inertia;
  }
  return cfg;
}

MissionConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace qpsim::mission
