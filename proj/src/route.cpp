#include "qpsim/route.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <unordered_map>
#include <unordered_set>

namespace qpsim::route {

void validate(const PlannerConfig& config) {
  if (!(config.delta > 0))
    throw Error(ErrorCode::config_error, "planner resolution must be positive");
  if (!(config.weight >= 1))
    throw Error(ErrorCode::config_error, "heuristic weight must be at least 1");
  if (config.max_expansions < 1)
    throw Error(ErrorCode::config_error, "expansion budget must be positive");
}

std::vector<Eigen::Vector3i> neighbors(const Eigen::Vector3i& index) {
  std::vector<Eigen::Vector3i> out;
  out.reserve(26);
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      for (int dk = -1; dk <= 1; ++dk) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        out.emplace_back(index.x() + di, index.y() + dj, index.z() + dk);
      }
  return out;
}

bool traversable(const Eigen::Vector3i& index, const terrain::DiscreteElevationMap& map) {
  return map.contains(index.x(), index.y()) && index.z() > map.level(index.x(), index.y());
}

namespace {

// Lattice indices live well inside +/-2^20 for any map this library can
// hold, so a triple packs into one 64-bit hash key.
constexpr std::int64_t kBias = 1 << 20;

std::uint64_t pack(const Eigen::Vector3i& v) {
  return (static_cast<std::uint64_t>(v.x() + kBias) << 42) |
         (static_cast<std::uint64_t>(v.y() + kBias) << 21) |
         static_cast<std::uint64_t>(v.z() + kBias);
}

Eigen::Vector3i unpack(std::uint64_t key) {
  constexpr std::uint64_t mask = (1 << 21) - 1;
  return {static_cast<int>(((key >> 42) & mask) - kBias),
          static_cast<int>(((key >> 21) & mask) - kBias),
          static_cast<int>((key & mask) - kBias)};
}

struct QueueEntry {
  double f;
  double h;
  Eigen::Vector3i index;

  bool operator>(const QueueEntry& other) const {
    if (f != other.f) return f > other.f;
    if (h != other.h) return h > other.h;
    if (index.x() != other.index.x()) return index.x() > other.index.x();
    if (index.y() != other.index.y()) return index.y() > other.index.y();
    return index.z() > other.index.z();
  }
};

}  // namespace

DiscretePath astar(const Eigen::Vector3i& start, const Eigen::Vector3i& goal,
                   const terrain::DiscreteElevationMap& map, const PlannerConfig& config) {
  validate(config);
  if (!traversable(start, map) || !traversable(goal, map))
    throw Error(ErrorCode::no_path, "start or goal lies in restricted space");

  const double delta = map.resolution();
  const auto heuristic = [&](const Eigen::Vector3i& a) {
    return delta * (goal - a).cast<double>().norm();
  };

  std::unordered_map<std::uint64_t, double> best_cost;
  std::unordered_map<std::uint64_t, std::uint64_t> parent;
  std::unordered_set<std::uint64_t> closed;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> open;

  const std::uint64_t start_key = pack(start);
  const std::uint64_t goal_key = pack(goal);
  best_cost[start_key] = 0;
  open.push({config.weight * heuristic(start), heuristic(start), start});

  long expansions = 0;
  while (!open.empty()) {
    const QueueEntry top = open.top();
    open.pop();
    const std::uint64_t key = pack(top.index);
    if (closed.count(key)) continue;  // stale queue entry
    closed.insert(key);
    if (key == goal_key) break;
    if (++expansions > config.max_expansions)
      throw Error(ErrorCode::no_path, "search budget exhausted");

    const double g = best_cost.at(key);
    for (const Eigen::Vector3i& next : neighbors(top.index)) {
      if (!traversable(next, map)) continue;
      const std::uint64_t next_key = pack(next);
      if (closed.count(next_key)) continue;
      double edge = delta * (next - top.index).cast<double>().norm();
      if (config.weight_edges) edge *= config.weight;
      const double candidate = g + edge;
      auto it = best_cost.find(next_key);
      if (it != best_cost.end() && it->second <= candidate) continue;
      best_cost[next_key] = candidate;
      parent[next_key] = key;
      const double h = heuristic(next);
      open.push({candidate + config.weight * h, h, next});
    }
  }

  if (!closed.count(goal_key)) throw Error(ErrorCode::no_path, "goal unreachable");

  DiscretePath path;
  std::uint64_t key = goal_key;
  path.indices.push_back(goal);
  while (key != start_key) {
    key = parent.at(key);
    path.indices.push_back(unpack(key));
  }
  std::reverse(path.indices.begin(), path.indices.end());
  return path;
}

bool connectable(const Eigen::Vector3i& a, const Eigen::Vector3i& b,
                 const terrain::DiscreteElevationMap& map) {
  const double delta = map.resolution();
  const Eigen::Vector3d pa = delta * a.cast<double>();
  const Eigen::Vector3d pb = delta * b.cast<double>();
  const double length = (pb - pa).norm();
  const int steps = std::max(1, static_cast<int>(std::ceil(length / (delta / 2))));
  for (int s = 0; s <= steps; ++s) {
    const Eigen::Vector3d sample = pa + (static_cast<double>(s) / steps) * (pb - pa);
    const Eigen::Vector3i cell = terrain::world_to_index(sample, delta);
    static constexpr int kOffsets[5][2] = {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& o : kOffsets) {
      const int i = cell.x() + o[0], j = cell.y() + o[1];
      if (!map.contains(i, j)) return false;
      if (cell.z() <= map.level(i, j)) return false;
    }
  }
  return true;
}

DiscretePath simplify(const DiscretePath& path, const terrain::DiscreteElevationMap& map) {
  const std::size_t n = path.indices.size();
  if (n <= 2) return path;
  DiscretePath out;
  out.indices.push_back(path.indices.front());
  std::size_t anchor = 0;
  while (anchor + 1 < n) {
    std::size_t next = anchor + 1;  // raw grid edge as fallback
    for (std::size_t j = n - 1; j > anchor + 1; --j) {
      if (connectable(path.indices[anchor], path.indices[j], map)) {
        next = j;
        break;
      }
    }
    out.indices.push_back(path.indices[next]);
    anchor = next;
  }
  return out;
}

WaypointPath to_waypoints(const DiscretePath& path, double delta) {
  if (!(delta > 0)) throw Error(ErrorCode::domain_error, "lattice resolution must be positive");
  WaypointPath out;
  out.points.reserve(path.indices.size());
  for (const Eigen::Vector3i& index : path.indices)
    out.points.push_back(terrain::index_to_world(index, delta));
  return out;
}

Eigen::Vector3d eval_spatial(const WaypointPath& path, double u) {
  const int n = static_cast<int>(path.points.size());
  if (n < 1) throw Error(ErrorCode::domain_error, "empty waypoint path");
  if (!(u >= 1) || !(u <= n))
    throw Error(ErrorCode::domain_error, "spatial parameter outside [1, N]");
  if (n == 1) return path.points.front();
  const int seg = std::min(static_cast<int>(std::floor(u)), n - 1);  // closes u = N
  const double t = u - seg;
  return path.points[seg - 1] + t * (path.points[seg] - path.points[seg - 1]);
}

}  // namespace qpsim::route
