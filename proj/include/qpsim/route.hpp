#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qpsim/errors.hpp"
#include "qpsim/terrain.hpp"

// Spatial planning over the discrete expanded elevation map: weighted A* on
// an on-demand 26-connected lattice, string-pulling simplification, and the
// piecewise-linear waypoint parameterization handed to the temporal stage.
namespace qpsim::route {

struct PlannerConfig {
  double delta = 1.0;        // lattice resolution, m
  double weight = 1.1;       // heuristic inflation, >= 1
  long max_expansions = 10'000'000;
  // The printed search pseudocode scales edge costs by the weight as well,
  // which cancels from the arg-min and degenerates to plain A*. Off by
  // default; kept so the two behaviors can be compared.
  bool weight_edges = false;
};

void validate(const PlannerConfig& config);

struct DiscretePath {
  std::vector<Eigen::Vector3i> indices;
};

struct WaypointPath {
  std::vector<Eigen::Vector3d> points;
};

// All 26 face-, edge-, and corner-adjacent lattice indices.
std::vector<Eigen::Vector3i> neighbors(const Eigen::Vector3i& index);

// A cell is traversable when it lies inside the map footprint strictly above
// the stored level. Indices outside the footprint are treated as blocked.
bool traversable(const Eigen::Vector3i& index, const terrain::DiscreteElevationMap& map);

// Weighted A* with Euclidean edge costs and Euclidean distance-to-goal
// heuristic inflated by config.weight. Grid nodes come into existence on
// demand; ties break on (f, h, index) so runs are reproducible.
DiscretePath astar(const Eigen::Vector3i& start, const Eigen::Vector3i& goal,
                   const terrain::DiscreteElevationMap& map, const PlannerConfig& config);

// True when every sample of the straight segment between the two cell
// centers, taken at half-resolution spacing with endpoints included, clears
// the map level at the sample's own column and its four horizontal
// neighbors. Samples outside the footprint fail the test.
bool connectable(const Eigen::Vector3i& a, const Eigen::Vector3i& b,
                 const terrain::DiscreteElevationMap& map);

// Greedy string pulling: from each kept node, jump to the farthest later
// node that connectable() can reach, falling back to the immediate successor
// (a raw grid edge) when none is reachable. Idempotent.
DiscretePath simplify(const DiscretePath& path, const terrain::DiscreteElevationMap& map);

WaypointPath to_waypoints(const DiscretePath& path, double delta);

// Piecewise-linear evaluation with 1-based parameter u in [1, N]; u = N is
// closed so the goal point is reachable.
Eigen::Vector3d eval_spatial(const WaypointPath& path, double u);

}  // namespace qpsim::route
