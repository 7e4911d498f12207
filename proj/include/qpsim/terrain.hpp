#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "qpsim/errors.hpp"

namespace qpsim::terrain {

// Safety envelope shared by planning and in-flight monitoring.
struct SafetyParams {
  double epsilon = 0.65;  // obstacle clearance radius [m]
  double delta = 0.35;    // tracking error budget [m]
  double s_max = 400.0;   // rotor speed ceiling [rad/s]
};

// Throws on non-positive entries.
void validate(const SafetyParams& params);

enum class PointClass { free_space, obstacle };

// Heightfield over a regular grid. Stored values sit at cell centers; the
// origin is the center of the south-west cell. Continuous queries
// interpolate bilinearly between centers and are defined only inside the
// rectangle spanned by the centers.
class ElevationMap {
 public:
  // heights(row, col) is the value at origin + cell_size * (col, row); row 0
  // is the southernmost line of centers.
  ElevationMap(const Eigen::Vector2d& origin, double cell_size, Eigen::MatrixXd heights);

  double cell_size() const { return cell_size_; }
  const Eigen::Vector2d& origin() const { return origin_; }
  int rows() const { return static_cast<int>(heights_.rows()); }
  int cols() const { return static_cast<int>(heights_.cols()); }
  const Eigen::MatrixXd& heights() const { return heights_; }

  double at(int row, int col) const { return heights_(row, col); }

  double min_x() const { return origin_.x(); }
  double max_x() const { return origin_.x() + cell_size_ * (cols() - 1); }
  double min_y() const { return origin_.y(); }
  double max_y() const { return origin_.y() + cell_size_ * (rows() - 1); }

  bool contains(double x, double y) const;

  // Bilinear interpolation, exact at cell centers. Throws domain_error
  // outside the footprint.
  double sample(double x, double y) const;

  double max_value() const { return heights_.maxCoeff(); }

 private:
  Eigen::Vector2d origin_;
  double cell_size_;
  Eigen::MatrixXd heights_;
};

// Grid file layout: five header lines (ncols, nrows, xll, yll, cellsize)
// followed by nrows rows of ncols heights, top row holding the largest y.
// Rejects malformed headers, short rows and non-finite values, reporting the
// offending line number.
ElevationMap load_map(std::istream& in);
ElevationMap load_map(const std::string& path);
void write_map(std::ostream& out, const ElevationMap& map);
void write_map(const std::string& path, const ElevationMap& map);

// Spherical dilation: result(x, y) = max over horizontal offsets ||h|| <= r
// of map((x,y) + h) + sqrt(r^2 - ||h||^2), evaluated at every cell center.
// Offsets run over a half-cell lattice so building walls are resolved a bit
// finer than the storage grid; a radius of zero returns the input unchanged.
ElevationMap expand(const ElevationMap& map, double radius);

// A point on or below the surface is an obstacle.
PointClass classify(const Eigen::Vector3d& point, const ElevationMap& map);

// Cubic-lattice quantization with half-cell rounding, and its inverse.
Eigen::Vector3i world_to_index(const Eigen::Vector3d& point, double delta);
Eigen::Vector3d index_to_world(const Eigen::Vector3i& index, double delta);

// Quantized obstacle ceiling per horizontal lattice cell: level(i, j) is the
// largest quantized expanded height over the cell's footprint area. Flight
// through (i, j, k) is admissible only for k strictly above level(i, j).
class DiscreteElevationMap {
 public:
  DiscreteElevationMap(double delta, int i_min, int j_min, Eigen::MatrixXi levels);

  double resolution() const { return delta_; }
  int i_min() const { return i_min_; }
  int j_min() const { return j_min_; }
  int i_max() const { return i_min_ + static_cast<int>(levels_.rows()) - 1; }
  int j_max() const { return j_min_ + static_cast<int>(levels_.cols()) - 1; }

  bool contains(int i, int j) const {
    return i >= i_min() && i <= i_max() && j >= j_min() && j <= j_max();
  }

  // Throws domain_error outside the covered index range.
  int level(int i, int j) const;

  const Eigen::MatrixXi& levels() const { return levels_; }

 private:
  double delta_;
  int i_min_, j_min_;
  Eigen::MatrixXi levels_;
};

// Conservative quantization of an (already expanded) map: each lattice cell
// takes the exact maximum of the bilinear surface over its footprint area,
// then quantizes. Never underestimates the continuous surface anywhere in
// the cell.
DiscreteElevationMap discretize(const ElevationMap& map, double delta);

}  // namespace qpsim::terrain
