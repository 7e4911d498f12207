#include "qpsim/terrain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string_view>
#include <vector>

namespace qpsim::terrain {

namespace {

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_real(std::string_view tok, int line) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(line, "invalid number '" + std::string(tok) + "'");
  if (!std::isfinite(value))
    throw ParseError(line, "non-finite value '" + std::string(tok) + "'");
  return value;
}

long parse_integer(std::string_view tok, int line) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(line, "invalid integer '" + std::string(tok) + "'");
  return value;
}

double header_field(std::istream& in, const char* key, int line, bool integer,
                    long* int_out = nullptr) {
  std::string text;
  if (!std::getline(in, text)) throw ParseError(line, std::string("missing '") + key + "' header");
  auto tokens = tokenize(text);
  if (tokens.size() != 2 || tokens[0] != key)
    throw ParseError(line, std::string("expected '") + key + " <value>'");
  if (integer) {
    long v = parse_integer(tokens[1], line);
    if (int_out) *int_out = v;
    return static_cast<double>(v);
  }
  return parse_real(tokens[1], line);
}

}  // namespace

void validate(const SafetyParams& params) {
  if (!(params.epsilon > 0) || !(params.delta > 0) || !(params.s_max > 0))
    throw Error(ErrorCode::config_error, "safety parameters must be strictly positive");
}

ElevationMap::ElevationMap(const Eigen::Vector2d& origin, double cell_size,
                           Eigen::MatrixXd heights)
    : origin_(origin), cell_size_(cell_size), heights_(std::move(heights)) {
  if (!(cell_size_ > 0) || !std::isfinite(cell_size_))
    throw Error(ErrorCode::domain_error, "cell size must be positive");
  if (heights_.rows() < 2 || heights_.cols() < 2)
    throw Error(ErrorCode::domain_error, "elevation map needs at least 2x2 cells");
  if (!heights_.allFinite())
    throw Error(ErrorCode::domain_error, "elevation map holds non-finite heights");
}

bool ElevationMap::contains(double x, double y) const {
  return x >= min_x() && x <= max_x() && y >= min_y() && y <= max_y();
}

double ElevationMap::sample(double x, double y) const {
  if (!contains(x, y))
    throw Error(ErrorCode::domain_error, "query outside elevation map footprint");
  const double fx = (x - origin_.x()) / cell_size_;
  const double fy = (y - origin_.y()) / cell_size_;
  int c0 = 0, r0 = 0;
  double tx = 0, ty = 0;
  if (cols() > 1) {
    c0 = std::clamp(static_cast<int>(std::floor(fx)), 0, cols() - 2);
    tx = fx - c0;
  }
  if (rows() > 1) {
    r0 = std::clamp(static_cast<int>(std::floor(fy)), 0, rows() - 2);
    ty = fy - r0;
  }
  const int c1 = std::min(c0 + 1, cols() - 1);
  const int r1 = std::min(r0 + 1, rows() - 1);
  const double v00 = heights_(r0, c0), v01 = heights_(r0, c1);
  const double v10 = heights_(r1, c0), v11 = heights_(r1, c1);
  return (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11);
}

ElevationMap load_map(std::istream& in) {
  long ncols = 0, nrows = 0;
  header_field(in, "ncols", 1, true, &ncols);
  header_field(in, "nrows", 2, true, &nrows);
  if (ncols < 2) throw ParseError(1, "ncols must be at least 2");
  if (nrows < 2) throw ParseError(2, "nrows must be at least 2");
  const double xll = header_field(in, "xll", 3, false);
  const double yll = header_field(in, "yll", 4, false);
  const double cellsize = header_field(in, "cellsize", 5, false);
  if (!(cellsize > 0)) throw ParseError(5, "cellsize must be positive");

  Eigen::MatrixXd heights(nrows, ncols);
  std::string text;
  int line = 5;
  for (long file_row = 0; file_row < nrows; ++file_row) {
    if (!std::getline(in, text)) throw ParseError(line + 1, "missing height row");
    ++line;
    auto tokens = tokenize(text);
    if (static_cast<long>(tokens.size()) != ncols)
      throw ParseError(line, "expected " + std::to_string(ncols) + " values, got " +
                                 std::to_string(tokens.size()));
    for (long c = 0; c < ncols; ++c)
      heights(nrows - 1 - file_row, c) = parse_real(tokens[c], line);  // top row = largest y
  }
  while (std::getline(in, text)) {
    ++line;
    if (!tokenize(text).empty()) throw ParseError(line, "unexpected trailing content");
  }
  return ElevationMap({xll, yll}, cellsize, std::move(heights));
}

ElevationMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::parse_error, "cannot open terrain file '" + path + "'");
  return load_map(in);
}

void write_map(std::ostream& out, const ElevationMap& map) {
  char buf[64];
  out << "ncols " << map.cols() << "\n";
  out << "nrows " << map.rows() << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", map.origin().x());
  out << "xll " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", map.origin().y());
  out << "yll " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", map.cell_size());
  out << "cellsize " << buf << "\n";
  for (int r = map.rows() - 1; r >= 0; --r) {
    for (int c = 0; c < map.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", map.at(r, c));
      out << buf << (c + 1 == map.cols() ? "" : " ");
    }
    out << "\n";
  }
}

void write_map(const std::string& path, const ElevationMap& map) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::config_error, "cannot write terrain file '" + path + "'");
  write_map(out, map);
}

ElevationMap expand(const ElevationMap& map, double radius) {
  if (!(radius >= 0) || !std::isfinite(radius))
    throw Error(ErrorCode::domain_error, "expansion radius must be non-negative");
  if (radius == 0) return map;

  const double step = map.cell_size() / 2;
  const int reach = static_cast<int>(std::floor(radius / step));
  struct Offset {
    double dx, dy, lift;
  };
  std::vector<Offset> offsets;
  offsets.reserve(static_cast<std::size_t>(2 * reach + 1) * (2 * reach + 1));
  for (int di = -reach; di <= reach; ++di) {
    for (int dj = -reach; dj <= reach; ++dj) {
      const double dx = di * step, dy = dj * step;
      const double d2 = dx * dx + dy * dy;
      if (d2 > radius * radius) continue;
      offsets.push_back({dx, dy, std::sqrt(radius * radius - d2)});
    }
  }

  Eigen::MatrixXd out(map.rows(), map.cols());
  for (int r = 0; r < map.rows(); ++r) {
    const double y = map.origin().y() + r * map.cell_size();
    for (int c = 0; c < map.cols(); ++c) {
      const double x = map.origin().x() + c * map.cell_size();
      double best = -std::numeric_limits<double>::infinity();
      for (const Offset& o : offsets) {
        const double sx = x + o.dx, sy = y + o.dy;
        if (!map.contains(sx, sy)) continue;
        best = std::max(best, map.sample(sx, sy) + o.lift);
      }
      out(r, c) = best;  // the zero offset always contributes map + radius
    }
  }
  return ElevationMap(map.origin(), map.cell_size(), std::move(out));
}

PointClass classify(const Eigen::Vector3d& point, const ElevationMap& map) {
  return point.z() <= map.sample(point.x(), point.y()) ? PointClass::obstacle
                                                       : PointClass::free_space;
}

Eigen::Vector3i world_to_index(const Eigen::Vector3d& point, double delta) {
  if (!(delta > 0)) throw Error(ErrorCode::domain_error, "lattice resolution must be positive");
  Eigen::Vector3i index;
  for (int axis = 0; axis < 3; ++axis)
    index[axis] = static_cast<int>(std::floor(point[axis] / delta + 0.5));
  return index;
}

Eigen::Vector3d index_to_world(const Eigen::Vector3i& index, double delta) {
  if (!(delta > 0)) throw Error(ErrorCode::domain_error, "lattice resolution must be positive");
  return delta * index.cast<double>();
}

DiscreteElevationMap::DiscreteElevationMap(double delta, int i_min, int j_min,
                                           Eigen::MatrixXi levels)
    : delta_(delta), i_min_(i_min), j_min_(j_min), levels_(std::move(levels)) {
  if (!(delta_ > 0)) throw Error(ErrorCode::domain_error, "lattice resolution must be positive");
  if (levels_.rows() < 1 || levels_.cols() < 1)
    throw Error(ErrorCode::domain_error, "discrete map needs at least one cell");
}

int DiscreteElevationMap::level(int i, int j) const {
  if (!contains(i, j))
    throw Error(ErrorCode::domain_error, "query outside discrete map footprint");
  return levels_(i - i_min_, j - j_min_);
}

namespace {

// Candidate abscissae for the exact bilinear max over [lo, hi]: the
// interval ends plus every data line crossing it. Bilinear surfaces attain
// extrema at patch corners, so a grid of these candidates is exhaustive.
std::vector<double> patch_candidates(double lo, double hi, double origin, double cell, int count) {
  std::vector<double> out{lo, hi};
  const int first = std::max(0, static_cast<int>(std::ceil((lo - origin) / cell - 1e-12)));
  const int last = std::min(count - 1, static_cast<int>(std::floor((hi - origin) / cell + 1e-12)));
  for (int c = first; c <= last; ++c) out.push_back(origin + c * cell);
  return out;
}

}  // namespace

DiscreteElevationMap discretize(const ElevationMap& map, double delta) {
  if (!(delta > 0)) throw Error(ErrorCode::domain_error, "lattice resolution must be positive");
  const auto quantize = [delta](double v) {
    return static_cast<int>(std::floor(v / delta + 0.5));
  };
  const int i_lo = quantize(map.min_x()), i_hi = quantize(map.max_x());
  const int j_lo = quantize(map.min_y()), j_hi = quantize(map.max_y());

  Eigen::MatrixXi levels(i_hi - i_lo + 1, j_hi - j_lo + 1);
  for (int i = i_lo; i <= i_hi; ++i) {
    const double xa = std::max(map.min_x(), (i - 0.5) * delta);
    const double xb = std::min(map.max_x(), (i + 0.5) * delta);
    const auto xs = patch_candidates(xa, xb, map.origin().x(), map.cell_size(), map.cols());
    for (int j = j_lo; j <= j_hi; ++j) {
      const double ya = std::max(map.min_y(), (j - 0.5) * delta);
      const double yb = std::min(map.max_y(), (j + 0.5) * delta);
      const auto ys = patch_candidates(ya, yb, map.origin().y(), map.cell_size(), map.rows());
      double best = -std::numeric_limits<double>::infinity();
      for (double x : xs)
        for (double y : ys) best = std::max(best, map.sample(x, y));
      levels(i - i_lo, j - j_lo) = quantize(best);
    }
  }
  return DiscreteElevationMap(delta, i_lo, j_lo, std::move(levels));
}

}  // namespace qpsim::terrain
