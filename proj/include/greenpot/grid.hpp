#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "greenpot/errors.hpp"
#include "greenpot/point.hpp"

namespace greenpot {

// Origin-centered uniform lattice: per axis the nodes are
//   x_i = (i - n/2) * h,  i = 0..n-1,  h = 2L/n,
// so the box is [-L, L)^d and the origin is a lattice point (n even).
struct GridSpec {
  int dim = 3;
  double half_extent = 6.0;   // L
  int points_per_axis = 64;   // n, even

  double spacing() const { return 2.0 * half_extent / points_per_axis; }
  std::int64_t size() const {
    std::int64_t s = 1;
    for (int i = 0; i < dim; ++i) s *= points_per_axis;
    return s;
  }
  double cell_volume() const {
    double v = 1;
    for (int i = 0; i < dim; ++i) v *= spacing();
    return v;
  }

  double coord(int index) const { return (index - points_per_axis / 2) * spacing(); }

  void validate() const {
    check_dim(dim);
    if (half_extent <= 0) fail(ErrorCode::ConfigParse, "grid half_extent must be > 0");
    if (points_per_axis < 4 || points_per_axis % 2 != 0)
      fail(ErrorCode::ConfigParse, "points_per_axis must be even and >= 4");
  }

  bool operator==(const GridSpec& o) const {
    return dim == o.dim && half_extent == o.half_extent && points_per_axis == o.points_per_axis;
  }
};

// Dense real lattice field over a GridSpec, row-major with the last axis
// contiguous. Values are indexed by the integer multi-index of the grid.
struct Field {
  GridSpec grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const GridSpec& g) : grid(g), values(static_cast<size_t>(g.size()), 0.0) {}

  double& at(std::int64_t flat) { return values[static_cast<size_t>(flat)]; }
  double at(std::int64_t flat) const { return values[static_cast<size_t>(flat)]; }

  std::int64_t flat_index(const int* idx) const {
    std::int64_t f = 0;
    for (int a = 0; a < grid.dim; ++a) f = f * grid.points_per_axis + idx[a];
    return f;
  }

  // Lattice point coordinates for a flat index.
  Point point_at(std::int64_t flat) const {
    Point x(grid.dim);
    for (int a = grid.dim - 1; a >= 0; --a) {
      int i = static_cast<int>(flat % grid.points_per_axis);
      flat /= grid.points_per_axis;
      x[a] = grid.coord(i);
    }
    return x;
  }

  // Trapezoid mass h^d * sum(values); on a periodic lattice this is the
  // exact DC Fourier coefficient.
  double mass() const;
  double max_abs() const;
  double min_value() const;

  // Multilinear interpolation at an arbitrary point inside the box.
  // Returns 0 outside the grid hull.
  double interpolate(const Point& x) const;
};

// Axis-aligned box [lo, hi) used by occupation partitions and indicator
// test functions.
struct Box {
  Point lo, hi;

  bool contains(const Point& x) const {
    for (int a = 0; a < lo.dim(); ++a)
      if (x[a] < lo[a] || x[a] >= hi[a]) return false;
    return true;
  }
  double volume() const {
    double v = 1;
    for (int a = 0; a < lo.dim(); ++a) v *= hi[a] - lo[a];
    return v;
  }
  bool overlaps(const Box& o) const {
    for (int a = 0; a < lo.dim(); ++a)
      if (hi[a] <= o.lo[a] || o.hi[a] <= lo[a]) return false;
    return true;
  }
};

// Iterate all multi-indices of a grid; calls fn(idx_array, flat_index).
template <typename Fn>
void for_each_index(const GridSpec& g, Fn&& fn) {
  std::vector<int> idx(static_cast<size_t>(g.dim), 0);
  const std::int64_t total = g.size();
  for (std::int64_t f = 0; f < total; ++f) {
    fn(idx.data(), f);
    for (int a = g.dim - 1; a >= 0; --a) {
      if (++idx[static_cast<size_t>(a)] < g.points_per_axis) break;
      idx[static_cast<size_t>(a)] = 0;
    }
  }
}

// CSV export with columns x1..xd,value (one row per lattice point).
void write_field_csv(const Field& f, const std::string& path);

// CSV import in the same layout; the grid must be supplied and match the
// row count. Rows may be in any order.
Field read_field_csv(const GridSpec& g, const std::string& path);

}  // namespace greenpot
