#include "greenpot/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace greenpot {

double Field::mass() const {
  double s = 0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

double Field::max_abs() const {
  double m = 0;
  for (double v : values) m = std::max(m, std::fabs(v));
  return m;
}

double Field::min_value() const {
  double m = values.empty() ? 0.0 : values[0];
  for (double v : values) m = std::min(m, v);
  return m;
}

double Field::interpolate(const Point& x) const {
  const int d = grid.dim;
  const int n = grid.points_per_axis;
  const double h = grid.spacing();

  int base[kMaxDim];
  double w[kMaxDim];
  for (int a = 0; a < d; ++a) {
    double t = x[a] / h + n / 2;  // fractional index
    double fl = std::floor(t);
    int i0 = static_cast<int>(fl);
    if (i0 < 0 || i0 >= n - 1) return 0.0;
    base[a] = i0;
    w[a] = t - fl;
  }

  // Accumulate over the 2^d corners.
  double sum = 0;
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double weight = 1;
    std::int64_t flat = 0;
    for (int a = 0; a < d; ++a) {
      int bit = (c >> a) & 1;
      weight *= bit ? w[a] : (1.0 - w[a]);
      flat = flat * n + (base[a] + bit);
    }
    sum += weight * values[static_cast<size_t>(flat)];
  }
  return sum;
}

void write_field_csv(const Field& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::ConfigParse, "cannot open for writing: " + path);
  const int d = f.grid.dim;
  for (int a = 0; a < d; ++a) out << "x" << (a + 1) << ",";
  out << "value\n";
  char buf[64];
  for_each_index(f.grid, [&](const int* idx, std::int64_t flat) {
    for (int a = 0; a < d; ++a) {
      std::snprintf(buf, sizeof buf, "%.17g,", f.grid.coord(idx[a]));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", f.at(flat));
    out << buf;
  });
}

Field read_field_csv(const GridSpec& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigParse, "cannot open: " + path);
  Field f(g);
  std::vector<bool> seen(static_cast<size_t>(g.size()), false);
  std::string line;
  std::getline(in, line);  // header
  const double h = g.spacing();
  std::int64_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    int idx[kMaxDim];
    for (int a = 0; a < g.dim; ++a) {
      if (!std::getline(ss, cell, ',')) fail(ErrorCode::ConfigParse, "short row in " + path);
      double x = std::stod(cell);
      double t = x / h + g.points_per_axis / 2;
      int i = static_cast<int>(std::lround(t));
      if (i < 0 || i >= g.points_per_axis || std::fabs(t - i) > 1e-6)
        fail(ErrorCode::ConfigParse, "coordinate off-lattice in " + path + ": " + cell);
      idx[a] = i;
    }
    if (!std::getline(ss, cell, ',')) fail(ErrorCode::ConfigParse, "missing value in " + path);
    std::int64_t flat = f.flat_index(idx);
    f.at(flat) = std::stod(cell);
    seen[static_cast<size_t>(flat)] = true;
    ++rows;
  }
  if (rows != g.size()) {
    fail(ErrorCode::ConfigParse, "row count " + std::to_string(rows) + " does not match grid size " +
                                     std::to_string(g.size()) + " in " + path);
  }
  return f;
}

}  // namespace greenpot
