#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "greenpot/errors.hpp"

namespace greenpot {

// Hard cap on the spatial dimension. Lattice fields above d = 6 do not fit
// in memory at useful resolutions and the paper's constructions need d >= 3,
// so a small fixed-capacity vector avoids heap traffic in path loops.
inline constexpr int kMaxDim = 8;

struct Point {
  std::array<double, kMaxDim> v{};
  int d = 0;

  Point() = default;
  explicit Point(int dim) : d(dim) {}
  Point(std::initializer_list<double> xs) : d(static_cast<int>(xs.size())) {
    int i = 0;
    for (double x : xs) v[static_cast<size_t>(i++)] = x;
  }

  static Point zero(int dim) { return Point(dim); }

  double& operator[](int i) { return v[static_cast<size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<size_t>(i)]; }
  int dim() const { return d; }

  Point& operator+=(const Point& o) {
    for (int i = 0; i < d; ++i) v[size_t(i)] += o.v[size_t(i)];
    return *this;
  }
  Point& operator-=(const Point& o) {
    for (int i = 0; i < d; ++i) v[size_t(i)] -= o.v[size_t(i)];
    return *this;
  }
  Point& operator*=(double s) {
    for (int i = 0; i < d; ++i) v[size_t(i)] *= s;
    return *this;
  }

  friend Point operator+(Point a, const Point& b) { return a += b; }
  friend Point operator-(Point a, const Point& b) { return a -= b; }
  friend Point operator*(double s, Point a) { return a *= s; }

  double norm2() const {
    double s = 0;
    for (int i = 0; i < d; ++i) s += v[size_t(i)] * v[size_t(i)];
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }
};

inline double dot(const Point& a, const Point& b) {
  double s = 0;
  for (int i = 0; i < a.d; ++i) s += a[i] * b[i];
  return s;
}

inline void check_dim(int d) {
  if (d < 3) fail(ErrorCode::DimensionTooSmall, "dimension must be >= 3, got " + std::to_string(d));
  if (d > kMaxDim) fail(ErrorCode::DimensionTooLarge, "dimension capped at " + std::to_string(kMaxDim));
}

// Symmetric d x d matrix stored densely; small d only.
struct SymMatrix {
  std::array<double, kMaxDim * kMaxDim> a{};
  int d = 0;

  SymMatrix() = default;
  explicit SymMatrix(int dim) : d(dim) {}

  static SymMatrix identity(int dim, double scale = 1.0) {
    SymMatrix m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = scale;
    return m;
  }

  double& operator()(int i, int j) { return a[static_cast<size_t>(i * kMaxDim + j)]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i * kMaxDim + j)]; }

  Point apply(const Point& x) const {
    Point y(d);
    for (int i = 0; i < d; ++i) {
      double s = 0;
      for (int j = 0; j < d; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  double quad(const Point& x) const {
    double s = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s += x[i] * (*this)(i, j) * x[j];
    return s;
  }
};

// Jacobi eigenvalue iteration for small symmetric matrices. Returns
// eigenvalues ascending; optionally accumulates eigenvectors (columns).
void sym_eigen(const SymMatrix& m, std::array<double, kMaxDim>& evals,
               SymMatrix* evecs = nullptr);

// Symmetric positive-definite square root and inverse square root.
SymMatrix sym_sqrt(const SymMatrix& m);
SymMatrix sym_inv_sqrt(const SymMatrix& m);
double sym_det(const SymMatrix& m);

}  // namespace greenpot
