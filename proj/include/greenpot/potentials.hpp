#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "greenpot/green.hpp"
#include "greenpot/grid.hpp"
#include "greenpot/simulate.hpp"

namespace greenpot {

// Admissible test functions. The paper's class is CL = C_b cap L^1 with
// norm ||f||_inf + ||f||_1; box indicators are admitted for occupation
// checks but flagged as outside CL (discontinuous).
class TestFunction {
 public:
  enum class Family { ExpAbs, GaussianBump, BoxIndicator, Tabulated, Custom };

  // f(y) = exp(-sum_k |y_k|)
  static TestFunction exp_abs(int dim);
  // f(y) = exp(-|y - center|^2 / (2 width^2))
  static TestFunction gaussian_bump(int dim, double width = 1.0, const Point& center = Point{});
  static TestFunction box_indicator(const Box& b);
  static TestFunction tabulated(Field table);
  // In-process only (not serializable); norms quadratured unless supplied.
  static TestFunction custom(int dim, TestFn fn, double sup = -1, double l1 = -1);
  static TestFunction zero(int dim) { return custom(dim, TestFn(), 0.0, 0.0); }

  double operator()(const Point& y) const;
  TestFn as_fn() const;

  int dim() const { return dim_; }
  Family family() const { return family_; }
  bool in_cl() const { return family_ != Family::BoxIndicator; }
  bool has_closed_norms() const;
  double sup_norm() const;
  double l1_norm() const;
  // ||f||_1 mass beyond the L-infinity ball of radius R (upper estimate).
  double tail_mass(double R) const;

  double width = 1.0;
  Point center;
  Box box;
  Field table;

 private:
  TestFunction() = default;
  Family family_ = Family::Custom;
  int dim_ = 3;
  TestFn fn_;
  double sup_ = -1, l1_ = -1;
};

struct ClNorms {
  double sup = 0, l1 = 0, cl = 0;
};

// Closed form where available, lattice quadrature with extent doubling
// otherwise; NotInCL when the doubling does not converge.
ClNorms cl_norm(const TestFunction& f);

// E[Y(f)] = f(x) + int f(y) G(x-y) dy by lattice quadrature against a
// computed Green field. escape_estimate (if non-null) receives the bound on
// the mass of f outside the shifted grid times the boundary Green level.
double potential_exact(const TestFunction& f, const Point& x, const GreenField& green,
                       double* escape_estimate = nullptr);

struct ProcessConfig {
  enum class Kind { Cpp, Brownian, Diffusion };
  Kind kind = Kind::Cpp;
  const JumpKernel* kernel = nullptr;             // Cpp
  const DiffusionCoefficients* coeffs = nullptr;  // Diffusion
  DiscretizedOptions walk;                        // Brownian / Diffusion
};

struct PotentialEstimate {
  double mean = 0;
  double sample_variance = 0;
  double standard_error = 0;  // sqrt(sample_variance / n_paths)
  long n_paths = 0;
  double horizon = 0;         // mean simulated time per path
  double tail_estimate = 0;   // mean per-path bound on the stopped remainder
  std::uint64_t seed = 0;
};

// Plain Monte Carlo over n_paths independent paths with per-path seeds
// derive_seed(seed, i). Results are identical for any thread count: each
// path writes to its own slot and the reduction runs serially in index
// order. per_path (optional) receives the Y values.
PotentialEstimate potential_mc(const TestFunction& f, const Point& x, const ProcessConfig& proc,
                               long n_paths, const StopRule& stop, std::uint64_t seed,
                               int threads, std::vector<double>* per_path = nullptr,
                               std::vector<double>* per_path_tail = nullptr);

// Variance of Y(f) started at 0 from the measure-level formula
//   2 int int f(y) f(y+z) GG(dy) GG(dz) - (int int f(y) f(z) GG(dy) GG(dz))
// with GG = delta_0 + G dy expanded exactly (all atom/regular cross terms).
double variance_exact(const TestFunction& f, const GreenField& green);

// The three-term expansion as printed in the source material; differs from
// variance_exact by the atom/regular cross term 2 int f^2 G.
double variance_paper_expansion(const TestFunction& f, const GreenField& green);

struct VarianceReport {
  double v_measure = 0;
  double v_paper_expansion = 0;
  double v_monte_carlo = 0;
  double mc_relative_se = 0;
  long n_paths = 0;
  std::string discrepancy_flags;
};

// V(exp_abs) for a kernel even in each coordinate; verifies G inherits the
// coordinate-wise symmetry and returns (V, V > 0).
std::pair<double, bool> positivity_check(const JumpKernel& kernel, const GridSpec& grid,
                                         double series_tol = 1e-4, const GreenQuad& quad = {});

}  // namespace greenpot
