#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "greenpot/grid.hpp"
#include "greenpot/point.hpp"
#include "greenpot/rng.hpp"

namespace greenpot {

enum class KernelFamily { Gaussian, ExpTail, Tabulated };

// Description consumed by make_kernel. Gaussian takes the inverse-variance
// scale b (density C exp(-b|x|^2/2)); ExpTail the decay rate delta (density
// C exp(-delta |x|)); Tabulated a nonnegative lattice table.
struct KernelSpec {
  int dim = 3;
  KernelFamily family = KernelFamily::Gaussian;
  double b = 1.0;
  double delta = 1.0;
  GridSpec grid;                // tabulated only
  std::vector<double> values;   // tabulated only, unnormalized
};

// Diagnostics recorded at validation time (integrability of the symbol is
// assumed by the theory but not verifiable from a finite table; we report
// the truncated |a_hat| mass and the boundary-shell fraction instead).
struct KernelDiagnostics {
  double symbol_l1 = 0;             // integral of |a_hat| over the probed box
  double symbol_l1_tail_fraction = 0;  // boundary shell share of that integral
  double normalization_adjustment = 0; // relative rescale applied to the table
};

// A validated symmetric jump density with unit mass and finite second
// moment. Immutable after construction; safe to share across threads.
class JumpKernel {
 public:
  static JumpKernel make(const KernelSpec& spec);

  int dim() const { return spec_.dim; }
  KernelFamily family() const { return spec_.family; }
  const KernelSpec& spec() const { return spec_; }
  bool isotropic() const { return spec_.family != KernelFamily::Tabulated || iso_; }

  // Density a(x).
  double density(const Point& x) const;
  double sup_density() const { return sup_density_; }

  // Fourier symbol a_hat(k) = int exp(-i k.y) a(y) dy; real because a is
  // symmetric. Closed form for the analytic families, lattice sum otherwise.
  double fourier_symbol(const Point& k) const;
  double fourier_symbol_radial(double kabs) const;  // isotropic families only

  // Second moment matrix Sigma_ij = int y_i y_j a(y) dy.
  const SymMatrix& second_moment() const { return sigma_; }
  double sigma_max_eig() const { return sigma_max_; }
  double sigma_min_eig() const { return sigma_min_; }
  double sigma_det() const { return sigma_det_; }
  const SymMatrix& sigma_inv_sqrt() const { return sigma_inv_sqrt_; }

  // Fourth-order coefficient of -log a_hat beyond the quadratic term for
  // isotropic kernels: log a_hat(k) = -sigma^2 k^2/2 + beta k^4 + O(k^6).
  // Zero for the Gaussian family; used by series tail corrections.
  double edgeworth_beta() const { return beta_; }

  // One draw from the density. Consumes a fixed number of uniforms per call
  // for each family, so streams are reproducible and splittable.
  Point sample_jump(Rng& rng) const;

  const KernelDiagnostics& diagnostics() const { return diag_; }

  // Lattice sample of the density on an arbitrary grid, normalized to unit
  // lattice mass (so the DFT symbol is exactly 1 at k = 0).
  Field sample_on_grid(const GridSpec& g) const;

 private:
  JumpKernel() = default;
  void validate_tabulated();
  void compute_moments();
  void build_alias_table();
  void compute_symbol_diagnostics();

  KernelSpec spec_;
  SymMatrix sigma_;
  SymMatrix sigma_inv_sqrt_;
  double sigma_max_ = 0, sigma_min_ = 0, sigma_det_ = 1;
  double beta_ = 0;
  double sup_density_ = 0;
  double normalizer_ = 1.0;  // multiplies tabulated values
  bool iso_ = false;
  KernelDiagnostics diag_;

  // Alias table over cells for tabulated sampling.
  std::vector<double> alias_prob_;
  std::vector<std::int64_t> alias_idx_;
};

// Spec-level operation names, thin wrappers over the class surface.
inline JumpKernel make_kernel(const KernelSpec& spec) { return JumpKernel::make(spec); }
inline double fourier_symbol(const JumpKernel& k, const Point& p) { return k.fourier_symbol(p); }
SymMatrix second_moment(const JumpKernel& k);

// n-fold convolution a*...*a evaluated on the grid through the frequency
// domain (DFT symbol raised to the n-th power, inverted). The lattice mass
// is exactly 1; escaped_mass (if non-null) receives the Gaussian-surrogate
// estimate of the true mass beyond the box, and GridTooSmall is raised when
// it exceeds escape_tol.
Field kfold_density(const JumpKernel& kernel, int n, const GridSpec& grid,
                    double escape_tol = 0.05, double* escaped_mass = nullptr);

}  // namespace greenpot
