#pragma once

#include <string>
#include <utility>

#include "greenpot/grid.hpp"
#include "greenpot/kernels.hpp"

namespace greenpot {

struct TruncationInfo {
  int terms = 0;               // lattice convolution terms (series routes)
  double tail_estimate = 0;    // estimated residual beyond what was computed
  double quad_radius = 0;      // frequency box radius (fourier routes)
  double escaped_mass = 0;     // estimated true mass beyond the grid
  double imag_residual = 0;    // max |Im| discarded by the inverse transform
  std::string notes;
};

enum class GreenMethod { Series, Fourier };

// A Green or resolvent density on a lattice, with provenance.
struct GreenField {
  Field field;
  double lambda = 0;  // 0 means G_0
  GreenMethod method = GreenMethod::Series;
  TruncationInfo trunc;
};

// Numerical knobs shared by the lattice routes. pad_factor extends the
// working box (same spacing) to keep wrap-around images away from the
// retained grid; alias_target bounds the per-term wrapped mass allowed for
// lattice convolution powers.
struct GreenQuad {
  int pad_factor = 3;
  double alias_target = 1e-9;
  int max_terms = 128;
  // When false the series routes return the bare partial sum and record the
  // whole modeled remainder as tail_estimate instead of adding it.
  bool tail_completion = true;
};

// Regular part G_0 = sum_{n>=1} a_n by lattice convolution powers up to N
// (chosen from the wrap-around bound) plus the local-limit tail completion.
// The recorded tail_estimate bounds the model residual; SlowConvergence if
// it exceeds tol.
GreenField green_series(const JumpKernel& kernel, const GridSpec& grid, double tol,
                        const GreenQuad& quad = {});

// G_0 by Fourier inversion of a_hat/(1 - a_hat): the first convolution term
// is peeled off exactly, the k = 0 singularity is removed by subtracting a
// damped quadratic-pole model whose inverse transform is known in closed
// form (incomplete gamma), and the smooth remainder is inverted on the
// padded dual lattice.
GreenField green_fourier(const JumpKernel& kernel, const GridSpec& grid,
                         const GreenQuad& quad = {});

// Resolvent regular part G_lambda = sum_n a_n (1+lambda)^{-n}. lambda = 0
// delegates to green_series; lambda < 0 raises NonpositiveLambda.
GreenField resolvent_kernel(const JumpKernel& kernel, double lambda, const GridSpec& grid,
                            double tol = 1e-6, const GreenQuad& quad = {});

// Independent Fourier-route evaluation of G_lambda through the split
//   1/(1-a_hat+lambda) = 1/(1+lambda) + a_hat /((1+lambda)(1-a_hat+lambda)),
// with a Yukawa-type subtraction for the sharp k = 0 peak. Cross-check
// companion to resolvent_kernel; accuracy degrades below lambda ~ 0.05.
GreenField resolvent_fourier(const JumpKernel& kernel, double lambda, const GridSpec& grid,
                             const GreenQuad& quad = {});

// Transition density split into the surviving atom e^{-t} delta_0 and the
// regular part p_reg(t,.) = sum_{n>=1} e^{-t} t^n/n! a_n, evaluated in the
// frequency domain as exp(t(A-1)) - e^{-t} on the lattice symbol A.
struct TransitionDensity {
  double t = 0;
  double atom_weight = 0;  // e^{-t}
  Field regular;
  TruncationInfo trunc;
};
TransitionDensity transition_density(const JumpKernel& kernel, double t, const GridSpec& grid,
                                     const GreenQuad& quad = {});

// Cross-check path: same object from the continuum symbol exp(t(a_hat-1));
// closed-form families only.
TransitionDensity transition_density_fourier(const JumpKernel& kernel, double t,
                                             const GridSpec& grid, const GreenQuad& quad = {});

// int_0^T p_reg(t,.) dt together with the modeled remainder
// sum_n (1 - P(n+1,T)) g_n, so that integral + tail -> G_0.
struct TimeIntegral {
  Field integral;
  Field tail;
  TruncationInfo trunc;
};
TimeIntegral green_time_integral(const JumpKernel& kernel, const GridSpec& grid, double T,
                                 const GreenQuad& quad = {});

// Green density of the process generated by the Laplacian:
//   c_d |x-y|^{2-d},  c_d = Gamma(d/2-1) / (4 pi^{d/2}).
// The constant matches generator Delta (not Delta/2); exposed so results can
// be rescaled against unnormalized Riesz-kernel conventions.
double brownian_green_constant(int d);
double brownian_green(int d, const Point& x, const Point& y);

// Least-squares envelope fits of log G against -b|x|^2/2 or -B|x| on radial
// shells. The returned prefactor is inflated to the smallest constant that
// makes the bound hold on the whole grid, so max_violation <= 0 by
// construction; ls_prefactor keeps the raw fit.
enum class DecayModel { GaussianBound, ExponentialBound };
struct DecayFit {
  DecayModel model;
  double prefactor = 0;     // C1 (resp. A), envelope-adjusted
  double exponent = 0;      // b (resp. B) from the least-squares fit
  double ls_prefactor = 0;  // raw least-squares constant
  double max_violation = 0; // max over grid of G - prefactor * envelope
  double r_min = 0, r_max = 0;
  int shells = 0;
};
DecayFit decay_fit(const GreenField& gf, DecayModel model);

}  // namespace greenpot
