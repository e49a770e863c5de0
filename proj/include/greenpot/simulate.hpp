#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "greenpot/grid.hpp"
#include "greenpot/kernels.hpp"
#include "greenpot/point.hpp"
#include "greenpot/rng.hpp"

namespace greenpot {

using TestFn = std::function<double(const Point&)>;

// When adaptive is set, simulation continues past `horizon` until the path
// has both escaped `escape_radius` and the last `window` time units added
// less than eps_tail * |Y| to the running |f|-integral. The remainder after
// stopping is reported separately as a tail estimate, never silently
// dropped. hard caps bound runaway paths.
struct StopRule {
  double horizon = 50.0;
  bool adaptive = false;
  double escape_radius = 120.0;
  double window = 10.0;
  double eps_tail = 1e-4;
  double hard_cap_time = 1e7;
  long hard_cap_steps = 2000000000L;
  TestFn f;  // drives the window criterion; may be empty for plain horizons
};

enum class Termination { HorizonReached, TailCriterionMet, HardCap };

struct PathSample {
  Point start;
  enum Kind { JumpChain, Discretized } kind = JumpChain;
  std::vector<std::pair<Point, double>> jump_chain;  // (state, holding time)
  double dt = 0;
  std::vector<Point> states;
  std::uint64_t seed = 0;
  double horizon = 0;
  Termination termination = Termination::HorizonReached;
  double total_time = 0;
};

// Compound Poisson path: holding times Exp(1) -- the generator's total jump
// rate is int a = 1 -- and jump displacements drawn from the kernel.
PathSample sample_cpp_path(const JumpKernel& kernel, const Point& x0, const StopRule& stop,
                           std::uint64_t seed);

// Exact pathwise integral sum_i f(state_i) * holding_i.
double integrate_along_cpp(const PathSample& path, const TestFn& f);

// Brownian path for generator Delta: increments N(0, 2 dt I) per step,
// states[0] = x0, floor(T/dt)+1 states.
PathSample sample_bm_path(const Point& x0, double T, double dt, std::uint64_t seed);

// Composite trapezoid along the discretized states; O(dt) bias, documented
// and probed by the dt/2 refinement diagnostics rather than corrected.
double integrate_along_discretized(const PathSample& path, const TestFn& f);

// Uniformly elliptic divergence-form coefficients a_{kj}(x). Two concrete
// families: a constant SPD matrix, and (base + amp exp(-|x|^2/2w^2)) * I
// whose divergence has a closed form for testing the finite-difference path.
class DiffusionCoefficients {
 public:
  enum class Kind { ConstantMatrix, RadialBump };

  static DiffusionCoefficients constant_matrix(const SymMatrix& a);
  static DiffusionCoefficients radial_bump(int dim, double base, double amp, double width,
                                           bool fd_divergence = false);

  int dim() const { return dim_; }
  Kind kind() const { return kind_; }
  SymMatrix matrix(const Point& x) const;
  // Row divergence b_k(x) = sum_j d_j a_{kj}(x), closed form or central
  // differences with step fd_step.
  Point divergence(const Point& x) const;
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }
  bool constant() const { return kind_ == Kind::ConstantMatrix; }
  const SymMatrix& constant_sqrt2a() const { return sqrt2a_; }
  double bump_at(const Point& x) const;

  double fd_step = 1e-4;

 private:
  DiffusionCoefficients() = default;
  void check_ellipticity();

  Kind kind_ = Kind::ConstantMatrix;
  int dim_ = 3;
  SymMatrix a0_;
  SymMatrix sqrt2a_;
  double base_ = 1, amp_ = 0, width_ = 1;
  bool fd_divergence_ = false;
  double lambda_min_ = 0, lambda_max_ = 0;
};

// Euler-Maruyama for the Ito form of L = div(a grad): drift = row divergence
// of a, diffusion factor sigma with sigma sigma' = 2a.
PathSample sample_diffusion_path(const DiffusionCoefficients& coeffs, const Point& x0, double T,
                                 double dt, std::uint64_t seed);

// Box-partitioned holding-time totals; the empirical random Green measure.
struct OccupationMeasure {
  std::vector<Box> partition;
  std::vector<double> masses;
  double atom_mass = 0;        // first holding time (jump chains)
  double total_mass = 0;       // total simulated time
  double unpartitioned = 0;    // time spent outside every box
  double truncation_tail = 0;  // estimate of occupation beyond the stop time
};

OccupationMeasure occupation_measure(const PathSample& path, const std::vector<Box>& partition);

// ---------------------------------------------------------------------------
// Streaming walkers: same stepping laws as the sample_* functions (identical
// draws for identical seeds) without materializing states, so estimators can
// run millions of steps per path. Box masses are accumulated when a partition
// is supplied.

struct WalkResult {
  double y = 0;             // running integral of f
  double total_time = 0;
  Point final_state;
  long steps = 0;
  Termination termination = Termination::HorizonReached;
  double first_holding = 0;  // jump chains: the atom mass
};

WalkResult walk_cpp(const JumpKernel& kernel, const Point& x0, const StopRule& stop,
                    std::uint64_t seed, const TestFn& f,
                    const std::vector<Box>* boxes = nullptr,
                    std::vector<double>* box_masses = nullptr);

// Far-field step control for discretized walkers: inside fine_radius the step
// is dt; outside it grows like growth*(r/fine_radius)^2 capped by dt_max.
// Exact for Brownian and constant-coefficient diffusions (Gaussian increments
// are exact at any step); disabled automatically for variable coefficients.
struct DiscretizedOptions {
  double dt = 1e-3;
  bool adapt_far = true;
  double fine_radius = 8.0;
  double growth = 4.0;
  double dt_max = 0.5;
};

WalkResult walk_brownian(const Point& x0, const StopRule& stop, const DiscretizedOptions& opts,
                         std::uint64_t seed, const TestFn& f,
                         const std::vector<Box>* boxes = nullptr,
                         std::vector<double>* box_masses = nullptr);

WalkResult walk_diffusion(const DiffusionCoefficients& coeffs, const Point& x0,
                          const StopRule& stop, const DiscretizedOptions& opts,
                          std::uint64_t seed, const TestFn& f,
                          const std::vector<Box>* boxes = nullptr,
                          std::vector<double>* box_masses = nullptr);

}  // namespace greenpot
