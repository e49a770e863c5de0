#include "greenpot/simulate.hpp"

#include <cmath>

#include "greenpot/errors.hpp"

namespace greenpot {

namespace {

// Shared stop bookkeeping for both path flavors. Windows are aligned to
// simulated time; the rule fires only at window rollovers, which keeps the
// decision sequence independent of step granularity details.
struct StopTracker {
  const StopRule& stop;
  double window_acc = 0;
  double window_t = 0;

  explicit StopTracker(const StopRule& s) : stop(s) {}

  // feed one segment of length dt at state x contributing |f| mass fabs_df;
  // returns true when the walk should stop after this segment.
  bool feed(double t_total, double dt, const Point& x, double fabs_df, double y_abs) {
    if (t_total >= stop.hard_cap_time) return true;
    if (!stop.adaptive) return t_total >= stop.horizon;
    if (t_total < stop.horizon) return false;
    window_acc += fabs_df;
    window_t += dt;
    if (window_t < stop.window) return false;
    bool fire = x.norm() >= stop.escape_radius &&
                window_acc <= stop.eps_tail * y_abs + 1e-18;
    window_acc = 0;
    window_t = 0;
    return fire;
  }

  Termination termination(double t_total) const {
    if (t_total >= stop.hard_cap_time) return Termination::HardCap;
    return stop.adaptive ? Termination::TailCriterionMet : Termination::HorizonReached;
  }
};

void tally_boxes(const std::vector<Box>* boxes, std::vector<double>* masses, const Point& x,
                 double dt) {
  if (!boxes) return;
  for (size_t b = 0; b < boxes->size(); ++b) {
    if ((*boxes)[b].contains(x)) {
      (*masses)[b] += dt;
      return;  // partition boxes are disjoint
    }
  }
}

}  // namespace

WalkResult walk_cpp(const JumpKernel& kernel, const Point& x0, const StopRule& stop,
                    std::uint64_t seed, const TestFn& f, const std::vector<Box>* boxes,
                    std::vector<double>* box_masses) {
  Rng rng(seed);
  WalkResult r;
  Point x = x0;
  StopTracker tracker(stop);
  for (;;) {
    double tau = rng.exponential(1.0);
    if (r.steps == 0) r.first_holding = tau;
    double fx = f ? f(x) : 0.0;
    r.y += fx * tau;
    r.total_time += tau;
    tally_boxes(boxes, box_masses, x, tau);
    ++r.steps;
    if (tracker.feed(r.total_time, tau, x, std::fabs(fx) * tau, std::fabs(r.y)) ||
        r.steps >= stop.hard_cap_steps) {
      r.final_state = x;
      r.termination = tracker.termination(r.total_time);
      return r;
    }
    x += kernel.sample_jump(rng);
  }
}

PathSample sample_cpp_path(const JumpKernel& kernel, const Point& x0, const StopRule& stop,
                           std::uint64_t seed) {
  Rng rng(seed);
  PathSample p;
  p.start = x0;
  p.kind = PathSample::JumpChain;
  p.seed = seed;
  p.horizon = stop.horizon;
  Point x = x0;
  StopTracker tracker(stop);
  double y = 0;
  long steps = 0;
  for (;;) {
    double tau = rng.exponential(1.0);
    double fx = stop.f ? stop.f(x) : 0.0;
    y += fx * tau;
    p.total_time += tau;
    p.jump_chain.emplace_back(x, tau);
    ++steps;
    if (tracker.feed(p.total_time, tau, x, std::fabs(fx) * tau, std::fabs(y)) ||
        steps >= stop.hard_cap_steps) {
      p.termination = tracker.termination(p.total_time);
      return p;
    }
    x += kernel.sample_jump(rng);
  }
}

double integrate_along_cpp(const PathSample& path, const TestFn& f) {
  if (path.kind != PathSample::JumpChain)
    fail(ErrorCode::ConfigParse, "integrate_along_cpp needs a jump chain");
  double y = 0;
  for (const auto& [state, tau] : path.jump_chain) y += f(state) * tau;
  return y;
}

PathSample sample_bm_path(const Point& x0, double T, double dt, std::uint64_t seed) {
  if (!(dt > 0) || T < dt) fail(ErrorCode::ConfigParse, "need dt > 0 and T >= dt");
  Rng rng(seed);
  PathSample p;
  p.start = x0;
  p.kind = PathSample::Discretized;
  p.dt = dt;
  p.seed = seed;
  p.horizon = T;
  const int d = x0.dim();
  const auto steps = static_cast<long>(std::floor(T / dt));
  p.states.reserve(static_cast<size_t>(steps) + 1);
  p.states.push_back(x0);
  Point x = x0;
  const double scale = std::sqrt(2.0 * dt);
  double z[kMaxDim];
  for (long i = 0; i < steps; ++i) {
    rng.normals(z, d);
    for (int a = 0; a < d; ++a) x[a] += scale * z[a];
    p.states.push_back(x);
  }
  p.total_time = static_cast<double>(steps) * dt;
  p.termination = Termination::HorizonReached;
  return p;
}

double integrate_along_discretized(const PathSample& path, const TestFn& f) {
  if (path.kind != PathSample::Discretized)
    fail(ErrorCode::ConfigParse, "integrate_along_discretized needs a discretized path");
  if (path.states.size() < 2) return 0.0;
  double y = 0.5 * (f(path.states.front()) + f(path.states.back()));
  for (size_t i = 1; i + 1 < path.states.size(); ++i) y += f(path.states[i]);
  return y * path.dt;
}

// ---------------------------------------------------------------------------
// Diffusions

DiffusionCoefficients DiffusionCoefficients::constant_matrix(const SymMatrix& a) {
  DiffusionCoefficients c;
  c.kind_ = Kind::ConstantMatrix;
  c.dim_ = a.d;
  check_dim(a.d);
  c.a0_ = a;
  c.check_ellipticity();
  SymMatrix twoa = a;
  for (int i = 0; i < a.d; ++i)
    for (int j = 0; j < a.d; ++j) twoa(i, j) *= 2.0;
  c.sqrt2a_ = sym_sqrt(twoa);
  return c;
}

DiffusionCoefficients DiffusionCoefficients::radial_bump(int dim, double base, double amp,
                                                         double width, bool fd_divergence) {
  check_dim(dim);
  DiffusionCoefficients c;
  c.kind_ = Kind::RadialBump;
  c.dim_ = dim;
  c.base_ = base;
  c.amp_ = amp;
  c.width_ = width;
  c.fd_divergence_ = fd_divergence;
  if (!(width > 0)) fail(ErrorCode::ConfigParse, "bump width must be > 0");
  c.check_ellipticity();
  return c;
}

double DiffusionCoefficients::bump_at(const Point& x) const {
  return base_ + amp_ * std::exp(-0.5 * x.norm2() / (width_ * width_));
}

SymMatrix DiffusionCoefficients::matrix(const Point& x) const {
  if (kind_ == Kind::ConstantMatrix) return a0_;
  return SymMatrix::identity(dim_, bump_at(x));
}

Point DiffusionCoefficients::divergence(const Point& x) const {
  Point b(dim_);
  if (kind_ == Kind::ConstantMatrix) return b;
  if (!fd_divergence_) {
    // d_k (base + amp e^{-|x|^2/2w^2}) = -amp x_k / w^2 e^{-|x|^2/2w^2}
    double e = amp_ * std::exp(-0.5 * x.norm2() / (width_ * width_)) / (width_ * width_);
    for (int a = 0; a < dim_; ++a) b[a] = -e * x[a];
    return b;
  }
  for (int k = 0; k < dim_; ++k) {
    double s = 0;
    for (int j = 0; j < dim_; ++j) {
      Point xp = x, xm = x;
      xp[j] += fd_step;
      xm[j] -= fd_step;
      s += (matrix(xp)(k, j) - matrix(xm)(k, j)) / (2.0 * fd_step);
    }
    b[k] = s;
  }
  return b;
}

void DiffusionCoefficients::check_ellipticity() {
  // Eigenvalue extremes over a deterministic point cloud (origin-centered
  // lattice, radius 10); constant matrices need a single evaluation.
  double lo = 1e300, hi = -1e300;
  auto probe = [&](const Point& x) {
    SymMatrix m = matrix(x);
    for (int i = 0; i < dim_; ++i)
      for (int j = i + 1; j < dim_; ++j)
        if (std::fabs(m(i, j) - m(j, i)) > 1e-12)
          fail(ErrorCode::EllipticityViolation, "coefficient matrix not symmetric");
    std::array<double, kMaxDim> ev{};
    sym_eigen(m, ev);
    lo = std::min(lo, ev[0]);
    hi = std::max(hi, ev[static_cast<size_t>(dim_ - 1)]);
  };
  if (kind_ == Kind::ConstantMatrix) {
    probe(Point(dim_));
  } else {
    const int half = 3;
    std::vector<int> idx(static_cast<size_t>(dim_), -half);
    for (;;) {
      Point x(dim_);
      for (int a = 0; a < dim_; ++a) x[a] = idx[static_cast<size_t>(a)] * (10.0 / half);
      probe(x);
      int a = dim_ - 1;
      for (; a >= 0; --a) {
        if (++idx[static_cast<size_t>(a)] <= half) break;
        idx[static_cast<size_t>(a)] = -half;
      }
      if (a < 0) break;
    }
  }
  if (!(lo > 1e-12))
    fail(ErrorCode::EllipticityViolation,
         "coefficient matrix has a nonpositive eigenvalue (min " + std::to_string(lo) + ")");
  lambda_min_ = lo;
  lambda_max_ = hi;
}

namespace {

// One Euler-Maruyama step; returns squared displacement for the sanity check.
inline double diffusion_step(const DiffusionCoefficients& c, Point& x, double dt, Rng& rng,
                             double z[kMaxDim]) {
  const int d = c.dim();
  rng.normals(z, d);
  const double sq = std::sqrt(dt);
  double disp2 = 0;
  if (c.constant()) {
    const SymMatrix& s = c.constant_sqrt2a();
    for (int a = 0; a < d; ++a) {
      double dx = 0;
      for (int b = 0; b < d; ++b) dx += s(a, b) * z[b];
      dx *= sq;
      x[a] += dx;
      disp2 += dx * dx;
    }
    return disp2;
  }
  Point drift = c.divergence(x);
  const double sig = std::sqrt(2.0 * c.bump_at(x));
  for (int a = 0; a < d; ++a) {
    double dx = drift[a] * dt + sig * sq * z[a];
    x[a] += dx;
    disp2 += dx * dx;
  }
  return disp2;
}

template <typename Step>
WalkResult walk_discretized(int d, const Point& x0, const StopRule& stop,
                            const DiscretizedOptions& opts, std::uint64_t seed, const TestFn& f,
                            const std::vector<Box>* boxes, std::vector<double>* box_masses,
                            bool allow_adapt, double step_sanity, Step step) {
  if (!(opts.dt > 0)) fail(ErrorCode::ConfigParse, "dt must be > 0");
  Rng rng(seed);
  WalkResult r;
  Point x = x0;
  StopTracker tracker(stop);
  double fprev = f ? f(x) : 0.0;
  const bool adapt = allow_adapt && opts.adapt_far;
  for (;;) {
    double dt = opts.dt;
    if (adapt) {
      double rr = x.norm();
      if (rr > opts.fine_radius) {
        double scale = opts.growth * (rr / opts.fine_radius) * (rr / opts.fine_radius);
        dt = std::min(opts.dt * scale, opts.dt_max);
      }
    }
    double disp2 = step(x, dt, rng);
    if (disp2 > step_sanity * d * dt || !std::isfinite(disp2))
      fail(ErrorCode::StepTooLarge, "state moved past the per-step sanity radius");
    double fx = f ? f(x) : 0.0;
    double inc = 0.5 * (fprev + fx) * dt;  // trapezoid
    r.y += inc;
    r.total_time += dt;
    tally_boxes(boxes, box_masses, x, dt);
    fprev = fx;
    ++r.steps;
    if (tracker.feed(r.total_time, dt, x, std::fabs(inc), std::fabs(r.y)) ||
        r.steps >= stop.hard_cap_steps) {
      r.final_state = x;
      r.termination = tracker.termination(r.total_time);
      return r;
    }
  }
}

}  // namespace

WalkResult walk_brownian(const Point& x0, const StopRule& stop, const DiscretizedOptions& opts,
                         std::uint64_t seed, const TestFn& f, const std::vector<Box>* boxes,
                         std::vector<double>* box_masses) {
  const int d = x0.dim();
  double z[kMaxDim];
  return walk_discretized(
      d, x0, stop, opts, seed, f, boxes, box_masses, /*allow_adapt=*/true,
      /*step_sanity=*/800.0,
      [&](Point& x, double dt, Rng& rng) {
        rng.normals(z, d);
        const double scale = std::sqrt(2.0 * dt);
        double disp2 = 0;
        for (int a = 0; a < d; ++a) {
          double dx = scale * z[a];
          x[a] += dx;
          disp2 += dx * dx;
        }
        return disp2;
      });
}

WalkResult walk_diffusion(const DiffusionCoefficients& coeffs, const Point& x0,
                          const StopRule& stop, const DiscretizedOptions& opts,
                          std::uint64_t seed, const TestFn& f, const std::vector<Box>* boxes,
                          std::vector<double>* box_masses) {
  double z[kMaxDim];
  // Far-field step growth is only unbiased when the increments stay exact,
  // i.e. for constant coefficients.
  return walk_discretized(
      coeffs.dim(), x0, stop, opts, seed, f, boxes, box_masses,
      /*allow_adapt=*/coeffs.constant(),
      /*step_sanity=*/800.0 * std::max(1.0, coeffs.lambda_max()),
      [&](Point& x, double dt, Rng& rng) { return diffusion_step(coeffs, x, dt, rng, z); });
}

PathSample sample_diffusion_path(const DiffusionCoefficients& coeffs, const Point& x0, double T,
                                 double dt, std::uint64_t seed) {
  if (!(dt > 0) || T < dt) fail(ErrorCode::ConfigParse, "need dt > 0 and T >= dt");
  if (x0.dim() != coeffs.dim()) fail(ErrorCode::ConfigParse, "start/coefficients dim mismatch");
  Rng rng(seed);
  PathSample p;
  p.start = x0;
  p.kind = PathSample::Discretized;
  p.dt = dt;
  p.seed = seed;
  p.horizon = T;
  const auto steps = static_cast<long>(std::floor(T / dt));
  p.states.reserve(static_cast<size_t>(steps) + 1);
  p.states.push_back(x0);
  Point x = x0;
  double z[kMaxDim];
  for (long i = 0; i < steps; ++i) {
    double disp2 = diffusion_step(coeffs, x, dt, rng, z);
    if (disp2 > 800.0 * std::max(1.0, coeffs.lambda_max()) * coeffs.dim() * dt)
      fail(ErrorCode::StepTooLarge, "state moved past the per-step sanity radius");
    p.states.push_back(x);
  }
  p.total_time = static_cast<double>(steps) * dt;
  p.termination = Termination::HorizonReached;
  return p;
}

OccupationMeasure occupation_measure(const PathSample& path, const std::vector<Box>& partition) {
  for (size_t i = 0; i < partition.size(); ++i)
    for (size_t j = i + 1; j < partition.size(); ++j)
      if (partition[i].overlaps(partition[j]))
        fail(ErrorCode::OverlappingBoxes, "partition boxes must be disjoint");

  OccupationMeasure m;
  m.partition = partition;
  m.masses.assign(partition.size(), 0.0);

  auto deposit = [&](const Point& x, double w) {
    m.total_mass += w;
    for (size_t b = 0; b < partition.size(); ++b) {
      if (partition[b].contains(x)) {
        m.masses[b] += w;
        return;
      }
    }
    m.unpartitioned += w;
  };

  if (path.kind == PathSample::JumpChain) {
    bool first = true;
    for (const auto& [state, tau] : path.jump_chain) {
      if (first) {
        m.atom_mass = tau;
        first = false;
      }
      deposit(state, tau);
    }
  } else {
    // dt-weighted state counts; the final state carries no dwell time.
    for (size_t i = 0; i + 1 < path.states.size(); ++i) deposit(path.states[i], path.dt);
  }
  return m;
}

}  // namespace greenpot
