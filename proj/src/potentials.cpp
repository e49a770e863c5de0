#include "greenpot/potentials.hpp"

#include <algorithm>
#include <cmath>

#include "greenpot/errors.hpp"
#include "greenpot/fft.hpp"
#include "greenpot/parallel.hpp"

namespace greenpot {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

// ---------------------------------------------------------------------------
// TestFunction

TestFunction TestFunction::exp_abs(int dim) {
  check_dim(dim);
  TestFunction f;
  f.family_ = Family::ExpAbs;
  f.dim_ = dim;
  return f;
}

TestFunction TestFunction::gaussian_bump(int dim, double width, const Point& center) {
  check_dim(dim);
  if (!(width > 0)) fail(ErrorCode::ConfigParse, "bump width must be > 0");
  TestFunction f;
  f.family_ = Family::GaussianBump;
  f.dim_ = dim;
  f.width = width;
  f.center = center.dim() == dim ? center : Point(dim);
  return f;
}

TestFunction TestFunction::box_indicator(const Box& b) {
  TestFunction f;
  f.family_ = Family::BoxIndicator;
  f.dim_ = b.lo.dim();
  f.box = b;
  return f;
}

TestFunction TestFunction::tabulated(Field table) {
  TestFunction f;
  f.family_ = Family::Tabulated;
  f.dim_ = table.grid.dim;
  f.table = std::move(table);
  return f;
}

TestFunction TestFunction::custom(int dim, TestFn fn, double sup, double l1) {
  check_dim(dim);
  TestFunction f;
  f.family_ = Family::Custom;
  f.dim_ = dim;
  f.fn_ = std::move(fn);
  f.sup_ = sup;
  f.l1_ = l1;
  return f;
}

double TestFunction::operator()(const Point& y) const {
  switch (family_) {
    case Family::ExpAbs: {
      double s = 0;
      for (int a = 0; a < dim_; ++a) s += std::fabs(y[a]);
      return std::exp(-s);
    }
    case Family::GaussianBump: {
      Point d = y - center;
      return std::exp(-0.5 * d.norm2() / (width * width));
    }
    case Family::BoxIndicator:
      return box.contains(y) ? 1.0 : 0.0;
    case Family::Tabulated:
      return table.interpolate(y);
    case Family::Custom:
      return fn_ ? fn_(y) : 0.0;
  }
  return 0;
}

TestFn TestFunction::as_fn() const {
  TestFunction copy = *this;
  return [copy](const Point& y) { return copy(y); };
}

bool TestFunction::has_closed_norms() const {
  switch (family_) {
    case Family::ExpAbs:
    case Family::GaussianBump:
    case Family::BoxIndicator:
    case Family::Tabulated:
      return true;
    case Family::Custom:
      return sup_ >= 0 && l1_ >= 0;
  }
  return false;
}

double TestFunction::sup_norm() const {
  switch (family_) {
    case Family::ExpAbs:
    case Family::GaussianBump:
      return 1.0;
    case Family::BoxIndicator:
      return 1.0;
    case Family::Tabulated: {
      double m = 0;
      for (double v : table.values) m = std::max(m, std::fabs(v));
      return m;
    }
    case Family::Custom:
      if (sup_ >= 0) return sup_;
      fail(ErrorCode::NotInCL, "custom test function without a supplied sup norm");
  }
  return 0;
}

double TestFunction::l1_norm() const {
  switch (family_) {
    case Family::ExpAbs:
      return std::pow(2.0, dim_);  // separable: (int e^{-|s|} ds)^d
    case Family::GaussianBump:
      return std::pow(2.0 * kPi * width * width, 0.5 * dim_);
    case Family::BoxIndicator:
      return box.volume();
    case Family::Tabulated: {
      double s = 0;
      for (double v : table.values) s += std::fabs(v);
      return s * table.grid.cell_volume();
    }
    case Family::Custom:
      if (l1_ >= 0) return l1_;
      return cl_norm(*this).l1;
  }
  return 0;
}

double TestFunction::tail_mass(double R) const {
  if (R <= 0) return l1_norm();
  switch (family_) {
    case Family::ExpAbs: {
      // mass outside the L-inf ball: 2^d - (2(1 - e^{-R}))^d
      double inside = std::pow(2.0 * (1.0 - std::exp(-R)), dim_);
      return std::max(0.0, std::pow(2.0, dim_) - inside);
    }
    case Family::GaussianBump: {
      double shift = center.norm();
      double z = std::max(0.0, R - shift) / width;
      double per_axis = 1.0 - std::erf(z / std::sqrt(2.0));
      double total = std::pow(2.0 * kPi * width * width, 0.5 * dim_);
      double inside = total * std::pow(std::erf(z / std::sqrt(2.0)), dim_);
      (void)per_axis;
      return std::max(0.0, total - inside);
    }
    case Family::BoxIndicator: {
      for (int a = 0; a < dim_; ++a)
        if (box.lo[a] < -R || box.hi[a] > R) return box.volume();
      return 0.0;
    }
    case Family::Tabulated: {
      if (table.grid.half_extent <= R) return 0.0;
      double s = 0;
      for_each_index(table.grid, [&](const int*, std::int64_t flat) {
        Point x = table.point_at(flat);
        for (int a = 0; a < dim_; ++a)
          if (std::fabs(x[a]) > R) {
            s += std::fabs(table.at(flat));
            return;
          }
      });
      return s * table.grid.cell_volume();
    }
    case Family::Custom:
      return l1_norm();  // no structure to exploit
  }
  return 0;
}

ClNorms cl_norm(const TestFunction& f) {
  ClNorms n;
  if (f.has_closed_norms()) {
    n.sup = f.sup_norm();
    n.l1 = f.l1_norm();
    n.cl = n.sup + n.l1;
    return n;
  }
  // Extent-doubling quadrature over L-inf shells, each sampled on its own
  // midpoint lattice. Convergence requires the shell masses to decay.
  const int d = f.dim();
  const int npts = 48;
  double sup = 0, l1 = 0;
  double prev_shell = -1;
  bool converged = false;
  double L = 2.0;
  for (int oct = 0; oct < 24; ++oct, L *= 2.0) {
    double inner = oct == 0 ? 0.0 : L / 2.0;
    double h = 2.0 * L / npts;
    double shell = 0;
    std::vector<int> idx(static_cast<size_t>(d), 0);
    std::int64_t total = 1;
    for (int a = 0; a < d; ++a) total *= npts;
    for (std::int64_t fl = 0; fl < total; ++fl) {
      Point x(d);
      double linf = 0;
      for (int a = 0; a < d; ++a) {
        x[a] = -L + (idx[static_cast<size_t>(a)] + 0.5) * h;
        linf = std::max(linf, std::fabs(x[a]));
      }
      if (linf >= inner) {
        double v = std::fabs(f(x));
        shell += v;
        sup = std::max(sup, v);
      }
      for (int a = d - 1; a >= 0; --a) {
        if (++idx[static_cast<size_t>(a)] < npts) break;
        idx[static_cast<size_t>(a)] = 0;
      }
    }
    shell *= std::pow(h, d);
    l1 += shell;
    if (oct > 2 && shell < 1e-9 * std::max(l1, 1e-30)) {
      converged = true;
      break;
    }
    if (oct > 4 && prev_shell > 0 && shell >= prev_shell) {
      fail(ErrorCode::NotInCL, "L1 shell masses do not decay under extent doubling");
    }
    prev_shell = shell;
  }
  if (!converged) fail(ErrorCode::NotInCL, "L1 quadrature did not converge under extent doubling");
  n.sup = std::max(sup, std::fabs(f(Point(f.dim()))));
  n.l1 = l1;
  n.cl = n.sup + n.l1;
  return n;
}

// ---------------------------------------------------------------------------
// Exact potential

double potential_exact(const TestFunction& f, const Point& x, const GreenField& green,
                       double* escape_estimate) {
  const Field& G = green.field;
  const GridSpec& g = G.grid;
  if (g.dim != f.dim()) fail(ErrorCode::ConfigParse, "test function/grid dimension mismatch");

  double xinf = 0;
  for (int a = 0; a < g.dim; ++a) xinf = std::max(xinf, std::fabs(x[a]));
  double margin = g.half_extent - xinf;
  double tail = f.tail_mass(margin);
  double l1 = f.l1_norm();
  if (l1 > 0 && tail > 0.2 * l1)
    fail(ErrorCode::SupportEscapesGrid,
         "more than 20% of |f| mass lies outside the shifted Green grid");

  double acc = 0;
  for_each_index(g, [&](const int*, std::int64_t flat) {
    double gv = G.at(flat);
    if (gv == 0) return;
    acc += gv * f(x - G.point_at(flat));
  });
  acc *= g.cell_volume();

  if (escape_estimate) {
    // boundary level of G times the escaped |f| mass
    double gb = 0;
    const int n = g.points_per_axis;
    for_each_index(g, [&](const int* idx, std::int64_t flat) {
      for (int a = 0; a < g.dim; ++a)
        if (idx[a] == 0 || idx[a] == n - 1) {
          gb = std::max(gb, std::fabs(G.at(flat)));
          return;
        }
    });
    *escape_estimate = tail * gb;
  }
  return f(x) + acc;
}

// ---------------------------------------------------------------------------
// Monte Carlo potential

namespace {

// Far-field Green level used for the stopped-tail bound, by process.
double far_green_level(const ProcessConfig& proc, const Point& x) {
  const int d = x.dim();
  double r = x.norm();
  if (r < 1e-9) return 1e300;
  switch (proc.kind) {
    case ProcessConfig::Kind::Cpp: {
      const JumpKernel& k = *proc.kernel;
      double rho = k.sigma_inv_sqrt().apply(x).norm();
      return 2.0 * brownian_green_constant(d) / std::sqrt(k.sigma_det()) *
             std::pow(rho, 2.0 - d);
    }
    case ProcessConfig::Kind::Brownian:
      return brownian_green_constant(d) * std::pow(r, 2.0 - d);
    case ProcessConfig::Kind::Diffusion: {
      const DiffusionCoefficients& c = *proc.coeffs;
      if (c.constant()) {
        SymMatrix A = c.matrix(Point(d));
        double rho = sym_inv_sqrt(A).apply(x).norm();
        return brownian_green_constant(d) / std::sqrt(sym_det(A)) * std::pow(rho, 2.0 - d);
      }
      // Aronson-type level through the ellipticity lower bound, with a
      // documented safety factor; an estimate, not a theorem.
      return 3.0 * brownian_green_constant(d) / c.lambda_min() * std::pow(r, 2.0 - d);
    }
  }
  return 0;
}

}  // namespace

PotentialEstimate potential_mc(const TestFunction& f, const Point& x, const ProcessConfig& proc,
                               long n_paths, const StopRule& stop, std::uint64_t seed,
                               int threads, std::vector<double>* per_path,
                               std::vector<double>* per_path_tail) {
  if (n_paths < 2) fail(ErrorCode::ConfigParse, "need at least 2 paths");
  if (proc.kind == ProcessConfig::Kind::Cpp && !proc.kernel)
    fail(ErrorCode::ConfigParse, "cpp process needs a kernel");
  if (proc.kind == ProcessConfig::Kind::Diffusion && !proc.coeffs)
    fail(ErrorCode::ConfigParse, "diffusion process needs coefficients");

  TestFn fn = f.as_fn();
  StopRule stop_with_f = stop;
  stop_with_f.f = fn;
  const double l1 = f.l1_norm();

  std::vector<double> ys(static_cast<size_t>(n_paths));
  std::vector<double> tails(static_cast<size_t>(n_paths));
  std::vector<double> times(static_cast<size_t>(n_paths));

  parallel_for(n_paths, threads, [&](std::int64_t i) {
    std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(i));
    WalkResult w;
    switch (proc.kind) {
      case ProcessConfig::Kind::Cpp:
        w = walk_cpp(*proc.kernel, x, stop_with_f, s, fn);
        break;
      case ProcessConfig::Kind::Brownian:
        w = walk_brownian(x, stop_with_f, proc.walk, s, fn);
        break;
      case ProcessConfig::Kind::Diffusion:
        w = walk_diffusion(*proc.coeffs, x, stop_with_f, proc.walk, s, fn);
        break;
    }
    ys[static_cast<size_t>(i)] = w.y;
    times[static_cast<size_t>(i)] = w.total_time;
    double lvl = far_green_level(proc, w.final_state);
    tails[static_cast<size_t>(i)] = fn(w.final_state) + l1 * std::min(lvl, 1e300);
  });

  // Ordered Welford pass; identical for any thread count.
  PotentialEstimate est;
  est.n_paths = n_paths;
  est.seed = seed;
  double mean = 0, m2 = 0, tmean = 0, tailmean = 0;
  for (long i = 0; i < n_paths; ++i) {
    double y = ys[static_cast<size_t>(i)];
    double delta = y - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (y - mean);
    tmean += times[static_cast<size_t>(i)];
    tailmean += tails[static_cast<size_t>(i)];
  }
  est.mean = mean;
  est.sample_variance = m2 / static_cast<double>(n_paths - 1);
  est.standard_error = std::sqrt(est.sample_variance / static_cast<double>(n_paths));
  est.horizon = tmean / static_cast<double>(n_paths);
  est.tail_estimate = tailmean / static_cast<double>(n_paths);
  if (per_path) *per_path = std::move(ys);
  if (per_path_tail) *per_path_tail = std::move(tails);
  return est;
}

// ---------------------------------------------------------------------------
// Variance identities

namespace {

struct VarPieces {
  double f0 = 0;    // f(0)
  double ig = 0;    // int f G
  double if2g = 0;  // int f^2 G
  double d2 = 0;    // int int f(y) f(y+z) G(y) G(z)
};

VarPieces variance_pieces(const TestFunction& f, const GreenField& green) {
  const Field& G = green.field;
  const GridSpec& g = G.grid;
  if (g.dim != f.dim()) fail(ErrorCode::ConfigParse, "test function/grid dimension mismatch");
  if (f.tail_mass(g.half_extent) > 0.2 * std::max(f.l1_norm(), 1e-300))
    fail(ErrorCode::SupportEscapesGrid, "test function mass escapes the Green grid");

  VarPieces p;
  p.f0 = f(Point(g.dim));

  Field fs(g);
  for_each_index(g, [&](const int*, std::int64_t flat) { fs.at(flat) = f(fs.point_at(flat)); });

  const double w = g.cell_volume();
  for (size_t i = 0; i < fs.values.size(); ++i) {
    p.ig += fs.values[i] * G.values[i];
    p.if2g += fs.values[i] * fs.values[i] * G.values[i];
  }
  p.ig *= w;
  p.if2g *= w;

  // C(y) = int f(y+z) G(z) dz = (f * G)(y) for even G, by zero-padded FFT.
  GridSpec gp = g;
  gp.half_extent *= 2;
  gp.points_per_axis *= 2;
  CenteredFft fft(gp);
  auto embed = [&](const Field& src) {
    Field big(gp);
    const int off = (gp.points_per_axis - g.points_per_axis) / 2;
    for_each_index(g, [&](const int* idx, std::int64_t flat) {
      int bidx[kMaxDim];
      for (int a = 0; a < g.dim; ++a) bidx[a] = idx[a] + off;
      big.at(big.flat_index(bidx)) = src.at(flat);
    });
    return fft.to_complex(big);
  };
  auto bf = embed(fs);
  auto bg = embed(G);
  fft.forward(bf);
  fft.forward(bg);
  for (size_t i = 0; i < bf.size(); ++i) bf[i] *= bg[i];
  fft.backward(bf);
  Field conv = fft.to_field(bf);

  const int off = (gp.points_per_axis - g.points_per_axis) / 2;
  double d2 = 0;
  for_each_index(g, [&](const int* idx, std::int64_t flat) {
    int bidx[kMaxDim];
    for (int a = 0; a < g.dim; ++a) bidx[a] = idx[a] + off;
    d2 += fs.at(flat) * G.at(flat) * conv.at(conv.flat_index(bidx));
  });
  p.d2 = d2 * w;
  return p;
}

}  // namespace

double variance_exact(const TestFunction& f, const GreenField& green) {
  VarPieces p = variance_pieces(f, green);
  // 2 [f0^2 + f0 IG + If2G + D2] - (f0 + IG)^2, the four cross terms of
  // (delta + G)x(delta + G) kept explicitly.
  double first = 2.0 * (p.f0 * p.f0 + p.f0 * p.ig + p.if2g + p.d2);
  double second = (p.f0 + p.ig) * (p.f0 + p.ig);
  return first - second;
}

double variance_paper_expansion(const TestFunction& f, const GreenField& green) {
  VarPieces p = variance_pieces(f, green);
  return p.f0 * p.f0 + 2.0 * p.d2 - p.ig * p.ig;
}

std::pair<double, bool> positivity_check(const JumpKernel& kernel, const GridSpec& grid,
                                         double series_tol, const GreenQuad& quad) {
  // Coordinate-wise evenness of the kernel.
  if (kernel.family() == KernelFamily::Tabulated) {
    const GridSpec& tg = kernel.spec().grid;
    const int n = tg.points_per_axis;
    Field probe;
    probe.grid = tg;
    for (int axis = 0; axis < tg.dim; ++axis) {
      bool bad = false;
      for_each_index(tg, [&](const int* idx, std::int64_t flat) {
        if (bad) return;
        int flip[kMaxDim];
        for (int a = 0; a < tg.dim; ++a) {
          if (idx[a] == 0) return;
          flip[a] = a == axis ? n - idx[a] : idx[a];
        }
        double va = kernel.spec().values[static_cast<size_t>(flat)];
        double vb = kernel.spec().values[static_cast<size_t>(probe.flat_index(flip))];
        if (std::fabs(va - vb) > 1e-9 * kernel.sup_density()) bad = true;
      });
      if (bad)
        fail(ErrorCode::SymmetryViolation,
             "kernel is not even in coordinate " + std::to_string(axis));
    }
  }

  GreenField g0 = green_series(kernel, grid, series_tol, quad);

  // G inherits the evenness in each coordinate.
  const int n = grid.points_per_axis;
  for (int axis = 0; axis < grid.dim; ++axis) {
    double dev = 0;
    for_each_index(grid, [&](const int* idx, std::int64_t flat) {
      int flip[kMaxDim];
      for (int a = 0; a < grid.dim; ++a) {
        if (idx[a] == 0) return;
        flip[a] = a == axis ? n - idx[a] : idx[a];
      }
      dev = std::max(dev, std::fabs(g0.field.at(flat) -
                                    g0.field.at(g0.field.flat_index(flip))));
    });
    if (dev > 1e-8)
      fail(ErrorCode::SymmetryViolation,
           "Green field not even in coordinate " + std::to_string(axis));
  }

  double v = variance_exact(TestFunction::exp_abs(grid.dim), g0);
  return {v, v > 0};
}

}  // namespace greenpot
