#include "greenpot/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "greenpot/errors.hpp"
#include "greenpot/fft.hpp"

namespace greenpot {

namespace {

constexpr double kPi = 3.14159265358979323846;

double surface_area(int d) {  // |S^{d-1}|
  return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

// Normalization constant for C exp(-delta r): 1/C = S_{d-1} (d-1)! / delta^d.
double exp_tail_constant(int d, double delta) {
  return std::pow(delta, d) * std::tgamma(0.5 * d) /
         (2.0 * std::pow(kPi, 0.5 * d) * std::tgamma(static_cast<double>(d)));
}

}  // namespace

JumpKernel JumpKernel::make(const KernelSpec& spec) {
  check_dim(spec.dim);
  JumpKernel k;
  k.spec_ = spec;

  switch (spec.family) {
    case KernelFamily::Gaussian: {
      if (!(spec.b > 0)) fail(ErrorCode::NotNormalizable, "gaussian scale b must be > 0");
      k.iso_ = true;
      k.sigma_ = SymMatrix::identity(spec.dim, 1.0 / spec.b);
      k.sup_density_ = std::pow(spec.b / (2.0 * kPi), 0.5 * spec.dim);
      k.beta_ = 0.0;  // log a_hat is exactly quadratic
      break;
    }
    case KernelFamily::ExpTail: {
      if (!(spec.delta > 0)) fail(ErrorCode::NotNormalizable, "exp_tail rate delta must be > 0");
      k.iso_ = true;
      const double d = spec.dim;
      k.sigma_ = SymMatrix::identity(spec.dim, (d + 1.0) / (spec.delta * spec.delta));
      k.sup_density_ = exp_tail_constant(spec.dim, spec.delta);
      // log a_hat = -(d+1)/2 log(1 + k^2/delta^2)
      k.beta_ = (d + 1.0) / (4.0 * std::pow(spec.delta, 4));
      break;
    }
    case KernelFamily::Tabulated: {
      k.validate_tabulated();
      break;
    }
  }

  k.compute_moments();
  if (spec.family == KernelFamily::Tabulated) k.build_alias_table();
  k.compute_symbol_diagnostics();
  return k;
}

void JumpKernel::validate_tabulated() {
  spec_.grid.validate();
  if (spec_.grid.dim != spec_.dim)
    fail(ErrorCode::ConfigParse, "tabulated grid dimension mismatch");
  if (static_cast<std::int64_t>(spec_.values.size()) != spec_.grid.size())
    fail(ErrorCode::ConfigParse, "tabulated value count does not match grid");

  double maxval = 0;
  for (double v : spec_.values) {
    if (!(v >= 0))
      fail(ErrorCode::NotNormalizable, "tabulated kernel has negative or non-finite entries");
    maxval = std::max(maxval, v);
  }
  double mass = std::accumulate(spec_.values.begin(), spec_.values.end(), 0.0) *
                spec_.grid.cell_volume();
  if (!(mass > 1e-300)) fail(ErrorCode::NotNormalizable, "tabulated kernel has zero mass");

  // Symmetry a(-x) = a(x). Index i mirrors to n-i; the i = 0 hyperplanes
  // (x = -L) have no lattice mirror and are skipped -- any sane table is
  // negligible there, and the residue shows up in the imag diagnostics.
  const int n = spec_.grid.points_per_axis;
  const double tol = 1e-9 * maxval;
  Field tmp(spec_.grid);
  tmp.values = spec_.values;
  bool asym = false;
  for_each_index(spec_.grid, [&](const int* idx, std::int64_t flat) {
    if (asym) return;
    int mirror[kMaxDim];
    for (int a = 0; a < spec_.dim; ++a) {
      if (idx[a] == 0) return;
      mirror[a] = n - idx[a];
    }
    std::int64_t mflat = tmp.flat_index(mirror);
    if (std::fabs(spec_.values[static_cast<size_t>(flat)] -
                  spec_.values[static_cast<size_t>(mflat)]) > tol)
      asym = true;
  });
  if (asym) fail(ErrorCode::AsymmetricKernel, "tabulated kernel is not symmetric under x -> -x");

  normalizer_ = 1.0 / mass;
  diag_.normalization_adjustment = std::fabs(mass - 1.0);
  sup_density_ = maxval * normalizer_;
  iso_ = false;
  beta_ = 0.0;
}

void JumpKernel::compute_moments() {
  const int d = spec_.dim;
  if (spec_.family == KernelFamily::Tabulated) {
    sigma_ = SymMatrix(d);
    const GridSpec& g = spec_.grid;
    const double w = g.cell_volume() * normalizer_;
    const double half = 0.5 * g.half_extent;
    // Shell sums of the trace integrand diagnose a non-converging tail:
    // for an integrable second moment the dyadic shell contributions must
    // decay outward.
    double tr_outer = 0, tr_inner_shell = 0;
    SymMatrix acc(d);
    for_each_index(g, [&](const int* idx, std::int64_t flat) {
      double v = spec_.values[static_cast<size_t>(flat)];
      if (v == 0) return;
      Point x(d);
      double linf = 0;
      for (int a = 0; a < d; ++a) {
        x[a] = g.coord(idx[a]);
        linf = std::max(linf, std::fabs(x[a]));
      }
      double r2 = x.norm2();
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) acc(i, j) += x[i] * x[j] * v;
      if (linf > half) tr_outer += r2 * v;
      else if (linf > 0.5 * half) tr_inner_shell += r2 * v;
    });
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) sigma_(i, j) = acc(i, j) * w;
    double tr = 0;
    for (int i = 0; i < d; ++i) tr += sigma_(i, i);
    tr_outer *= w;
    tr_inner_shell *= w;
    if (tr_outer > 1e-6 * tr && tr_outer >= tr_inner_shell) {
      fail(ErrorCode::MomentDiverges,
           "second-moment shell sums do not decay toward the table boundary");
    }
  }

  std::array<double, kMaxDim> ev{};
  sym_eigen(sigma_, ev);
  sigma_min_ = ev[0];
  sigma_max_ = ev[static_cast<size_t>(d - 1)];
  sigma_det_ = 1;
  for (int i = 0; i < d; ++i) sigma_det_ *= ev[static_cast<size_t>(i)];
  sigma_inv_sqrt_ = sym_inv_sqrt(sigma_);
}

double JumpKernel::density(const Point& x) const {
  switch (spec_.family) {
    case KernelFamily::Gaussian:
      return std::pow(spec_.b / (2.0 * kPi), 0.5 * spec_.dim) *
             std::exp(-0.5 * spec_.b * x.norm2());
    case KernelFamily::ExpTail:
      return exp_tail_constant(spec_.dim, spec_.delta) * std::exp(-spec_.delta * x.norm());
    case KernelFamily::Tabulated: {
      Field tmp;
      tmp.grid = spec_.grid;
      // interpolate() needs the vector; avoid copying by aliasing via const_cast-free path:
      // build a shallow Field once would be nicer, but tables are small and this is cold.
      tmp.values = spec_.values;
      return tmp.interpolate(x) * normalizer_;
    }
  }
  return 0;
}

double JumpKernel::fourier_symbol_radial(double kabs) const {
  switch (spec_.family) {
    case KernelFamily::Gaussian:
      return std::exp(-0.5 * kabs * kabs / spec_.b);
    case KernelFamily::ExpTail: {
      double q = kabs / spec_.delta;
      return std::pow(1.0 + q * q, -0.5 * (spec_.dim + 1));
    }
    case KernelFamily::Tabulated:
      fail(ErrorCode::Internal, "radial symbol undefined for tabulated kernels");
  }
  return 0;
}

double JumpKernel::fourier_symbol(const Point& k) const {
  if (spec_.family != KernelFamily::Tabulated) return fourier_symbol_radial(k.norm());
  // Lattice trapezoid of the transform; exact enough when the table decays
  // at its boundary (checked at validation).
  const GridSpec& g = spec_.grid;
  double s = 0;
  for_each_index(g, [&](const int* idx, std::int64_t flat) {
    double v = spec_.values[static_cast<size_t>(flat)];
    if (v == 0) return;
    double phase = 0;
    for (int a = 0; a < spec_.dim; ++a) phase += k[a] * g.coord(idx[a]);
    s += v * std::cos(phase);
  });
  return s * g.cell_volume() * normalizer_;
}

SymMatrix second_moment(const JumpKernel& k) { return k.second_moment(); }

void JumpKernel::build_alias_table() {
  // Walker/Vose alias method over cells.
  const std::int64_t n = spec_.grid.size();
  double total = std::accumulate(spec_.values.begin(), spec_.values.end(), 0.0);
  std::vector<double> p(static_cast<size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    p[static_cast<size_t>(i)] = spec_.values[static_cast<size_t>(i)] / total * n;
  alias_prob_.assign(static_cast<size_t>(n), 1.0);
  alias_idx_.assign(static_cast<size_t>(n), 0);
  std::vector<std::int64_t> small, large;
  for (std::int64_t i = 0; i < n; ++i) (p[static_cast<size_t>(i)] < 1.0 ? small : large).push_back(i);
  while (!small.empty() && !large.empty()) {
    std::int64_t s = small.back(); small.pop_back();
    std::int64_t l = large.back(); large.pop_back();
    alias_prob_[static_cast<size_t>(s)] = p[static_cast<size_t>(s)];
    alias_idx_[static_cast<size_t>(s)] = l;
    p[static_cast<size_t>(l)] = p[static_cast<size_t>(l)] + p[static_cast<size_t>(s)] - 1.0;
    (p[static_cast<size_t>(l)] < 1.0 ? small : large).push_back(l);
  }
  for (std::int64_t i : small) alias_prob_[static_cast<size_t>(i)] = 1.0;
  for (std::int64_t i : large) alias_prob_[static_cast<size_t>(i)] = 1.0;
}

Point JumpKernel::sample_jump(Rng& rng) const {
  const int d = spec_.dim;
  Point x(d);
  switch (spec_.family) {
    case KernelFamily::Gaussian: {
      double z[kMaxDim];
      rng.normals(z, d);
      const double s = 1.0 / std::sqrt(spec_.b);
      for (int a = 0; a < d; ++a) x[a] = s * z[a];
      return x;
    }
    case KernelFamily::ExpTail: {
      // Radius ~ Gamma(d, delta) as a sum of d exponentials, direction
      // uniform via a normalized Gaussian vector.
      double r = 0;
      for (int a = 0; a < d; ++a) r += rng.exponential(spec_.delta);
      double z[kMaxDim];
      rng.normals(z, d);
      double nrm = 0;
      for (int a = 0; a < d; ++a) nrm += z[a] * z[a];
      nrm = std::sqrt(nrm);
      if (nrm < 1e-300) { x[0] = r; return x; }  // unreachable in practice
      for (int a = 0; a < d; ++a) x[a] = r * z[a] / nrm;
      return x;
    }
    case KernelFamily::Tabulated: {
      // One uniform picks the cell through the alias table, d more jitter
      // the draw inside the cell; the sampled law is the cell histogram,
      // an O(h) approximation of the table (documented).
      const std::int64_t n = spec_.grid.size();
      double u = rng.uniform_co() * static_cast<double>(n);
      auto i = static_cast<std::int64_t>(u);
      if (i >= n) i = n - 1;
      double frac = u - static_cast<double>(i);
      std::int64_t cell = frac < alias_prob_[static_cast<size_t>(i)] ? i : alias_idx_[static_cast<size_t>(i)];
      const int na = spec_.grid.points_per_axis;
      const double h = spec_.grid.spacing();
      for (int a = d - 1; a >= 0; --a) {
        int ia = static_cast<int>(cell % na);
        cell /= na;
        x[a] = spec_.grid.coord(ia) + (rng.uniform_co() - 0.5) * h;
      }
      return x;
    }
  }
  return x;
}

Field JumpKernel::sample_on_grid(const GridSpec& g) const {
  g.validate();
  if (g.dim != spec_.dim) fail(ErrorCode::ConfigParse, "grid dimension != kernel dimension");
  Field f(g);
  if (spec_.family == KernelFamily::Tabulated && g == spec_.grid) {
    for (size_t i = 0; i < f.values.size(); ++i) f.values[i] = spec_.values[i] * normalizer_;
  } else {
    for_each_index(g, [&](const int* idx, std::int64_t flat) {
      Point x(g.dim);
      for (int a = 0; a < g.dim; ++a) x[a] = g.coord(idx[a]);
      f.at(flat) = density(x);
    });
  }
  double m = f.mass();
  if (!(m > 1e-300)) fail(ErrorCode::GridTooSmall, "kernel mass vanishes on the requested grid");
  for (double& v : f.values) v /= m;
  return f;
}

void JumpKernel::compute_symbol_diagnostics() {
  const int d = spec_.dim;
  if (spec_.family == KernelFamily::Gaussian) {
    diag_.symbol_l1 = std::pow(2.0 * kPi * spec_.b, 0.5 * d);
    diag_.symbol_l1_tail_fraction = 0;
    return;
  }
  if (spec_.family == KernelFamily::ExpTail) {
    // Radial Simpson of |a_hat| on [0, 200 delta] plus the analytic
    // S delta^{d+1} r^{-2} remainder beyond it.
    const double delta = spec_.delta;
    double kmax = delta * 200.0;
    auto integrand = [&](double r) {
      return surface_area(d) * std::pow(r, d - 1) * fourier_symbol_radial(r);
    };
    const int nn = 40000;
    double hstep = kmax / nn, s = 0;
    for (int i = 0; i <= nn; ++i) {
      double w = (i == 0 || i == nn) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s += w * integrand(i * hstep);
    }
    s *= hstep / 3.0;
    double tail = surface_area(d) * std::pow(delta, d + 1) / kmax;
    diag_.symbol_l1 = s + tail;
    diag_.symbol_l1_tail_fraction = tail / diag_.symbol_l1;
    return;
  }
  // Tabulated: probe |A| on the dual lattice of the table.
  CenteredFft fft(spec_.grid);
  auto buf = fft.to_complex([&] {
    Field f;
    f.grid = spec_.grid;
    f.values = spec_.values;
    for (double& v : f.values) v *= normalizer_;
    return f;
  }());
  fft.forward(buf);
  const double cell = std::pow(fft.dk(), d);
  const int n = spec_.grid.points_per_axis;
  double total = 0, boundary = 0;
  for_each_index(spec_.grid, [&](const int* idx, std::int64_t flat) {
    double m = std::abs(buf[static_cast<size_t>(flat)]) * cell;
    total += m;
    for (int a = 0; a < d; ++a)
      if (idx[a] == 0 || idx[a] == n - 1) { boundary += m; break; }
  });
  diag_.symbol_l1 = total;
  diag_.symbol_l1_tail_fraction = total > 0 ? boundary / total : 0;
}

Field kfold_density(const JumpKernel& kernel, int n, const GridSpec& grid,
                    double escape_tol, double* escaped_mass) {
  if (n < 1) fail(ErrorCode::ConfigParse, "kfold order must be >= 1");
  grid.validate();

  // Gaussian-surrogate escape estimate: per-axis mass of N(0, n*Sigma_aa)
  // beyond the box, summed over axes.
  double escape = 0;
  for (int a = 0; a < grid.dim; ++a) {
    double sd = std::sqrt(static_cast<double>(n) * kernel.second_moment()(a, a));
    escape += std::erfc(grid.half_extent / (sd * M_SQRT2));
  }
  if (escaped_mass) *escaped_mass = escape;
  if (escape > escape_tol)
    fail(ErrorCode::GridTooSmall, "estimated escaped mass " + std::to_string(escape) +
                                      " exceeds tolerance for n = " + std::to_string(n));

  CenteredFft fft(grid);
  auto buf = fft.to_complex(kernel.sample_on_grid(grid));
  fft.forward(buf);
  for (auto& c : buf) {
    // integer power by squaring; the DFT symbol can be slightly complex for
    // tables whose edge rows are nonzero, keep it complex throughout.
    std::complex<double> base = c, acc{1.0, 0.0};
    int e = n;
    while (e > 0) {
      if (e & 1) acc *= base;
      base *= base;
      e >>= 1;
    }
    c = acc;
  }
  fft.backward(buf);
  return fft.to_field(buf);
}

}  // namespace greenpot
