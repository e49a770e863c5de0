#include "greenpot/green.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <vector>

#include "greenpot/errors.hpp"
#include "greenpot/fft.hpp"
#include "greenpot/neumann_tail.hpp"
#include "greenpot/parallel.hpp"
#include "greenpot/special.hpp"

namespace greenpot {

namespace {

constexpr double kPi = 3.14159265358979323846;

GridSpec padded_grid(const GridSpec& g, int pad) {
  if (pad < 1) fail(ErrorCode::ConfigParse, "pad_factor must be >= 1");
  GridSpec p = g;
  p.half_extent = g.half_extent * pad;
  p.points_per_axis = g.points_per_axis * pad;
  return p;
}

Field extract_center(const Field& big, const GridSpec& small) {
  const int off = (big.grid.points_per_axis - small.points_per_axis) / 2;
  Field out(small);
  for_each_index(small, [&](const int* idx, std::int64_t flat) {
    int bidx[kMaxDim];
    for (int a = 0; a < small.dim; ++a) bidx[a] = idx[a] + off;
    out.at(flat) = big.at(big.flat_index(bidx));
  });
  return out;
}

// Largest |Sigma^{-1/2} x| over the box corners; the tail tables must cover it.
double rho_max_for(const JumpKernel& kernel, const GridSpec& grid) {
  double best = 0;
  const int d = grid.dim;
  for (int mask = 0; mask < (1 << d); ++mask) {
    Point x(d);
    for (int a = 0; a < d; ++a)
      x[a] = (mask >> a) & 1 ? grid.half_extent : -grid.half_extent;
    best = std::max(best, kernel.sigma_inv_sqrt().apply(x).norm());
  }
  return best;
}

// Wrap-around image bound for the n-fold convolution on the padded torus,
// evaluated at the retained box. Gaussian surrogate plus, for exponential
// tails, the one-big-jump term n * a(dist).
double image_bound(const JumpKernel& kernel, int n, double dist) {
  const int d = kernel.dim();
  double g = 2.0 * d * std::pow(2.0 * kPi * n, -0.5 * d) / std::sqrt(kernel.sigma_det()) *
             std::exp(-dist * dist / (2.0 * n * kernel.sigma_max_eig()));
  if (kernel.family() == KernelFamily::ExpTail)
    g += n * kernel.sup_density() * std::exp(-kernel.spec().delta * dist);
  return g;
}

int choose_lattice_terms(const JumpKernel& kernel, const GridSpec& grid, const GreenQuad& quad,
                         double* bound_at_n) {
  const double dist = (2.0 * quad.pad_factor - 1.0) * grid.half_extent;
  int n = 0;
  double last = 0;
  while (n < quad.max_terms) {
    double b = image_bound(kernel, n + 1, dist);
    if (b > quad.alias_target) break;
    last = b;
    ++n;
  }
  if (n == 0)
    fail(ErrorCode::GridTooSmall,
         "wrap-around images exceed the alias target for a single convolution; "
         "enlarge the grid or pad_factor");
  if (bound_at_n) *bound_at_n = last;
  return n;
}

std::complex<double> powi(std::complex<double> base, int e) {
  std::complex<double> acc{1.0, 0.0};
  while (e > 0) {
    if (e & 1) acc *= base;
    base *= base;
    e >>= 1;
  }
  return acc;
}

// Local-limit model of a_n at one point (Gaussian plus isotropic k^4 term);
// mirrors NeumannTail::term_bracket for the residual diagnostics.
double model_an(const JumpKernel& kernel, int n, const Point& x) {
  const int d = kernel.dim();
  double pref = std::pow(2.0 * kPi, -0.5 * d) / std::sqrt(kernel.sigma_det());
  double rho = kernel.sigma_inv_sqrt().apply(x).norm();
  double t = n;
  double g = std::pow(t, -0.5 * d) * std::exp(-0.5 * rho * rho / t);
  double b4 = 0;
  if (kernel.isotropic() && kernel.family() != KernelFamily::Gaussian) {
    double s2 = kernel.second_moment()(0, 0);
    b4 = kernel.edgeworth_beta() / (s2 * s2);
  }
  if (b4 != 0) {
    double r2 = rho * rho;
    g *= 1.0 + b4 * (r2 * r2 / (t * t * t) - (2.0 * d + 4.0) * r2 / (t * t) +
                     d * (d + 2.0) / t);
  }
  return pref * g;
}

// Continuum or lattice symbol on the dual lattice of `fft`. The lattice
// variant (DFT of the sampled density) is what discrete convolution powers
// actually exponentiate; the continuum variant drives the Fourier routes.
std::vector<std::complex<double>> lattice_symbol(const JumpKernel& kernel, const CenteredFft& fft) {
  auto buf = fft.to_complex(kernel.sample_on_grid(fft.grid()));
  fft.forward(buf);
  return buf;
}

std::vector<double> continuum_symbol(const JumpKernel& kernel, const CenteredFft& fft) {
  const GridSpec& g = fft.grid();
  const int d = g.dim;
  const int n = g.points_per_axis;
  std::vector<double> out(static_cast<size_t>(g.size()));
  parallel_for_range(g.size(), default_threads(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t f = lo; f < hi; ++f) {
      std::int64_t rem = f;
      Point k(d);
      for (int a = d - 1; a >= 0; --a) {
        k[a] = fft.freq(static_cast<int>(rem % n));
        rem /= n;
      }
      out[static_cast<size_t>(f)] = kernel.fourier_symbol(k);
    }
  });
  return out;
}

void add_pointwise(Field& f, int threads, const std::function<double(const Point&)>& fn) {
  parallel_for_range(f.grid.size(), threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) f.at(i) += fn(f.point_at(i));
  });
}

// Closed-form inverse transform of M(k) = 2 exp(-q/2)/q, q = k' Sigma k:
//   det(Sigma)^{-1/2} * (2 / (4 pi^{d/2})) * |y|^{2-d} gamma(d/2-1, |y|^2/2),
// y = Sigma^{-1/2} x.
double singular_part(const JumpKernel& kernel, const Point& x) {
  const int d = kernel.dim();
  double pref = 2.0 / (4.0 * std::pow(kPi, 0.5 * d)) / std::sqrt(kernel.sigma_det());
  double y = kernel.sigma_inv_sqrt().apply(x).norm();
  double z = 0.5 * y * y;
  double a = 0.5 * d - 1.0;
  if (z < 1e-12) return pref / (std::pow(2.0, a) * a);
  return pref * std::pow(y, 2.0 - d) * gamma_lower(a, z);
}

}  // namespace

GreenField green_series(const JumpKernel& kernel, const GridSpec& grid, double tol,
                        const GreenQuad& quad) {
  grid.validate();
  if (grid.dim != kernel.dim()) fail(ErrorCode::ConfigParse, "grid/kernel dimension mismatch");

  GridSpec gp = padded_grid(grid, quad.pad_factor);
  CenteredFft fft(gp);
  auto A = lattice_symbol(kernel, fft);

  double alias_at_n = 0;
  const int N = choose_lattice_terms(kernel, grid, quad, &alias_at_n);

  auto S = A;
  parallel_for_range(static_cast<std::int64_t>(S.size()), default_threads(),
                     [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      std::complex<double> a = A[static_cast<size_t>(i)];
      std::complex<double> om = 1.0 - a;
      if (std::abs(om) < 1e-13) {
        S[static_cast<size_t>(i)] = static_cast<double>(N);
      } else {
        S[static_cast<size_t>(i)] = a * (1.0 - powi(a, N)) / om;
      }
    }
  });
  fft.backward(S);
  double imag_max = 0;
  Field partial_padded = fft.to_field(S, &imag_max);
  Field result = extract_center(partial_padded, grid);

  NeumannTail tail(kernel, {TailWeights::Kind::Ones, 0.0}, N + 1, rho_max_for(kernel, grid));
  double residual = 0;
  if (quad.tail_completion) {
    add_pointwise(result, default_threads(), [&](const Point& x) { return tail.eval(x); });
    // Residual diagnostic: distance of the last computed lattice term from
    // its local-limit model, extrapolated over the modeled remainder (the
    // deviation decays like n^{-(d+4)/2}, so the sum beyond N is ~ 2N/(d+2)
    // times it).
    auto AN = A;
    for (auto& c : AN) c = powi(c, N);
    fft.backward(AN);
    Field an = extract_center(fft.to_field(AN), grid);
    double dev = 0;
    for_each_index(grid, [&](const int*, std::int64_t flat) {
      dev = std::max(dev, std::fabs(an.at(flat) - model_an(kernel, N, an.point_at(flat))));
    });
    residual = dev * 2.0 * N / (kernel.dim() + 2.0);
  } else {
    residual = tail.eval_rho(0);  // sup of the whole dropped remainder
  }

  GreenField out;
  out.field = std::move(result);
  out.lambda = 0;
  out.method = GreenMethod::Series;
  out.trunc.terms = N;
  out.trunc.tail_estimate = alias_at_n + residual;
  out.trunc.imag_residual = imag_max;
  out.trunc.notes = quad.tail_completion
                        ? "lattice partial sum + local-limit tail completion"
                        : "bare lattice partial sum";
  if (out.trunc.tail_estimate > tol)
    fail(ErrorCode::SlowConvergence,
         "series residual estimate " + std::to_string(out.trunc.tail_estimate) +
             " exceeds tol " + std::to_string(tol));
  return out;
}

GreenField green_fourier(const JumpKernel& kernel, const GridSpec& grid, const GreenQuad& quad) {
  grid.validate();
  if (grid.dim != kernel.dim()) fail(ErrorCode::ConfigParse, "grid/kernel dimension mismatch");
  const int d = grid.dim;

  GridSpec gp = padded_grid(grid, quad.pad_factor);
  CenteredFft fft(gp);

  std::vector<double> ahat;
  if (kernel.family() == KernelFamily::Tabulated) {
    auto A = lattice_symbol(kernel, fft);
    ahat.resize(A.size());
    for (size_t i = 0; i < A.size(); ++i) ahat[i] = A[i].real();
  } else {
    ahat = continuum_symbol(kernel, fft);
  }

  const SymMatrix& sigma = kernel.second_moment();
  const bool iso = kernel.isotropic();
  const double s2 = sigma(0, 0);
  const int n = gp.points_per_axis;
  const std::int64_t center_flat = [&] {
    int idx[kMaxDim];
    for (int a = 0; a < d; ++a) idx[a] = n / 2;
    Field probe(gp);
    return probe.flat_index(idx);
  }();

  std::vector<std::complex<double>> W(ahat.size());
  double min_ratio = 1e300;
  double boundary_max = 0;
  {
    std::vector<double> ratios(static_cast<size_t>(2 * d), 1e300);
    parallel_for_range(gp.size(), default_threads(), [&](std::int64_t lo, std::int64_t hi) {
      double local_boundary = 0;
      for (std::int64_t f = lo; f < hi; ++f) {
        if (f == center_flat) continue;
        std::int64_t rem = f;
        Point k(d);
        bool boundary = false;
        for (int a = d - 1; a >= 0; --a) {
          int j = static_cast<int>(rem % n);
          rem /= n;
          if (j == 0 || j == n - 1) boundary = true;
          k[a] = fft.freq(j);
        }
        double ah = ahat[static_cast<size_t>(f)];
        double q = iso ? s2 * k.norm2() : sigma.quad(k);
        double w = ah * ah / (1.0 - ah) - 2.0 * std::exp(-0.5 * q) / q;
        W[static_cast<size_t>(f)] = w;
        if (boundary) local_boundary = std::max(local_boundary, std::fabs(w));
      }
      static std::mutex m;
      std::lock_guard<std::mutex> g(m);
      boundary_max = std::max(boundary_max, local_boundary);
    });
  }

  // Singularity order check on the innermost axis shell: 2(1 - a_hat)/q must
  // stay of order one; a collapse signals 1 - a_hat = o(|k|^2).
  {
    for (int a = 0; a < d; ++a) {
      for (int step = 1; step <= 2; ++step) {
        int idx[kMaxDim];
        for (int b = 0; b < d; ++b) idx[b] = n / 2;
        idx[a] += step;
        Field probe(gp);
        std::int64_t f = probe.flat_index(idx);
        Point k(d);
        k[a] = fft.freq(idx[a]);
        double q = iso ? s2 * k.norm2() : sigma.quad(k);
        double ratio = 2.0 * (1.0 - ahat[static_cast<size_t>(f)]) / q;
        min_ratio = std::min(min_ratio, ratio);
      }
    }
    if (min_ratio < 0.25)
      fail(ErrorCode::SingularityOrderViolation,
           "1 - a_hat(k) vanishes faster than the second-moment quadratic form near k = 0 "
           "(min ratio " + std::to_string(min_ratio) + ")");
  }

  // k = 0 value by Richardson extrapolation in q along the last axis.
  {
    int idx[kMaxDim];
    for (int a = 0; a < d; ++a) idx[a] = n / 2;
    Field probe(gp);
    idx[d - 1] = n / 2 + 1;
    std::complex<double> w1 = W[static_cast<size_t>(probe.flat_index(idx))];
    idx[d - 1] = n / 2 + 2;
    std::complex<double> w2 = W[static_cast<size_t>(probe.flat_index(idx))];
    W[static_cast<size_t>(center_flat)] = (4.0 * w1 - w2) / 3.0;
  }

  fft.backward(W);
  double imag_max = 0;
  Field w_padded = fft.to_field(W, &imag_max);
  Field result = extract_center(w_padded, grid);

  add_pointwise(result, default_threads(), [&](const Point& x) {
    return kernel.density(x) + singular_part(kernel, x);
  });

  GreenField out;
  out.field = std::move(result);
  out.lambda = 0;
  out.method = GreenMethod::Fourier;
  out.trunc.quad_radius = kPi / gp.spacing();
  // Crude truncation estimate: the boundary-shell magnitude spread over the
  // outermost frequency shell volume.
  double dk = fft.dk();
  out.trunc.tail_estimate =
      boundary_max * 2.0 * d * std::pow(n, d - 1) * std::pow(dk, d) / std::pow(2.0 * kPi, d);
  out.trunc.imag_residual = imag_max;
  out.trunc.notes = "peeled first term + damped quadratic-pole subtraction";
  return out;
}

GreenField resolvent_kernel(const JumpKernel& kernel, double lambda, const GridSpec& grid,
                            double tol, const GreenQuad& quad) {
  if (lambda < 0) fail(ErrorCode::NonpositiveLambda, "lambda must be >= 0");
  if (lambda == 0) return green_series(kernel, grid, tol, quad);
  grid.validate();
  if (grid.dim != kernel.dim()) fail(ErrorCode::ConfigParse, "grid/kernel dimension mismatch");

  GridSpec gp = padded_grid(grid, quad.pad_factor);
  CenteredFft fft(gp);
  auto A = lattice_symbol(kernel, fft);

  double alias_at_n = 0;
  const int N = choose_lattice_terms(kernel, grid, quad, &alias_at_n);
  const double inv = 1.0 / (1.0 + lambda);

  auto S = A;
  parallel_for_range(static_cast<std::int64_t>(S.size()), default_threads(),
                     [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      std::complex<double> r = A[static_cast<size_t>(i)] * inv;
      std::complex<double> om = 1.0 - r;
      S[static_cast<size_t>(i)] =
          std::abs(om) < 1e-14 ? std::complex<double>(N) : r * (1.0 - powi(r, N)) / om;
    }
  });
  fft.backward(S);
  double imag_max = 0;
  Field partial = extract_center(fft.to_field(S, &imag_max), grid);

  NeumannTail tail(kernel, {TailWeights::Kind::Geometric, lambda}, N + 1,
                   rho_max_for(kernel, grid));
  if (quad.tail_completion)
    add_pointwise(partial, default_threads(), [&](const Point& x) { return tail.eval(x); });

  GreenField out;
  out.field = std::move(partial);
  out.lambda = lambda;
  out.method = GreenMethod::Series;
  out.trunc.terms = N;
  double geo = kernel.sup_density() * std::pow(inv, N) / lambda;  // crude sup bound on the tail
  out.trunc.tail_estimate = alias_at_n + std::min(geo, 1e300);
  out.trunc.imag_residual = imag_max;
  out.trunc.notes = "geometric-weighted partial sum + local-limit tail";
  return out;
}

GreenField resolvent_fourier(const JumpKernel& kernel, double lambda, const GridSpec& grid,
                             const GreenQuad& quad) {
  if (lambda <= 0) fail(ErrorCode::NonpositiveLambda, "fourier resolvent needs lambda > 0");
  grid.validate();
  const int d = grid.dim;

  GridSpec gp = padded_grid(grid, quad.pad_factor);
  CenteredFft fft(gp);

  std::vector<double> ahat;
  if (kernel.family() == KernelFamily::Tabulated) {
    auto A = lattice_symbol(kernel, fft);
    ahat.resize(A.size());
    for (size_t i = 0; i < A.size(); ++i) ahat[i] = A[i].real();
  } else {
    ahat = continuum_symbol(kernel, fft);
  }

  const SymMatrix& sigma = kernel.second_moment();
  const bool iso = kernel.isotropic();
  const double s2 = sigma(0, 0);
  const double inv = 1.0 / (1.0 + lambda);
  const int n = gp.points_per_axis;

  std::vector<std::complex<double>> W(ahat.size());
  parallel_for_range(gp.size(), default_threads(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t f = lo; f < hi; ++f) {
      std::int64_t rem = f;
      Point k(d);
      for (int a = d - 1; a >= 0; --a) {
        k[a] = fft.freq(static_cast<int>(rem % n));
        rem /= n;
      }
      double ah = ahat[static_cast<size_t>(f)];
      double q = iso ? s2 * k.norm2() : sigma.quad(k);
      double denom = 1.0 + lambda - ah;
      double w = (ah * ah / denom - 2.0 * std::exp(-0.5 * q) / (q + 2.0 * lambda)) * inv;
      W[static_cast<size_t>(f)] = w;
    }
  });

  fft.backward(W);
  double imag_max = 0;
  Field result = extract_center(fft.to_field(W, &imag_max), grid);

  // Yukawa-type subtraction term: inv * det^{-1/2} * int_1^inf
  // e^{-lambda(u-1)} (2 pi u)^{-d/2} exp(-rho^2/2u) du, tabulated in rho.
  const double rho_hi = rho_max_for(kernel, grid) + 1.0;
  const int nt = 2048;
  std::vector<double> ytab(nt);
  const double dr = rho_hi / (nt - 1);
  const double vmax = std::log(45.0 / lambda + 2.0);
  const int nv = std::max(400, static_cast<int>(vmax / 0.01));
  parallel_for_range(nt, default_threads(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t j = lo; j < hi; ++j) {
      double rho = dr * static_cast<double>(j);
      double acc = 0;
      double dv = vmax / nv;
      for (int iv = 0; iv <= nv; ++iv) {
        double v = dv * iv;
        double u = std::exp(v);
        double f = std::exp(-lambda * (u - 1.0)) * std::pow(2.0 * kPi * u, -0.5 * d) *
                   std::exp(-0.5 * rho * rho / u) * u;
        acc += (iv == 0 || iv == nv ? 1.0 : (iv % 2 ? 4.0 : 2.0)) * f;
      }
      ytab[static_cast<size_t>(j)] = acc * dv / 3.0;
    }
  });
  const double det_fac = inv / std::sqrt(kernel.sigma_det());
  add_pointwise(result, default_threads(), [&](const Point& x) {
    double rho = kernel.sigma_inv_sqrt().apply(x).norm();
    double t = std::min(rho / dr, static_cast<double>(nt - 1) - 1e-9);
    auto j = static_cast<long>(t);
    double fr = t - j;
    double y = ytab[static_cast<size_t>(j)] * (1 - fr) +
               ytab[static_cast<size_t>(std::min<long>(j + 1, nt - 1))] * fr;
    return kernel.density(x) * inv + det_fac * y;
  });

  GreenField out;
  out.field = std::move(result);
  out.lambda = lambda;
  out.method = GreenMethod::Fourier;
  out.trunc.quad_radius = kPi / gp.spacing();
  out.trunc.imag_residual = imag_max;
  out.trunc.notes = "resolvent split with Yukawa-type peak subtraction";
  return out;
}

namespace {

TransitionDensity transition_impl(const JumpKernel& kernel, double t, const GridSpec& grid,
                                  const GreenQuad& quad, bool continuum) {
  if (!(t > 0)) fail(ErrorCode::ConfigParse, "transition density needs t > 0");
  grid.validate();
  if (grid.dim != kernel.dim()) fail(ErrorCode::ConfigParse, "grid/kernel dimension mismatch");
  const int d = grid.dim;

  GridSpec gp = padded_grid(grid, quad.pad_factor);
  CenteredFft fft(gp);

  std::vector<std::complex<double>> P;
  if (continuum) {
    if (kernel.family() == KernelFamily::Tabulated)
      fail(ErrorCode::Internal, "continuum-symbol cross-check needs a closed-form symbol");
    auto ahat = continuum_symbol(kernel, fft);
    P.resize(ahat.size());
    for (size_t i = 0; i < ahat.size(); ++i)
      P[i] = std::exp(t * (ahat[i] - 1.0)) - std::exp(-t);
  } else {
    P = lattice_symbol(kernel, fft);
    const double atom = std::exp(-t);
    parallel_for_range(static_cast<std::int64_t>(P.size()), default_threads(),
                       [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        auto& c = P[static_cast<size_t>(i)];
        c = std::exp(t * (c - 1.0)) - atom;
      }
    });
  }

  fft.backward(P);
  double imag_max = 0;
  TransitionDensity out;
  out.t = t;
  out.atom_weight = std::exp(-t);
  out.regular = extract_center(fft.to_field(P, &imag_max), grid);
  out.trunc.imag_residual = imag_max;
  // Escaped-mass estimate, Poisson-weighted over the jump count: the tail is
  // dominated by realizations with many more jumps than t.
  double escape = 0;
  {
    int nmax = static_cast<int>(t + 12.0 * std::sqrt(t + 1.0) + 30.0);
    double logp = -t;  // log pois_0
    for (int n = 1; n <= nmax; ++n) {
      logp += std::log(t) - std::log(static_cast<double>(n));
      double pn = std::exp(logp);
      for (int a = 0; a < d; ++a)
        escape += pn * std::erfc(grid.half_extent /
                                 std::sqrt(2.0 * n * kernel.second_moment()(a, a)));
    }
  }
  out.trunc.escaped_mass = escape;
  out.trunc.notes = continuum ? "continuum symbol" : "lattice symbol";
  return out;
}

}  // namespace

TransitionDensity transition_density(const JumpKernel& kernel, double t, const GridSpec& grid,
                                     const GreenQuad& quad) {
  return transition_impl(kernel, t, grid, quad, false);
}

TransitionDensity transition_density_fourier(const JumpKernel& kernel, double t,
                                             const GridSpec& grid, const GreenQuad& quad) {
  return transition_impl(kernel, t, grid, quad, true);
}

TimeIntegral green_time_integral(const JumpKernel& kernel, const GridSpec& grid, double T,
                                 const GreenQuad& quad) {
  if (!(T > 0)) fail(ErrorCode::ConfigParse, "time integral needs T > 0");
  grid.validate();

  GridSpec gp = padded_grid(grid, quad.pad_factor);
  CenteredFft fft(gp);
  auto A = lattice_symbol(kernel, fft);

  double alias_at_n = 0;
  const int N = choose_lattice_terms(kernel, grid, quad, &alias_at_n);

  // sum_{n<=N} P(n+1, T) A^n accumulated iteratively.
  std::vector<double> w(static_cast<size_t>(N + 1), 0.0);
  for (int n = 1; n <= N; ++n) w[static_cast<size_t>(n)] = gamma_p(n + 1.0, T);
  std::vector<std::complex<double>> S(A.size(), 0.0), cur = A;
  for (int n = 1; n <= N; ++n) {
    const double wn = w[static_cast<size_t>(n)];
    parallel_for_range(static_cast<std::int64_t>(S.size()), default_threads(),
                       [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        S[static_cast<size_t>(i)] += wn * cur[static_cast<size_t>(i)];
        if (n < N) cur[static_cast<size_t>(i)] *= A[static_cast<size_t>(i)];
      }
    });
  }
  fft.backward(S);
  double imag_max = 0;
  Field integral = extract_center(fft.to_field(S, &imag_max), grid);

  const double rho_hi = rho_max_for(kernel, grid);
  NeumannTail tail_in(kernel, {TailWeights::Kind::TimeIntegral, T}, N + 1, rho_hi);
  add_pointwise(integral, default_threads(), [&](const Point& x) { return tail_in.eval(x); });

  NeumannTail tail_out(kernel, {TailWeights::Kind::TimeIntegralComplement, T}, 1, rho_hi);
  Field tail_field(grid);
  add_pointwise(tail_field, default_threads(), [&](const Point& x) { return tail_out.eval(x); });

  TimeIntegral out;
  out.integral = std::move(integral);
  out.tail = std::move(tail_field);
  out.trunc.terms = N;
  out.trunc.tail_estimate = alias_at_n;
  out.trunc.imag_residual = imag_max;
  out.trunc.notes = "Poisson-weighted partial sum; tail models sum (1-P(n+1,T)) g_n";
  return out;
}

double brownian_green_constant(int d) {
  check_dim(d);
  return std::tgamma(0.5 * d - 1.0) / (4.0 * std::pow(kPi, 0.5 * d));
}

double brownian_green(int d, const Point& x, const Point& y) {
  check_dim(d);
  Point diff = x - y;
  double r = diff.norm();
  if (r < 1e-12) fail(ErrorCode::CoincidingPoints, "brownian_green needs x != y");
  return brownian_green_constant(d) * std::pow(r, 2.0 - d);
}

DecayFit decay_fit(const GreenField& gf, DecayModel model) {
  const Field& G = gf.field;
  const GridSpec& g = G.grid;
  const double h = g.spacing();
  const double r_min = 1.5 * h;       // excludes the origin cell
  const double r_max = g.half_extent; // inscribed ball

  const int nshell = std::max(4, static_cast<int>((r_max - r_min) / h));
  std::vector<double> sum_log(static_cast<size_t>(nshell), 0.0);
  std::vector<double> sum_r(static_cast<size_t>(nshell), 0.0);
  std::vector<long> count(static_cast<size_t>(nshell), 0);

  for_each_index(g, [&](const int*, std::int64_t flat) {
    Point x = G.point_at(flat);
    double r = x.norm();
    if (r < r_min || r >= r_max) return;
    double v = G.at(flat);
    if (!(v > 0)) return;
    int s = static_cast<int>((r - r_min) / (r_max - r_min) * nshell);
    if (s < 0 || s >= nshell) return;
    sum_log[static_cast<size_t>(s)] += std::log(v);
    sum_r[static_cast<size_t>(s)] += r;
    ++count[static_cast<size_t>(s)];
  });

  // Assemble (z, mean log G) pairs, z = r^2/2 or r.
  std::vector<double> zs, ys;
  for (int s = 0; s < nshell; ++s) {
    if (count[static_cast<size_t>(s)] < 4) continue;
    double r = sum_r[static_cast<size_t>(s)] / count[static_cast<size_t>(s)];
    double y = sum_log[static_cast<size_t>(s)] / count[static_cast<size_t>(s)];
    zs.push_back(model == DecayModel::GaussianBound ? 0.5 * r * r : r);
    ys.push_back(y);
  }
  if (zs.size() < 6)
    fail(ErrorCode::InsufficientDecade, "not enough populated radial shells for a fit");
  double ylo = *std::min_element(ys.begin(), ys.end());
  double yhi = *std::max_element(ys.begin(), ys.end());
  // Green densities of finite-second-moment kernels carry a |x|^{2-d} far
  // tail, so even healthy fields span barely one decade on a desk grid; half
  // a decade is enough to identify a slope while still rejecting flat data.
  if (yhi - ylo < 0.5 * std::log(10.0))
    fail(ErrorCode::InsufficientDecade,
         "field spans less than half a decade of decay on the grid; enlarge the grid");

  // Least squares y = c0 - exponent * z.
  double n = static_cast<double>(zs.size()), sz = 0, sy = 0, szz = 0, szy = 0;
  for (size_t i = 0; i < zs.size(); ++i) {
    sz += zs[i];
    sy += ys[i];
    szz += zs[i] * zs[i];
    szy += zs[i] * ys[i];
  }
  double slope = (n * szy - sz * sy) / (n * szz - sz * sz);
  double inter = (sy - slope * sz) / n;

  DecayFit fit;
  fit.model = model;
  fit.exponent = -slope;
  fit.ls_prefactor = std::exp(inter);
  fit.r_min = r_min;
  fit.r_max = r_max;
  fit.shells = static_cast<int>(zs.size());

  // Envelope prefactor: smallest constant making the bound hold everywhere
  // on the grid with the fitted exponent.
  double cmax = 0;
  for_each_index(g, [&](const int*, std::int64_t flat) {
    double v = G.at(flat);
    if (v <= 0) return;
    Point x = G.point_at(flat);
    double z = model == DecayModel::GaussianBound ? 0.5 * x.norm2() : x.norm();
    cmax = std::max(cmax, v * std::exp(fit.exponent * z));
  });
  fit.prefactor = cmax * (1.0 + 1e-12);

  double viol = -1e300;
  for_each_index(g, [&](const int*, std::int64_t flat) {
    Point x = G.point_at(flat);
    double z = model == DecayModel::GaussianBound ? 0.5 * x.norm2() : x.norm();
    viol = std::max(viol, G.at(flat) - fit.prefactor * std::exp(-fit.exponent * z));
  });
  fit.max_violation = viol;
  return fit;
}

}  // namespace greenpot
