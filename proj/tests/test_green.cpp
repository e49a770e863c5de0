#include "doctest.h"

#include <cmath>
#include <complex>

#include "greenpot/errors.hpp"
#include "greenpot/fft.hpp"
#include "greenpot/green.hpp"
#include "greenpot/kernels.hpp"
#include "greenpot/neumann_tail.hpp"

using namespace greenpot;

namespace {

JumpKernel gaussian3(double b = 1.0) {
  KernelSpec s;
  s.dim = 3;
  s.family = KernelFamily::Gaussian;
  s.b = b;
  return make_kernel(s);
}

JumpKernel exp_tail3(double delta = 1.0) {
  KernelSpec s;
  s.dim = 3;
  s.family = KernelFamily::ExpTail;
  s.delta = delta;
  return make_kernel(s);
}

// zeta(s) by direct summation with Euler-Maclaurin closure.
double zeta_sum(double s) {
  const long N = 20000;
  double acc = 0;
  for (long n = N - 1; n >= 1; --n) acc += std::pow(static_cast<double>(n), -s);
  double fN = std::pow(static_cast<double>(N), -s);
  acc += std::pow(static_cast<double>(N), 1.0 - s) / (s - 1.0) + 0.5 * fN +
         s * fN / (12.0 * N);
  return acc;
}

const GridSpec kGrid{3, 6.0, 64};

}  // namespace

TEST_CASE("neumann tail table against brute-force summation") {
  auto k = exp_tail3(1.0);
  SUBCASE("plain weights") {
    NeumannTail tail(k, {TailWeights::Kind::Ones, 0.0}, 15, 12.0);
    // brute truncation at M leaves ~ pref * 2/sqrt(M); close it analytically
    const long M = 40000000L;
    const double pref = std::pow(2.0 * M_PI, -1.5) / std::sqrt(64.0);  // det Sigma = 4^3
    for (double rho : {0.0, 0.7, 3.3, 9.0}) {
      double brute = tail.brute_rho(rho, M) + pref * 2.0 / std::sqrt(static_cast<double>(M));
      CHECK(tail.eval_rho(rho) == doctest::Approx(brute).epsilon(1e-6));
    }
  }
  SUBCASE("geometric weights") {
    NeumannTail tail(k, {TailWeights::Kind::Geometric, 0.001}, 8, 12.0);
    for (double rho : {0.0, 1.9, 6.0}) {
      double brute = tail.brute_rho(rho, 2000000L);
      CHECK(tail.eval_rho(rho) == doctest::Approx(brute).epsilon(2e-6));
    }
  }
  SUBCASE("poisson time-integral weights") {
    NeumannTail tail(k, {TailWeights::Kind::TimeIntegral, 60.0}, 10, 12.0);
    for (double rho : {0.0, 2.5}) {
      double brute = tail.brute_rho(rho, 4000L);  // weights vanish past ~T
      CHECK(tail.eval_rho(rho) == doctest::Approx(brute).epsilon(2e-6));
    }
  }
}

TEST_CASE("G0 at the origin: zeta closed form, both routes") {
  auto k = gaussian3();
  const double expect = std::pow(2.0 * M_PI, -1.5) * zeta_sum(1.5);

  GreenField gs = green_series(k, kGrid, 1e-5);
  GreenField gf = green_fourier(k, kGrid);

  int idx[kMaxDim] = {32, 32, 32};
  std::int64_t flat = gs.field.flat_index(idx);
  CHECK(gs.field.point_at(flat).norm() == doctest::Approx(0.0));

  CHECK(gs.field.at(flat) == doctest::Approx(expect).epsilon(1e-5));
  CHECK(gf.field.at(flat) == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("route equivalence on |x| <= 3 within 1e-4 relative (gaussian)") {
  auto k = gaussian3();
  GreenField gs = green_series(k, kGrid, 1e-5);
  GreenField gf = green_fourier(k, kGrid);
  double worst = 0;
  for_each_index(kGrid, [&](const int*, std::int64_t flat) {
    if (gs.field.point_at(flat).norm() > 3.0) return;
    double rel = std::fabs(gs.field.at(flat) - gf.field.at(flat)) / gf.field.at(flat);
    worst = std::max(worst, rel);
  });
  CHECK(worst < 1e-4);
}

TEST_CASE("route equivalence within combined recorded estimates (exp_tail)") {
  auto k = exp_tail3();
  GridSpec grid{3, 12.0, 64};
  GreenField gs = green_series(k, grid, 1e-3);
  GreenField gf = green_fourier(k, grid);
  double budget = gs.trunc.tail_estimate + gf.trunc.tail_estimate + 5e-5;
  double worst = 0;
  for_each_index(grid, [&](const int*, std::int64_t flat) {
    if (gs.field.point_at(flat).norm() > 3.0) return;
    worst = std::max(worst, std::fabs(gs.field.at(flat) - gf.field.at(flat)));
  });
  CHECK(worst < budget);
}

TEST_CASE("green field invariants: nonnegative, symmetric") {
  auto k = gaussian3();
  GreenField gf = green_fourier(k, kGrid);
  CHECK(gf.field.min_value() > -1e-8);

  const int n = kGrid.points_per_axis;
  double dev = 0;
  for_each_index(kGrid, [&](const int* idx, std::int64_t flat) {
    bool edge = false;
    int mirror[kMaxDim];
    for (int a = 0; a < 3; ++a) {
      if (idx[a] == 0) { edge = true; break; }
      mirror[a] = n - idx[a];
    }
    if (edge) return;
    dev = std::max(dev, std::fabs(gf.field.at(flat) -
                                  gf.field.at(gf.field.flat_index(mirror))));
  });
  CHECK(dev < 1e-8);
}

TEST_CASE("single-term budget returns the kernel itself") {
  auto k = gaussian3();
  GreenQuad quad;
  quad.max_terms = 1;
  quad.tail_completion = false;
  GreenField g1 = green_series(k, kGrid, 1e9, quad);
  CHECK(g1.trunc.terms == 1);
  Field ref = k.sample_on_grid(kGrid);
  // the route normalizes on the padded box, the reference on the small one;
  // the mismatch is the escaped-mass ratio, a few 1e-10 here
  double dev = 0;
  for (size_t i = 0; i < ref.values.size(); ++i)
    dev = std::max(dev, std::fabs(g1.field.values[i] - ref.values[i]));
  CHECK(dev < 1e-8);
  // and the recorded estimate covers what was dropped
  CHECK(g1.trunc.tail_estimate > 0.01);
}

TEST_CASE("resolvent: weighted zeta closed form at lambda = 1") {
  auto k = gaussian3();
  GreenField g = resolvent_kernel(k, 1.0, kGrid);
  double expect = 0;
  for (int n = 60; n >= 1; --n)
    expect += std::pow(2.0 * M_PI * n, -1.5) * std::pow(2.0, -n);
  int idx[kMaxDim] = {32, 32, 32};
  CHECK(g.field.at(g.field.flat_index(idx)) == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("resolvent: large lambda limit is a/(1+lambda)") {
  auto k = gaussian3();
  const double lambda = 1000.0;
  GreenField g = resolvent_kernel(k, lambda, kGrid);
  Field a = k.sample_on_grid(kGrid);
  for_each_index(kGrid, [&](const int*, std::int64_t flat) {
    Point x = a.point_at(flat);
    if (x.norm() > 2.0) return;
    double rel = std::fabs(g.field.at(flat) * (1.0 + lambda) / a.at(flat) - 1.0);
    CHECK(rel <= 2.0 / (1.0 + lambda));
  });
}

TEST_CASE("resolvent: nonpositive lambda rejected, lambda = 0 delegates") {
  auto k = gaussian3();
  CHECK_THROWS_AS(resolvent_kernel(k, -0.5, kGrid), Error);
  GreenField g0 = resolvent_kernel(k, 0.0, kGrid, 1e-5);
  GreenField gs = green_series(k, kGrid, 1e-5);
  int idx[kMaxDim] = {32, 40, 30};
  CHECK(g0.field.at(g0.field.flat_index(idx)) ==
        doctest::Approx(gs.field.at(gs.field.flat_index(idx))).epsilon(1e-14));
}

TEST_CASE("resolvent monotone in lambda and below G0") {
  auto k = gaussian3();
  GreenField g0 = green_series(k, kGrid, 1e-5);
  double lambdas[] = {1.0, 0.1, 0.01, 1e-3, 1e-4};
  GreenField prev = resolvent_kernel(k, lambdas[0], kGrid);
  for (int li = 1; li < 5; ++li) {
    GreenField cur = resolvent_kernel(k, lambdas[li], kGrid);
    for (size_t i = 0; i < cur.field.values.size(); ++i) {
      CHECK(prev.field.values[i] <= cur.field.values[i] + 1e-8);
      CHECK(cur.field.values[i] <= g0.field.values[i] + 1e-8);
    }
    prev = std::move(cur);
  }
}

TEST_CASE("resolvent fourier cross-check at moderate lambda") {
  auto k = gaussian3();
  for (double lambda : {1.0, 0.3}) {
    GreenField s = resolvent_kernel(k, lambda, kGrid);
    GreenField f = resolvent_fourier(k, lambda, kGrid);
    double worst = 0;
    for_each_index(kGrid, [&](const int*, std::int64_t flat) {
      if (s.field.point_at(flat).norm() > 3.0) return;
      worst = std::max(worst, std::fabs(s.field.at(flat) - f.field.at(flat)));
    });
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("transition density: atom and regular mass") {
  auto k = gaussian3();
  // box wide enough that the multi-jump tail of p(t,.) does not escape it
  GridSpec grid{3, 12.0, 64};
  for (double t : {0.01, 1.0}) {
    TransitionDensity p = transition_density(k, t, grid);
    CHECK(p.atom_weight == doctest::Approx(std::exp(-t)).epsilon(1e-14));
    CHECK(p.atom_weight + p.regular.mass() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p.regular.min_value() > -1e-10);
    CHECK(p.trunc.escaped_mass < 1e-6);
  }
  // on a tight box the escape is real and the estimate sees it
  TransitionDensity tight = transition_density(k, 1.0, kGrid);
  double missing = 1.0 - tight.atom_weight - tight.regular.mass();
  CHECK(missing > 1e-5);
  CHECK(tight.trunc.escaped_mass > 0.3 * missing);
}

TEST_CASE("transition density at t=1, x=0: poisson-weighted peaks") {
  auto k = gaussian3();
  TransitionDensity p = transition_density(k, 1.0, kGrid);
  double expect = 0, fact = 1;
  for (int n = 1; n <= 40; ++n) {
    fact *= n;
    expect += std::exp(-1.0) / fact * std::pow(2.0 * M_PI * n, -1.5);
  }
  int idx[kMaxDim] = {32, 32, 32};
  CHECK(p.regular.at(p.regular.flat_index(idx)) == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("transition density: lattice vs continuum symbol") {
  auto k = gaussian3();
  TransitionDensity a = transition_density(k, 0.7, kGrid);
  TransitionDensity b = transition_density_fourier(k, 0.7, kGrid);
  double dev = 0;
  for (size_t i = 0; i < a.regular.values.size(); ++i)
    dev = std::max(dev, std::fabs(a.regular.values[i] - b.regular.values[i]));
  CHECK(dev < 1e-9);
}

TEST_CASE("chapman-kolmogorov with atoms handled exactly") {
  auto k = gaussian3();
  const double t = 0.8, s = 1.7;
  // pad 1 so all three densities live on the same torus as the convolution
  GridSpec grid{3, 12.0, 96};
  GreenQuad quad;
  quad.pad_factor = 1;
  TransitionDensity pt = transition_density(k, t, grid, quad);
  TransitionDensity ps = transition_density(k, s, grid, quad);
  TransitionDensity pts = transition_density(k, t + s, grid, quad);

  // regular(t+s) = e^{-s} p_t + e^{-t} p_s + p_t * p_s (periodic lattice conv)
  CenteredFft fft(grid);
  auto bt = fft.to_complex(pt.regular);
  auto bs = fft.to_complex(ps.regular);
  fft.forward(bt);
  fft.forward(bs);
  for (size_t i = 0; i < bt.size(); ++i) bt[i] *= bs[i];
  fft.backward(bt);
  Field conv = fft.to_field(bt);

  double dev = 0;
  for (size_t i = 0; i < conv.values.size(); ++i) {
    double rhs = ps.atom_weight * pt.regular.values[i] +
                 pt.atom_weight * ps.regular.values[i] + conv.values[i];
    dev = std::max(dev, std::fabs(pts.regular.values[i] - rhs));
  }
  CHECK(dev < 1e-6);
}

TEST_CASE("time integral plus tail reproduces G0") {
  auto k = gaussian3();
  const double T = 120.0;
  TimeIntegral ti = green_time_integral(k, kGrid, T);
  GreenField g0 = green_series(k, kGrid, 1e-5);
  double worst = 0;
  for_each_index(kGrid, [&](const int*, std::int64_t flat) {
    if (ti.integral.point_at(flat).norm() > 2.0) return;
    double lhs = ti.integral.at(flat) + ti.tail.at(flat);
    worst = std::max(worst, std::fabs(lhs - g0.field.at(flat)) / g0.field.at(flat));
  });
  CHECK(worst < 1e-5);
  // atom bookkeeping: int_0^inf e^-t dt = 1 is the delta-atom mass
  CHECK(1.0 - std::exp(-T) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("brownian green closed forms") {
  Point o{0, 0, 0};
  CHECK(brownian_green(3, o, Point{1, 0, 0}) == doctest::Approx(1.0 / (4.0 * M_PI)).epsilon(1e-14));
  Point o4(4), y4(4);
  y4[0] = 1.0;
  CHECK(brownian_green(4, o4, y4) ==
        doctest::Approx(1.0 / (4.0 * M_PI * M_PI)).epsilon(1e-14));
  // homogeneity: value at 2r is 2^{2-d} times value at r
  CHECK(brownian_green(3, o, Point{2, 0, 0}) ==
        doctest::Approx(0.5 * brownian_green(3, o, Point{1, 0, 0})).epsilon(1e-14));
  CHECK_THROWS_AS(brownian_green(3, o, o), Error);
}

TEST_CASE("decay fits") {
  auto kg = gaussian3();
  GreenField g0 = green_series(kg, kGrid, 1e-5);

  DecayFit fg = decay_fit(g0, DecayModel::GaussianBound);
  CHECK(fg.exponent > 0);
  CHECK(fg.max_violation <= 0);
  CHECK(fg.prefactor > 0);

  auto ke = exp_tail3();
  GridSpec grid{3, 12.0, 64};
  GreenField ge = green_series(ke, grid, 1e-3);
  DecayFit fe = decay_fit(ge, DecayModel::ExponentialBound);
  CHECK(fe.exponent > 0);
  CHECK(fe.max_violation <= 0);

  // constant field: nothing to fit
  GreenField flat;
  flat.field = Field(kGrid);
  for (auto& v : flat.field.values) v = 0.5;
  CHECK_THROWS_AS(decay_fit(flat, DecayModel::GaussianBound), Error);
}

TEST_CASE("fourier route singularity guard stays quiet on sane kernels") {
  // Kernels that would trip the sub-quadratic guard are already rejected by
  // the second-moment trend check at validation, so here we only pin down
  // that the guard does not misfire on a healthy symbol.
  auto k = gaussian3();
  CHECK_NOTHROW(green_fourier(k, GridSpec{3, 6.0, 32}));
}
