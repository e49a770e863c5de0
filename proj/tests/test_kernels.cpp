#include "doctest.h"

#include <cmath>
#include <map>
#include <vector>

#include "greenpot/errors.hpp"
#include "greenpot/kernels.hpp"
#include "greenpot/rng.hpp"
#include "greenpot/special.hpp"

using namespace greenpot;

namespace {

KernelSpec gaussian_spec(int d, double b) {
  KernelSpec s;
  s.dim = d;
  s.family = KernelFamily::Gaussian;
  s.b = b;
  return s;
}

KernelSpec exp_tail_spec(int d, double delta) {
  KernelSpec s;
  s.dim = d;
  s.family = KernelFamily::ExpTail;
  s.delta = delta;
  return s;
}

KernelSpec tabulated_gaussian(int d, double b, const GridSpec& g) {
  KernelSpec s;
  s.dim = d;
  s.family = KernelFamily::Tabulated;
  s.grid = g;
  s.values.resize(static_cast<size_t>(g.size()));
  Field probe(g);
  for_each_index(g, [&](const int*, std::int64_t flat) {
    s.values[static_cast<size_t>(flat)] = std::exp(-0.5 * b * probe.point_at(flat).norm2());
  });
  return s;
}

}  // namespace

TEST_CASE("gaussian normalization is the closed form") {
  auto k = make_kernel(gaussian_spec(3, 1.0));
  CHECK(k.density(Point{0, 0, 0}) ==
        doctest::Approx(std::pow(2.0 * M_PI, -1.5)).epsilon(1e-14));
  // density integrates to 1 on a wide lattice
  GridSpec g{3, 8.0, 64};
  Field f = k.sample_on_grid(g);
  CHECK(f.mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exp_tail normalizer: radial quadrature oracle") {
  // 1/C = int_0^inf 4 pi r^2 e^{-r} dr = 8 pi for d=3, delta=1; the oracle
  // integrates numerically rather than trusting the closed form.
  const int n = 400000;
  const double rmax = 60.0, h = rmax / n;
  double s = 0;
  for (int i = 1; i <= n; ++i) {
    double w = (i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    double r = i * h;
    s += w * 4.0 * M_PI * r * r * std::exp(-r);
  }
  s *= h / 3.0;
  CHECK(s == doctest::Approx(8.0 * M_PI).epsilon(1e-9));

  auto k = make_kernel(exp_tail_spec(3, 1.0));
  CHECK(k.density(Point{0, 0, 0}) == doctest::Approx(1.0 / s).epsilon(1e-9));
  CHECK(k.density(Point{0, 0, 0}) == doctest::Approx(1.0 / (8.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("zero tabulated mass is rejected") {
  GridSpec g{3, 2.0, 8};
  KernelSpec s;
  s.dim = 3;
  s.family = KernelFamily::Tabulated;
  s.grid = g;
  s.values.assign(static_cast<size_t>(g.size()), 0.0);
  CHECK_THROWS_WITH_AS(make_kernel(s), doctest::Contains("zero mass"), Error);
}

TEST_CASE("asymmetric tabulated data is rejected") {
  GridSpec g{3, 4.0, 16};
  auto s = tabulated_gaussian(3, 1.0, g);
  // shift the peak off center by one cell along axis 0
  Field probe(g);
  for_each_index(g, [&](const int*, std::int64_t flat) {
    Point x = probe.point_at(flat);
    x[0] -= g.spacing();
    s.values[static_cast<size_t>(flat)] = std::exp(-0.5 * x.norm2());
  });
  CHECK_THROWS_AS(make_kernel(s), Error);
  try {
    make_kernel(s);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AsymmetricKernel);
  }
}

TEST_CASE("dimension below 3 is rejected") {
  CHECK_THROWS_AS(make_kernel(gaussian_spec(2, 1.0)), Error);
}

TEST_CASE("fourier symbol closed forms and bounds") {
  auto kg = make_kernel(gaussian_spec(3, 1.0));
  auto ke = make_kernel(exp_tail_spec(3, 1.0));

  // a_hat(0) = 1
  CHECK(kg.fourier_symbol(Point{0, 0, 0}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ke.fourier_symbol(Point{0, 0, 0}) == doctest::Approx(1.0).epsilon(1e-14));

  // gaussian at |k|^2 = 2 -> exp(-1); cross-checked against lattice quadrature
  Point k{1.0, 1.0, 0.0};
  CHECK(kg.fourier_symbol(k) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  {
    GridSpec g{3, 9.0, 96};
    Field f = kg.sample_on_grid(g);
    double s = 0;
    for_each_index(g, [&](const int*, std::int64_t flat) {
      Point x = f.point_at(flat);
      s += f.at(flat) * std::cos(dot(k, x));
    });
    s *= g.cell_volume();
    CHECK(s == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
  }

  // |a_hat| <= 1 on random draws, and decay along rays
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    Point k3(3);
    for (int a = 0; a < 3; ++a) k3[a] = (rng.uniform() - 0.5) * 30.0;
    CHECK(std::fabs(kg.fourier_symbol(k3)) <= 1.0 + 1e-12);
    CHECK(std::fabs(ke.fourier_symbol(k3)) <= 1.0 + 1e-12);
  }
  for (const auto* kptr : {&kg, &ke}) {
    double prev = 1.0;
    for (double r = 0.5; r < 40.0; r *= 1.3) {
      double cur = kptr->fourier_symbol_radial(r);
      CHECK(std::fabs(cur) <= prev + 1e-12);
      prev = std::fabs(cur);
    }
    CHECK(prev < 1e-4);
  }

  // quadratic approximation 1 - a_hat ~ k' Sigma k / 2: within 1% for the
  // gaussian family at |k| <= 0.1, and o(|k|^2) for the others (the error
  // shrinks by ~4x when k halves).
  for (double r : {0.02, 0.05, 0.1}) {
    Point k3{r, 0, 0};
    double lhs = 1.0 - kg.fourier_symbol(k3);
    CHECK(std::fabs(lhs / (0.5 * kg.second_moment().quad(k3)) - 1.0) < 0.01);
  }
  {
    auto relerr = [&](double r) {
      Point k3{r, 0, 0};
      double lhs = 1.0 - ke.fourier_symbol(k3);
      return std::fabs(lhs / (0.5 * ke.second_moment().quad(k3)) - 1.0);
    };
    CHECK(relerr(0.1) < 0.02);
    CHECK(relerr(0.05) < relerr(0.1) / 3.0);
    CHECK(relerr(0.025) < relerr(0.05) / 3.0);
  }
}

TEST_CASE("second moment closed forms") {
  auto k1 = make_kernel(gaussian_spec(3, 1.0));
  auto k4 = make_kernel(gaussian_spec(3, 4.0));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(k1.second_moment()(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
      CHECK(k4.second_moment()(i, j) == doctest::Approx(i == j ? 0.25 : 0.0).epsilon(1e-12));
    }

  // 1d gaussian variance oracle by quadrature, per coordinate
  {
    const int n = 200000;
    const double xmax = 12.0, h = xmax / n;
    double v = 0;
    for (int i = 1; i <= n; ++i) {
      double w = (i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      double x = i * h;
      v += w * x * x * std::exp(-0.5 * x * x);
    }
    v *= 2.0 * h / 3.0 / std::sqrt(2.0 * M_PI);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  }

  // tabulated gaussian reproduces Sigma by quadrature
  GridSpec g{3, 7.0, 64};
  auto kt = make_kernel(tabulated_gaussian(3, 1.0, g));
  for (int i = 0; i < 3; ++i)
    CHECK(kt.second_moment()(i, i) == doctest::Approx(1.0).epsilon(5e-3));
  CHECK(kt.second_moment()(0, 1) == doctest::Approx(kt.second_moment()(1, 0)).epsilon(1e-14));

  // exp_tail second moment: E r^2 / d with r ~ Gamma(d, delta)
  auto ke = make_kernel(exp_tail_spec(3, 2.0));
  CHECK(ke.second_moment()(0, 0) == doctest::Approx(4.0 / 4.0).epsilon(1e-12));
}

TEST_CASE("heavy-tailed table flags MomentDiverges") {
  GridSpec g{3, 24.0, 64};
  KernelSpec s;
  s.dim = 3;
  s.family = KernelFamily::Tabulated;
  s.grid = g;
  s.values.resize(static_cast<size_t>(g.size()));
  Field probe(g);
  for_each_index(g, [&](const int*, std::int64_t flat) {
    double r2 = probe.point_at(flat).norm2();
    s.values[static_cast<size_t>(flat)] = std::pow(1.0 + r2, -2.4);
  });
  try {
    make_kernel(s);
    FAIL("expected MomentDiverges");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MomentDiverges);
  }
}

TEST_CASE("kfold: n=1 identity, gaussian variance adds, nonnegativity") {
  auto k = make_kernel(gaussian_spec(3, 1.0));
  GridSpec g{3, 8.0, 64};

  Field a1 = kfold_density(k, 1, g);
  Field ref = k.sample_on_grid(g);
  double dev = 0;
  for (size_t i = 0; i < a1.values.size(); ++i)
    dev = std::max(dev, std::fabs(a1.values[i] - ref.values[i]));
  CHECK(dev < 1e-10);

  double escaped = 0;
  Field a4 = kfold_density(k, 4, g, 0.05, &escaped);
  CHECK(escaped < 0.02);
  CHECK(a4.mass() == doctest::Approx(1.0).epsilon(1e-12));
  // closed form: gaussian with per-coordinate variance 4; compare away from
  // the box edge where torus images (~a_4 at distance 2L-|x|) dominate
  double dev4 = 0;
  for_each_index(g, [&](const int*, std::int64_t flat) {
    Point x = a4.point_at(flat);
    if (x.norm() > 6.0) return;
    double expect = std::pow(8.0 * M_PI, -1.5) * std::exp(-x.norm2() / 8.0);
    dev4 = std::max(dev4, std::fabs(a4.at(flat) - expect));
  });
  CHECK(dev4 < 1e-7);
  CHECK(a4.min_value() > -1e-10);

  // exp_tail kfold stays nonnegative up to round-off
  auto ke = make_kernel(exp_tail_spec(3, 1.0));
  GridSpec ge{3, 16.0, 64};
  Field e3 = kfold_density(ke, 3, ge);
  CHECK(e3.min_value() > -1e-10);
}

TEST_CASE("kfold semigroup: m+n equals lattice convolution of m and n") {
  auto k = make_kernel(gaussian_spec(3, 1.0));
  GridSpec g{3, 8.0, 32};
  Field a2 = kfold_density(k, 2, g);
  Field a3 = kfold_density(k, 3, g);
  Field a5 = kfold_density(k, 5, g);
  // discrete periodic convolution of a2 and a3 via direct sum (small grid)
  const int n = g.points_per_axis;
  double dev = 0;
  Field conv(g);
  for_each_index(g, [&](const int* idx, std::int64_t flat) {
    double s = 0;
    for_each_index(g, [&](const int* jdx, std::int64_t jf) {
      int kk[kMaxDim];
      for (int a = 0; a < 3; ++a) {
        int t = idx[a] - jdx[a] + n / 2;  // centered difference, wrapped
        t = ((t % n) + n) % n;
        kk[a] = t;
      }
      s += a2.at(jf) * a3.at(conv.flat_index(kk));
    });
    conv.at(flat) = s * g.cell_volume();
    dev = std::max(dev, std::fabs(conv.at(flat) - a5.at(flat)));
  });
  CHECK(dev < 1e-8);
}

TEST_CASE("kfold grid too small raises") {
  auto k = make_kernel(gaussian_spec(3, 1.0));
  GridSpec g{3, 3.0, 16};
  CHECK_THROWS_AS(kfold_density(k, 64, g), Error);
}

TEST_CASE("sample_jump moments, determinism, chi-square") {
  const int N = 100000;

  SUBCASE("gaussian covariance within 5% and zero mean") {
    auto k = make_kernel(gaussian_spec(3, 1.0));
    Rng rng(derive_seed(42, 0));
    double mean[3] = {0, 0, 0};
    double cov[3][3] = {};
    for (int i = 0; i < N; ++i) {
      Point x = k.sample_jump(rng);
      for (int a = 0; a < 3; ++a) {
        mean[a] += x[a];
        for (int b = 0; b < 3; ++b) cov[a][b] += x[a] * x[b];
      }
    }
    for (int a = 0; a < 3; ++a) {
      mean[a] /= N;
      // 4 standard errors of the mean, sd = 1
      CHECK(std::fabs(mean[a]) < 4.0 / std::sqrt(static_cast<double>(N)));
      for (int b = 0; b < 3; ++b) {
        cov[a][b] /= N;
        double expect = (a == b) ? 1.0 : 0.0;
        CHECK(std::fabs(cov[a][b] - expect) < 0.05);
      }
    }
  }

  SUBCASE("exp_tail empirical second moment matches Sigma") {
    auto k = make_kernel(exp_tail_spec(3, 1.0));
    Rng rng(derive_seed(43, 0));
    double m2 = 0;
    for (int i = 0; i < N; ++i) m2 += k.sample_jump(rng).norm2();
    m2 /= N;
    CHECK(m2 == doctest::Approx(12.0).epsilon(0.05));  // E r^2 = d(d+1)/delta^2
  }

  SUBCASE("fixed seed reproduces the draw sequence") {
    auto k = make_kernel(exp_tail_spec(3, 1.0));
    Rng r1(12345), r2(12345);
    for (int i = 0; i < 100; ++i) {
      Point a = k.sample_jump(r1);
      Point b = k.sample_jump(r2);
      for (int c = 0; c < 3; ++c) CHECK(a[c] == b[c]);
    }
  }

  SUBCASE("chi-square goodness of fit on a coarse partition") {
    // 4x4x4 boxes over [-4,4]^3 plus an overflow cell; expected probabilities
    // by fine midpoint quadrature of the density over each box.
    auto k = make_kernel(gaussian_spec(3, 1.0));
    const int nb = 4;
    const double lo = -4.0, hi = 4.0, w = (hi - lo) / nb;
    std::vector<double> expectp(nb * nb * nb + 1, 0.0);
    const int sub = 12;
    for (int bx = 0; bx < nb; ++bx)
      for (int by = 0; by < nb; ++by)
        for (int bz = 0; bz < nb; ++bz) {
          double p = 0;
          for (int i = 0; i < sub; ++i)
            for (int j = 0; j < sub; ++j)
              for (int l = 0; l < sub; ++l) {
                Point x{lo + (bx + (i + 0.5) / sub) * w,
                        lo + (by + (j + 0.5) / sub) * w,
                        lo + (bz + (l + 0.5) / sub) * w};
                p += k.density(x);
              }
          expectp[static_cast<size_t>((bx * nb + by) * nb + bz)] =
              p * std::pow(w / sub, 3);
        }
    double covered = 0;
    for (int i = 0; i < nb * nb * nb; ++i) covered += expectp[static_cast<size_t>(i)];
    expectp.back() = 1.0 - covered;

    std::vector<long> counts(expectp.size(), 0);
    Rng rng(derive_seed(44, 0));
    for (int i = 0; i < N; ++i) {
      Point x = k.sample_jump(rng);
      bool in = true;
      int cell[3];
      for (int a = 0; a < 3; ++a) {
        double t = (x[a] - lo) / w;
        if (t < 0 || t >= nb) { in = false; break; }
        cell[a] = static_cast<int>(t);
      }
      if (in)
        ++counts[static_cast<size_t>((cell[0] * nb + cell[1]) * nb + cell[2])];
      else
        ++counts.back();
    }
    double chi2 = 0;
    int df = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
      double e = expectp[i] * N;
      if (e < 5.0) continue;  // merge-or-skip rule for sparse cells
      chi2 += (counts[i] - e) * (counts[i] - e) / e;
      ++df;
    }
    --df;
    double crit = chi2_quantile(df, 0.999);
    CHECK(chi2 < crit);
  }
}

TEST_CASE("tabulated sampling matches the table distribution") {
  GridSpec g{3, 5.0, 32};
  auto kt = make_kernel(tabulated_gaussian(3, 1.0, g));
  Rng rng(derive_seed(45, 0));
  const int N = 50000;
  double m2 = 0;
  Point mean(3);
  for (int i = 0; i < N; ++i) {
    Point x = kt.sample_jump(rng);
    mean += x;
    m2 += x.norm2();
  }
  m2 /= N;
  for (int a = 0; a < 3; ++a) CHECK(std::fabs(mean[a] / N) < 0.03);
  // cell jitter adds h^2/12 per coordinate
  double h = g.spacing();
  CHECK(m2 == doctest::Approx(3.0 * (1.0 + h * h / 12.0)).epsilon(0.05));
}

TEST_CASE("symbol integrability diagnostics") {
  auto kg = make_kernel(gaussian_spec(3, 1.0));
  CHECK(kg.diagnostics().symbol_l1 ==
        doctest::Approx(std::pow(2.0 * M_PI, 1.5)).epsilon(1e-12));
  auto ke = make_kernel(exp_tail_spec(3, 1.0));
  // oracle: 4 pi int r^2 (1+r^2)^{-2} dr = 4 pi * pi/4 = pi^2
  CHECK(ke.diagnostics().symbol_l1 == doctest::Approx(M_PI * M_PI).epsilon(1e-3));
  CHECK(ke.diagnostics().symbol_l1_tail_fraction < 0.01);
}
