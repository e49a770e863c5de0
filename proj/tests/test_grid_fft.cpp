#include "doctest.h"

#include <cmath>
#include <complex>

#include "greenpot/fft.hpp"
#include "greenpot/grid.hpp"

using namespace greenpot;

namespace {

// Direct O(N^2) centered DFT, the oracle for the FFT wrapper.
std::vector<std::complex<double>> direct_forward(const Field& f) {
  const GridSpec& g = f.grid;
  const int n = g.points_per_axis;
  const double dk = 2.0 * M_PI / (n * g.spacing());
  std::vector<std::complex<double>> out(static_cast<size_t>(g.size()));
  for_each_index(g, [&](const int* jdx, std::int64_t jf) {
    std::complex<double> acc = 0;
    for_each_index(g, [&](const int* idx, std::int64_t fi) {
      double phase = 0;
      for (int a = 0; a < g.dim; ++a)
        phase += (jdx[a] - n / 2) * dk * g.coord(idx[a]);
      acc += f.at(fi) * std::exp(std::complex<double>(0, -phase));
    });
    out[static_cast<size_t>(jf)] = acc * g.cell_volume();
  });
  return out;
}

}  // namespace

TEST_CASE("centered fft matches direct DFT on a small 3d grid") {
  GridSpec g{3, 2.0, 8};
  Field f(g);
  // arbitrary but deterministic data
  for (size_t i = 0; i < f.values.size(); ++i)
    f.values[i] = std::sin(0.13 * static_cast<double>(i)) + 0.01 * static_cast<double>(i % 7);

  CenteredFft fft(g);
  auto buf = fft.to_complex(f);
  fft.forward(buf);
  auto oracle = direct_forward(f);
  double err = 0;
  for (size_t i = 0; i < buf.size(); ++i) err = std::max(err, std::abs(buf[i] - oracle[i]));
  CHECK(err < 1e-10);

  // Round trip.
  fft.backward(buf);
  double rt = 0;
  for (size_t i = 0; i < buf.size(); ++i)
    rt = std::max(rt, std::abs(buf[i] - std::complex<double>(f.values[i])));
  CHECK(rt < 1e-12);
}

TEST_CASE("gaussian transform pair") {
  // exp(-|x|^2/2) <-> (2 pi)^{3/2} exp(-|k|^2/2) under the physical
  // normalization; box wide enough that truncation is negligible.
  GridSpec g{3, 10.0, 64};
  Field f(g);
  for_each_index(g, [&](const int*, std::int64_t flat) {
    f.at(flat) = std::exp(-0.5 * f.point_at(flat).norm2());
  });
  CenteredFft fft(g);
  auto buf = fft.to_complex(f);
  fft.forward(buf);
  Field probe(g);
  double err = 0;
  for_each_index(g, [&](const int*, std::int64_t flat) {
    Point x = probe.point_at(flat);  // same index layout in k space
    double k2 = 0;
    for (int a = 0; a < 3; ++a) {
      double ka = x[a] / g.spacing() * fft.dk();
      k2 += ka * ka;
    }
    double expect = std::pow(2.0 * M_PI, 1.5) * std::exp(-0.5 * k2);
    err = std::max(err, std::abs(buf[static_cast<size_t>(flat)] - expect));
  });
  CHECK(err < 1e-9);
}

TEST_CASE("field csv round trip and interpolation") {
  GridSpec g{3, 1.0, 8};
  Field f(g);
  for_each_index(g, [&](const int*, std::int64_t flat) {
    Point x = f.point_at(flat);
    f.at(flat) = 1.0 + x[0] + 2.0 * x[1] * x[2];
  });
  write_field_csv(f, "test_field.csv");
  Field back = read_field_csv(g, "test_field.csv");
  for (size_t i = 0; i < f.values.size(); ++i)
    CHECK(back.values[i] == doctest::Approx(f.values[i]).epsilon(1e-14));

  // multilinear interpolation reproduces a multilinear function exactly
  Point p{0.1, -0.33, 0.4};
  CHECK(f.interpolate(p) == doctest::Approx(1.0 + p[0] + 2.0 * p[1] * p[2]).epsilon(1e-12));
  // outside the hull -> 0
  CHECK(f.interpolate(Point{5.0, 0.0, 0.0}) == 0.0);
}

TEST_CASE("mass equals cell volume times sum") {
  GridSpec g{3, 2.0, 8};
  Field f(g);
  for (auto& v : f.values) v = 2.0;
  CHECK(f.mass() == doctest::Approx(2.0 * std::pow(4.0, 3)).epsilon(1e-12));
}
