#include "greenpot/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace greenpot {

namespace {
// FFTW planning is not thread-safe; execution is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

CenteredFft::CenteredFft(const GridSpec& grid) : grid_(grid) {
  grid_.validate();
  const int d = grid_.dim;
  int dims[kMaxDim];
  for (int a = 0; a < d; ++a) dims[a] = grid_.points_per_axis;

  std::vector<std::complex<double>> scratch(static_cast<size_t>(grid_.size()));
  auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());

  std::lock_guard<std::mutex> lock(plan_mutex());
  plan_fwd_ = fftw_plan_dft(d, dims, ptr, ptr, FFTW_FORWARD, FFTW_ESTIMATE);
  plan_bwd_ = fftw_plan_dft(d, dims, ptr, ptr, FFTW_BACKWARD, FFTW_ESTIMATE);
}

CenteredFft::~CenteredFft() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

void CenteredFft::apply_checkerboard(std::vector<std::complex<double>>& buf,
                                     double extra_scale) const {
  // Multiplies element (i_1..i_d) by extra_scale * (-1)^(i_1+...+i_d),
  // processed one contiguous last-axis row at a time.
  const int n = grid_.points_per_axis;
  const int d = grid_.dim;
  const std::int64_t rows = grid_.size() / n;
  std::vector<int> prefix(static_cast<size_t>(d - 1), 0);
  std::int64_t off = 0;
  for (std::int64_t r = 0; r < rows; ++r, off += n) {
    int psum = 0;
    for (int a = 0; a < d - 1; ++a) psum += prefix[static_cast<size_t>(a)];
    double sign = (psum & 1) ? -extra_scale : extra_scale;
    for (int i = 0; i < n; ++i) {
      buf[static_cast<size_t>(off + i)] *= sign;
      sign = -sign;
    }
    for (int a = d - 2; a >= 0; --a) {
      if (++prefix[static_cast<size_t>(a)] < n) break;
      prefix[static_cast<size_t>(a)] = 0;
    }
  }
}

void CenteredFft::forward(std::vector<std::complex<double>>& buf) const {
  const int d = grid_.dim;
  const int n = grid_.points_per_axis;
  const double h = grid_.spacing();

  double scale = std::pow(h, d);
  if ((d * (n / 2)) % 2 != 0) scale = -scale;  // prod_a (-1)^(n_a/2)

  apply_checkerboard(buf, 1.0);
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_),
                   reinterpret_cast<fftw_complex*>(buf.data()),
                   reinterpret_cast<fftw_complex*>(buf.data()));
  apply_checkerboard(buf, scale);
}

void CenteredFft::backward(std::vector<std::complex<double>>& buf) const {
  const int d = grid_.dim;
  const int n = grid_.points_per_axis;
  const double h = grid_.spacing();

  double scale = std::pow(1.0 / (n * h), d);
  if ((d * (n / 2)) % 2 != 0) scale = -scale;

  apply_checkerboard(buf, 1.0);
  fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_),
                   reinterpret_cast<fftw_complex*>(buf.data()),
                   reinterpret_cast<fftw_complex*>(buf.data()));
  apply_checkerboard(buf, scale);
}

std::vector<std::complex<double>> CenteredFft::to_complex(const Field& f) const {
  std::vector<std::complex<double>> buf(f.values.size());
  for (size_t i = 0; i < f.values.size(); ++i) buf[i] = f.values[i];
  return buf;
}

Field CenteredFft::to_field(const std::vector<std::complex<double>>& buf, double* imag_max) const {
  Field f(grid_);
  double im = 0;
  for (size_t i = 0; i < buf.size(); ++i) {
    f.values[i] = buf[i].real();
    im = std::max(im, std::fabs(buf[i].imag()));
  }
  if (imag_max) *imag_max = im;
  return f;
}

}  // namespace greenpot
