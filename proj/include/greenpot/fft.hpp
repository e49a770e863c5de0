#pragma once

#include <complex>
#include <vector>

#include "greenpot/grid.hpp"

namespace greenpot {

// Discrete Fourier transforms on origin-centered lattices with physical
// normalization:
//
//   forward:  F(k_j) = h^d * sum_x f(x_i) exp(-i k_j . x_i)   (trapezoid of
//             the continuum transform), with k_j = (j - n/2) * 2*pi/(n*h)
//   backward: f(x_i) = (2*pi)^{-d} * dk^d * sum_j F(k_j) exp(+i k_j . x_i)
//
// Both lattices are centered, so index i maps to x = (i - n/2) h and the
// same index convention holds in frequency. forward followed by backward is
// the identity. The centering phases reduce to sign flips because n is even
// (checkerboard trick), so everything stays real-friendly.
//
// The dual lattice spacing is dk = pi / half_extent and the frequency box is
// |k_a| <= pi / h.
class CenteredFft {
 public:
  explicit CenteredFft(const GridSpec& grid);
  ~CenteredFft();

  CenteredFft(const CenteredFft&) = delete;
  CenteredFft& operator=(const CenteredFft&) = delete;

  const GridSpec& grid() const { return grid_; }
  double dk() const { return 2.0 * M_PI / (grid_.points_per_axis * grid_.spacing()); }

  // Frequency coordinate of index j on any axis.
  double freq(int j) const { return (j - grid_.points_per_axis / 2) * dk(); }

  // In-place transforms on a buffer of grid.size() complex values stored in
  // the same row-major centered order as Field.
  void forward(std::vector<std::complex<double>>& buf) const;
  void backward(std::vector<std::complex<double>>& buf) const;

  std::vector<std::complex<double>> to_complex(const Field& f) const;
  // Real part into a Field; max |imag| returned via *imag_max if non-null.
  Field to_field(const std::vector<std::complex<double>>& buf, double* imag_max = nullptr) const;

 private:
  void apply_checkerboard(std::vector<std::complex<double>>& buf, double extra_scale) const;

  GridSpec grid_;
  void* plan_fwd_ = nullptr;  // fftw_plan
  void* plan_bwd_ = nullptr;
};

}  // namespace greenpot
