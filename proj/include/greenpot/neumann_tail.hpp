#pragma once

#include <vector>

#include "greenpot/kernels.hpp"

namespace greenpot {

// Weight sequences applied to the convolution powers a_n inside Neumann-type
// sums. `param` is lambda for Geometric, the horizon T for TimeIntegral and
// its complement, and the time t for PoissonPmf.
struct TailWeights {
  enum class Kind {
    Ones,                    // w_n = 1                       (G_0)
    Geometric,               // w_n = (1+lambda)^-n           (G_lambda)
    TimeIntegral,            // w_n = P(n+1, T)               (int_0^T p_reg dt)
    TimeIntegralComplement,  // w_n = 1 - P(n+1, T)           (Poisson tail mass)
    PoissonPmf,              // w_n = e^-t t^n / n!           (p_reg(t, .))
  };
  Kind kind = Kind::Ones;
  double param = 0;
};

// Analytic completion of sum_{n >= n_start} w_n a_n(x) by the local limit:
// a_n is replaced by the Gaussian g_n = N(0, n Sigma) plus, for isotropic
// non-Gaussian kernels, the first correction n*beta*Lap^2 g_n derived from
// log a_hat(k) = -sigma^2 k^2/2 + beta k^4 + O(k^6). Exact for the Gaussian
// family. The sum collapses to a radial function of rho = |Sigma^{-1/2} x|
// and is tabulated once, then interpolated per point.
class NeumannTail {
 public:
  NeumannTail(const JumpKernel& kernel, TailWeights w, int n_start, double rho_max);

  double eval(const Point& x) const;
  double eval_rho(double rho) const;

  // sum of the weights alone (the total mass of the modeled tail, since
  // each g_n has unit mass); +inf for Ones and TimeIntegralComplement.
  double weight_mass() const { return weight_mass_; }

  // Brute-force reference at one rho, summing terms directly to n_max;
  // test hook, intentionally slow.
  double brute_rho(double rho, long n_max) const;

 private:
  double term_bracket(double rho, double t) const;  // t^{-d/2} e^{-rho^2/2t} [1+corr]
  double weight_at(double t) const;                 // continuous extension of w_n

  int d_;
  TailWeights w_;
  int n_start_;
  double mu_ = 0;  // log(1+lambda) for Geometric
  double pref_;    // (2 pi)^{-d/2} det(Sigma)^{-1/2}
  double b4_ = 0;  // beta / sigma^4, isotropic correction coefficient
  SymMatrix inv_sqrt_;
  long explicit_terms_ = 0;
  double weight_mass_ = 0;

  double rho_max_, drho_;
  std::vector<double> table_;
  std::vector<double> wn_;  // per-n weights for the explicit part
};

}  // namespace greenpot
