#include "greenpot/neumann_tail.hpp"

#include <cmath>
#include <limits>

#include "greenpot/errors.hpp"
#include "greenpot/parallel.hpp"
#include "greenpot/special.hpp"

namespace greenpot {

namespace {
constexpr double kTwoPi = 6.28318530717958647692;
constexpr int kTableSize = 4096;
constexpr long kExplicitBlock = 4000;  // explicit terms before the integral remainder
}  // namespace

double NeumannTail::weight_at(double t) const {
  switch (w_.kind) {
    case TailWeights::Kind::Ones:
      return 1.0;
    case TailWeights::Kind::Geometric:
      return std::exp(-mu_ * t);
    case TailWeights::Kind::TimeIntegral:
      return gamma_p(t + 1.0, w_.param);
    case TailWeights::Kind::TimeIntegralComplement:
      return 1.0 - gamma_p(t + 1.0, w_.param);
    case TailWeights::Kind::PoissonPmf: {
      double lg = t * std::log(w_.param) - w_.param - std::lgamma(t + 1.0);
      return lg < -745.0 ? 0.0 : std::exp(lg);
    }
  }
  return 0;
}

double NeumannTail::term_bracket(double rho, double t) const {
  double g = std::pow(t, -0.5 * d_) * std::exp(-0.5 * rho * rho / t);
  if (b4_ == 0.0) return g;
  double r2 = rho * rho;
  double corr = b4_ * (r2 * r2 / (t * t * t) - (2.0 * d_ + 4.0) * r2 / (t * t) +
                       d_ * (d_ + 2.0) / t);
  return g * (1.0 + corr);
}

NeumannTail::NeumannTail(const JumpKernel& kernel, TailWeights w, int n_start, double rho_max)
    : d_(kernel.dim()), w_(w), n_start_(n_start) {
  if (n_start < 1) fail(ErrorCode::Internal, "tail n_start must be >= 1");
  if (w.kind == TailWeights::Kind::Geometric) {
    if (w.param < 0) fail(ErrorCode::NonpositiveLambda, "lambda must be >= 0");
    mu_ = std::log1p(w.param);
  }

  pref_ = std::pow(kTwoPi, -0.5 * d_) / std::sqrt(kernel.sigma_det());
  inv_sqrt_ = kernel.sigma_inv_sqrt();
  if (kernel.isotropic() && kernel.family() != KernelFamily::Gaussian) {
    double s2 = kernel.second_moment()(0, 0);
    b4_ = kernel.edgeworth_beta() / (s2 * s2);
  }

  // Explicit horizon: past any weight concentration and deep enough that the
  // midpoint-rule switch to the integral is accurate.
  long m_end = n_start_ + kExplicitBlock;
  if (w.kind == TailWeights::Kind::TimeIntegral ||
      w.kind == TailWeights::Kind::TimeIntegralComplement ||
      w.kind == TailWeights::Kind::PoissonPmf) {
    long past_param = static_cast<long>(w.param + 12.0 * std::sqrt(w.param + 1.0) + 50.0);
    m_end = std::max(m_end, past_param);
  }
  explicit_terms_ = m_end - n_start_ + 1;

  wn_.resize(static_cast<size_t>(explicit_terms_));
  for (long i = 0; i < explicit_terms_; ++i)
    wn_[static_cast<size_t>(i)] = weight_at(static_cast<double>(n_start_ + i));

  // Weight mass: explicit part plus the analytic/integral remainder.
  weight_mass_ = 0;
  for (double v : wn_) weight_mass_ += v;
  switch (w_.kind) {
    case TailWeights::Kind::Ones:
    case TailWeights::Kind::TimeIntegralComplement:
      weight_mass_ = std::numeric_limits<double>::infinity();
      break;
    case TailWeights::Kind::Geometric:
      weight_mass_ += std::exp(-mu_ * (m_end + 1)) / (-std::expm1(-mu_));
      break;
    default:
      break;  // remaining weights are below 1e-25 by construction of m_end
  }

  rho_max_ = rho_max + 1.0;
  drho_ = rho_max_ / (kTableSize - 1);
  table_.assign(kTableSize, 0.0);

  const double m_cut = static_cast<double>(m_end) + 0.5;
  const bool skip_integral = weight_at(m_cut) < 1e-25;

  parallel_for_range(kTableSize, default_threads(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t j = lo; j < hi; ++j) {
      const double rho = drho_ * static_cast<double>(j);
      double s = 0;
      for (long i = explicit_terms_ - 1; i >= 0; --i) {  // ascending magnitude
        double wgt = wn_[static_cast<size_t>(i)];
        if (wgt == 0) continue;
        s += wgt * term_bracket(rho, static_cast<double>(n_start_ + i));
      }
      if (!skip_integral) {
        // Remainder int_{m_cut}^inf w(t) t^{-d/2} e^{-rho^2/2t} [..] dt via
        // Simpson on t = m_cut e^u; the log substitution keeps the slowly
        // decaying mu = 0 case well resolved.
        const double du = 0.04;
        const int nu = 1700;
        double acc = 0;
        for (int iu = 0; iu <= nu; ++iu) {
          double u = du * iu;
          double t = m_cut * std::exp(u);
          double f = weight_at(t) * term_bracket(rho, t) * t;  // dt = t du
          double wq = (iu == 0 || iu == nu) ? 1.0 : (iu % 2 ? 4.0 : 2.0);
          acc += wq * f;
        }
        s += acc * du / 3.0;
      }
      table_[static_cast<size_t>(j)] = pref_ * s;
    }
  });
}

double NeumannTail::eval_rho(double rho) const {
  if (rho < 0) rho = -rho;
  if (rho >= rho_max_) rho = rho_max_ - 1e-12;
  double t = rho / drho_;
  auto j = static_cast<long>(t);
  double f = t - static_cast<double>(j);
  // 4-point Lagrange; mirror below zero (the function is even in rho).
  auto pick = [&](long idx) {
    if (idx < 0) idx = -idx;
    if (idx >= kTableSize) idx = kTableSize - 1;
    return table_[static_cast<size_t>(idx)];
  };
  double ym1 = pick(j - 1), y0 = pick(j), y1 = pick(j + 1), y2 = pick(j + 2);
  double a = f * (f - 1) * (f - 2) / -6.0;
  double b = (f + 1) * (f - 1) * (f - 2) / 2.0;
  double c = (f + 1) * f * (f - 2) / -2.0;
  double dd = (f + 1) * f * (f - 1) / 6.0;
  return a * ym1 + b * y0 + c * y1 + dd * y2;
}

double NeumannTail::eval(const Point& x) const {
  Point y = inv_sqrt_.apply(x);
  return eval_rho(y.norm());
}

double NeumannTail::brute_rho(double rho, long n_max) const {
  double s = 0;
  for (long n = n_max; n >= n_start_; --n)
    s += weight_at(static_cast<double>(n)) * term_bracket(rho, static_cast<double>(n));
  return pref_ * s;
}

}  // namespace greenpot
