#pragma once

namespace greenpot {

// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a),
// a > 0, x >= 0. Series for x < a + 1, continued fraction otherwise.
double gamma_p(double a, double x);

// Unregularized lower incomplete gamma gamma(a, x).
double gamma_lower(double a, double x);

// Upper-tail chi-square quantile via Wilson-Hilferty; good to ~1e-3
// relative for df >= 5, which is all the goodness-of-fit tests need.
double chi2_quantile(double df, double p);

// Scaled complementary error function exp(x^2) erfc(x), x >= 0.
double erfcx(double x);

}  // namespace greenpot
