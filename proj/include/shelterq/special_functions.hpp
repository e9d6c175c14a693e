#pragma once

namespace shelterq {

// Regularized lower incomplete gamma function P(x, y) = gamma(x, y) / Gamma(x), in [0, 1].
// Series representation for y < x + 1, continued fraction for the complement otherwise
// (both standard; see Numerical Recipes ch. 6). Requires x > 0, y >= 0.
double regularized_lower_gamma(double x, double y);

// Lower incomplete gamma function gamma(x, y) = integral_0^y t^(x-1) e^(-t) dt.
// Computed as P(x, y) rescaled by Gamma(x) so large x stays accurate; mirrors
// std::tgamma overflow behaviour (returns +infinity when the value exceeds double range).
double lower_incomplete_gamma(double x, double y);

// A(x, y) = (x e^y / y^x) * gamma(x, y), evaluated through its ascending series
//   A = 1 + sum_{n>=1} y^n / ((x+1)(x+2)...(x+n)),
// which is stable for all x, y > 0 (every term positive, no cancellation).
double a_func(double x, double y);

// The series tail A(x, y) - 1 = sum_{n>=1} y^n / prod_{i=1..n}(x+i), computed directly.
// Exposed because downstream probability formulas need A - 1 without cancellation.
double a_func_minus_one(double x, double y);

// Standard normal density and cumulative distribution.
double normal_pdf(double x);
double normal_cdf(double x);

// Normal hazard rate h(x) = phi(x) / (1 - Phi(x)).
// Direct ratio for x <= 5; for x > 5 the tail probability underflows long before the
// hazard stops being finite, so a scaled complementary error function evaluated by
// Laplace's continued fraction is used instead.
double normal_hazard(double x);

}  // namespace shelterq
