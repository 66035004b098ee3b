#pragma once

#include <cstdint>

namespace rangekit {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

/// Exponential integral E1(x) = int_x^inf e^-t / t dt, x > 0.
/// Series for x <= 1, modified Lentz continued fraction above.
/// Absolute accuracy ~1e-15 relative over (0, 700].
double expint_e1(double x);

/// Modified Bessel function K0(x), x > 0.
/// Power series around 0 for x <= 2, trapezoidal evaluation of
/// int_0^inf exp(-x cosh t) dt for larger x (geometric convergence in
/// the step size for this analytic integrand).
double bessel_k0(double x);

/// Regularized lower incomplete gamma P(a,x); Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

/// Exact binomial coefficient for small arguments (n <= 62).
std::uint64_t binomial(unsigned n, unsigned k);

}  // namespace rangekit
