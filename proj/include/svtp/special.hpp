#pragma once

// Scalar special functions on the positive real axis.

namespace svtp::special {

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

/// Psi(x) = d/dx ln Gamma(x) for x > 0.
double digamma(double x);

/// Psi'(x) for x > 0.
double trigamma(double x);

/// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).
double log_beta(double a, double b);

/// Integral of sin^p over [0, pi/2] evaluated through the Gamma-ratio identity.
double wallis(unsigned p);

}  // namespace svtp::special
