#include "svtp/special.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "svtp/errors.hpp"

namespace svtp::special {

namespace {

// Asymptotic series are accurate to below 1e-16 once the argument is >= 10.
constexpr double kAsymptoticThreshold = 10.0;

void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(fn) + ": argument must be finite and > 0, got " +
                      std::to_string(x));
  }
}

double log_gamma_asymptotic(double x) {
  // Stirling series with Bernoulli coefficients B_2k / (2k (2k - 1)).
  constexpr double c[] = {1.0 / 12.0,    -1.0 / 360.0,     1.0 / 1260.0,  -1.0 / 1680.0,
                          1.0 / 1188.0,  -691.0 / 360360.0, 1.0 / 156.0,  -3617.0 / 122400.0};
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double power = inv;
  for (double coef : c) {
    series += coef * power;
    power *= inv2;
  }
  // (x - 1/2) ln x - x carries most of the magnitude, so it is formed without
  // intermediate rounding: ln x = k ln2 + ln f with f in [sqrt(1/2), sqrt(2)),
  // products split exactly with fma, and the pieces summed with compensation.
  int k = 0;
  double f = 2.0 * std::frexp(x, &k);
  --k;
  if (f > std::numbers::sqrt2) {
    f *= 0.5;
    ++k;
  }
  constexpr double kLn2Hi = 6.93147180369123816490e-01;  // trailing bits zero, k * hi exact
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  const double a = x - 0.5;
  const double log_f = std::log(f);
  const double p1 = a * (k * kLn2Hi);
  const double e1 = std::fma(a, k * kLn2Hi, -p1);
  const double p2 = a * log_f;
  const double e2 = std::fma(a, log_f, -p2);
  double sum = 0.0, comp = 0.0;
  for (double term : {p1, p2, -x, e1 + e2 + a * (k * kLn2Lo),
                      0.5 * std::log(2.0 * std::numbers::pi) + series}) {
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

double digamma_asymptotic(double x) {
  constexpr double c[] = {1.0 / 12.0,  -1.0 / 120.0,     1.0 / 252.0, -1.0 / 240.0,
                          1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0,  -3617.0 / 8160.0};
  const double inv2 = 1.0 / (x * x);
  double series = 0.0;
  double power = inv2;
  for (double coef : c) {
    series += coef * power;
    power *= inv2;
  }
  return std::log(x) - 0.5 / x - series;
}

double trigamma_asymptotic(double x) {
  constexpr double c[] = {1.0 / 6.0,  -1.0 / 30.0,     1.0 / 42.0, -1.0 / 30.0,
                          5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0};
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double power = inv2 * inv;
  for (double coef : c) {
    series += coef * power;
    power *= inv2;
  }
  return inv + 0.5 * inv2 + series;
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  if (x >= kAsymptoticThreshold) return log_gamma_asymptotic(x);
  // Gamma(x) = Gamma(x + n) / (x (x + 1) ... (x + n - 1))
  double product = 1.0;
  double shifted = x;
  while (shifted < kAsymptoticThreshold) {
    product *= shifted;
    shifted += 1.0;
  }
  return log_gamma_asymptotic(shifted) - std::log(product);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double correction = 0.0;
  while (x < kAsymptoticThreshold) {
    correction -= 1.0 / x;
    x += 1.0;
  }
  return digamma_asymptotic(x) + correction;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double correction = 0.0;
  while (x < kAsymptoticThreshold) {
    correction += 1.0 / (x * x);
    x += 1.0;
  }
  return trigamma_asymptotic(x) + correction;
}

double log_beta(double a, double b) {
  require_positive(a, "log_beta");
  require_positive(b, "log_beta");
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double wallis(unsigned p) {
  const double half_p = 0.5 * static_cast<double>(p);
  return 0.5 * std::sqrt(std::numbers::pi) *
         std::exp(log_gamma(half_p + 0.5) - log_gamma(half_p + 1.0));
}

}  // namespace svtp::special
