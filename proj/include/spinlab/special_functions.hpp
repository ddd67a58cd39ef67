// Small special-function kit: binomials, a direct-series 2F1, complex
// spherical harmonics, and the regularized incomplete gamma (for chi-square
// tail probabilities). Everything here is desk-scale: modest arguments,
// double precision.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "spinlab/core.hpp"

namespace spinlab {

inline double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// sqrt(binomial(n, k)) for integer-valued arguments carried as doubles.
// Direct product up to n = 30, log space above (overflow guard for large j).
inline double sqrt_binomial(double n, double k) {
  const long ni = std::lround(n);
  const long ki = std::lround(k);
  if (ni <= 30) {
    double b = 1.0;
    for (long i = 1; i <= ki; ++i) b *= static_cast<double>(ni - ki + i) / i;
    return std::sqrt(b);
  }
  return std::exp(0.5 * log_binomial(n, k));
}

// Gauss hypergeometric 2F1(a, b; c, z) by direct power series, term-ratio
// stopping at 1e-16 relative. Valid for |z| < 1.
inline double hyp2f1_series(double a, double b, double c, double z) {
  if (!(std::abs(z) < 1.0))
    throw ConvergenceError("2F1 series requires |z| < 1, got z = " + std::to_string(z));
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < 100000; ++n) {
    term *= (a + n) * (b + n) / ((c + n) * (1.0 + n)) * z;
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum) && n > 2) return sum;
  }
  throw ConvergenceError("2F1 series did not converge");
}

// Associated Legendre P_l^m with Condon-Shortley phase, m >= 0.
inline double assoc_legendre_cs(int l, int m, double x) {
  const double base = std::assoc_legendre(static_cast<unsigned>(l),
                                          static_cast<unsigned>(m), x);
  return (m % 2 != 0) ? -base : base;
}

// Complex spherical harmonic Y_l^m(z, phi), standard normalization.
inline cx spherical_harmonic(int l, int m, double z, double phi) {
  if (std::abs(m) > l) throw std::invalid_argument("|m| must be <= l");
  const int ma = std::abs(m);
  const double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) *
                                std::exp(std::lgamma(l - ma + 1.0) - std::lgamma(l + ma + 1.0)));
  const double plm = assoc_legendre_cs(l, ma, z);
  cx val = norm * plm * std::polar(1.0, ma * phi);
  if (m < 0) {
    val = std::conj(val);
    if (ma % 2 != 0) val = -val;
  }
  return val;
}

namespace detail {

// Regularized lower incomplete gamma P(a, x) by series (x < a+1).
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw ConvergenceError("incomplete gamma series did not converge");
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction (x >= a+1).
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw ConvergenceError("incomplete gamma continued fraction did not converge");
}

}  // namespace detail

inline double regularized_gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q domain");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

// Upper-tail p-value of a chi-squared statistic with `dof` degrees of freedom.
inline double chi_squared_pvalue(double statistic, double dof) {
  return regularized_gamma_q(0.5 * dof, 0.5 * statistic);
}

}  // namespace spinlab
