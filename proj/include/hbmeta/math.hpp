#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "hbmeta/errors.hpp"

// Scalar special functions shared by the distribution kernels, the model
// gradient, and the classical estimators. Everything here is pure and
// reentrant.

namespace hbmeta::math {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLog2Pi = 1.83787706640934548356;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// log(1 + exp(x)) without overflow.
inline double log1p_exp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double log_normal_pdf_std(double z) { return -0.5 * z * z - kHalfLog2Pi; }

/// Standard normal CDF. Absolute error well below 1e-15 (erfc based).
inline double ndtr(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

/// log of the standard normal CDF, stable over the whole real line.
inline double log_ndtr(double z) {
  if (z >= 6.0) {
    return std::log1p(-ndtr(-z));
  }
  if (z >= -14.0) {
    return std::log(0.5 * std::erfc(-z / kSqrt2));
  }
  // Asymptotic lower tail: Phi(z) = phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - ...)
  double u = 1.0 / (z * z);
  double s = 1.0 - u * (1.0 - 3.0 * u * (1.0 - 5.0 * u * (1.0 - 7.0 * u * (1.0 - 9.0 * u))));
  return log_normal_pdf_std(z) - std::log(-z) + std::log(s);
}

namespace detail {

/// Wichura's PPND16 rational approximation to the normal quantile.
inline double ppnd16(double p) {
  double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) *
                    r +
                4.5921953931549871457e+4) *
                   r +
               1.3731693765509461125e+4) *
                  r +
              1.9715909503065514427e+3) *
                 r +
             1.3314166789178437745e+2) *
                r +
            3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) *
                    r +
                2.1213794301586595867e+4) *
                   r +
               5.3941960214247511077e+3) *
                  r +
              6.8718700749205790830e+2) *
                 r +
             4.2313330701600911252e+1) *
                r +
            1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) *
                 r +
             1.27045825245236838258e+0) *
                r +
            3.64784832476320460504e+0) *
               r +
           5.76949722146069140550e+0) *
              r +
          4.63033784615654529590e+0) *
             r +
         1.42343711074968357734e+0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) *
                 r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e+0) *
              r +
          2.05319162663775882187e+0) *
             r +
         1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) *
                 r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e+0) *
              r +
          5.46378491116411436990e+0) *
             r +
         6.65790464350110377720e+0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) *
                 r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
  }
  return (q < 0.0) ? -x : x;
}

}  // namespace detail

/// Standard normal quantile, rational approximation plus one Newton polish.
/// Absolute error below 1e-13 on (0,1).
inline double ndtr_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("ndtr_inverse: p must be in (0,1)");
  double x = detail::ppnd16(p);
  if (std::fabs(x) < 37.0) {
    // Stable CDF residual: for p > 1/2 work with the upper tail.
    double e = (p <= 0.5) ? (ndtr(x) - p) : ((1.0 - p) - ndtr(-x));
    double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    if (pdf > 0.0) x -= e / pdf;
  }
  return x;
}

/// Normal quantile from a log probability; usable far beyond double
/// underflow of the probability itself.
inline double ndtr_inverse_from_log(double logp) {
  if (!(logp < 0.0)) {
    if (logp == 0.0) throw DomainError("ndtr_inverse_from_log: log p must be < 0");
    throw DomainError("ndtr_inverse_from_log: log p must be negative");
  }
  if (logp > -690.0) {
    return ndtr_inverse(std::exp(logp));
  }
  // Initial guess from the tail asymptotic -x^2/2 - log(-x) - log sqrt(2pi).
  double t = -2.0 * (logp + kHalfLog2Pi);
  for (int i = 0; i < 3; ++i) {
    t = -2.0 * (logp + kHalfLog2Pi + 0.5 * std::log(t));
  }
  double x = -std::sqrt(t);
  for (int i = 0; i < 8; ++i) {
    double g = log_ndtr(x) - logp;
    double dg = std::exp(log_normal_pdf_std(x) - log_ndtr(x));
    double step = g / dg;
    x -= step;
    if (std::fabs(step) < 1e-13 * std::fabs(x)) break;
  }
  return x;
}

/// Upper-tail hazard phi(z) / (1 - Phi(z)), stable for any z.
inline double normal_hazard_upper(double z) {
  return std::exp(log_normal_pdf_std(z) - log_ndtr(-z));
}

/// Lower-tail ratio phi(z) / Phi(z), stable for any z.
inline double normal_hazard_lower(double z) {
  return std::exp(log_normal_pdf_std(z) - log_ndtr(z));
}

inline double digamma(double x) {
  if (!(x > 0.0)) throw DomainError("digamma: requires x > 0");
  double r = 0.0;
  while (x < 10.0) {
    r -= 1.0 / x;
    x += 1.0;
  }
  double f = 1.0 / (x * x);
  double tail = f * (1.0 / 12.0 -
                     f * (1.0 / 120.0 -
                          f * (1.0 / 252.0 - f * (1.0 / 240.0 - f * (1.0 / 132.0)))));
  return r + std::log(x) - 0.5 / x - tail;
}

inline double lgamma_pos(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

inline double lchoose(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) throw DomainError("lchoose: k outside [0,n]");
  return lgamma_pos(double(n) + 1.0) - lgamma_pos(double(k) + 1.0) -
         lgamma_pos(double(n - k) + 1.0);
}

namespace detail {

inline double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 1000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - lgamma_pos(a));
}

inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - lgamma_pos(a)) * h;
}

}  // namespace detail

/// Regularized upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw DomainError("gamma_q: requires a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

/// Upper-tail p-value of a chi-square statistic. df == 0 is the point mass
/// at zero (p = 1 iff the statistic is zero).
inline double chi_square_upper_tail(double q, int df) {
  if (q < 0.0 || df < 0) throw DomainError("chi_square_upper_tail: bad arguments");
  if (df == 0) return q == 0.0 ? 1.0 : 0.0;
  return gamma_q(0.5 * df, 0.5 * q);
}

/// Two-sided normal p-value of a z statistic.
inline double two_sided_p(double z) {
  double p = 2.0 * ndtr(-std::fabs(z));
  return p > 1.0 ? 1.0 : p;
}

}  // namespace hbmeta::math
