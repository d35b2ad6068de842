#pragma once

#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "hbmeta/math.hpp"
#include "hbmeta/rng.hpp"

// Distribution kernels: log density, hand-derived gradients (in the value
// and in every parameter), and seeded sampling. Truncated normals are
// renormalized one-sided normals; sampling uses the inverse CDF on the
// kept mass, never rejection, so extreme truncation points stay cheap.

namespace hbmeta::dists {

struct Normal {
  double loc;
  double scale;
};

struct Logistic {
  double loc;
  double scale;
};

struct Beta {
  double alpha;
  double beta;
};

struct HalfCauchy {
  double scale;
};

/// Support [low, inf).
struct TruncatedNormalLeft {
  double loc;
  double scale;
  double low;
};

/// Support (-inf, high].
struct TruncatedNormalRight {
  double loc;
  double scale;
  double high;
};

struct BinomialProbs {
  double p;
  std::int64_t n;
};

using Kernel = std::variant<Normal, Logistic, Beta, HalfCauchy, TruncatedNormalLeft,
                            TruncatedNormalRight, BinomialProbs>;

namespace detail {
inline void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw DomainError(std::string(what) + " must be strictly positive");
}
}  // namespace detail

// ---------------------------------------------------------------------------
// log densities

inline double log_pdf(const Normal& d, double x) {
  detail::require_positive(d.scale, "Normal scale");
  double z = (x - d.loc) / d.scale;
  return -0.5 * z * z - std::log(d.scale) - math::kHalfLog2Pi;
}

inline double log_pdf(const Logistic& d, double x) {
  detail::require_positive(d.scale, "Logistic scale");
  double z = (x - d.loc) / d.scale;
  // -z - 2 log(1 + e^-z) - log s, written via log1p_exp for both tails
  return -z - 2.0 * math::log1p_exp(-z) - std::log(d.scale);
}

inline double log_pdf(const Beta& d, double x) {
  detail::require_positive(d.alpha, "Beta alpha");
  detail::require_positive(d.beta, "Beta beta");
  if (!(x > 0.0 && x < 1.0)) throw OutOfSupport("Beta: x outside (0,1)");
  return (d.alpha - 1.0) * std::log(x) + (d.beta - 1.0) * std::log1p(-x) -
         math::lgamma_pos(d.alpha) - math::lgamma_pos(d.beta) +
         math::lgamma_pos(d.alpha + d.beta);
}

inline double log_pdf(const HalfCauchy& d, double x) {
  detail::require_positive(d.scale, "HalfCauchy scale");
  if (x < 0.0) throw OutOfSupport("HalfCauchy: x < 0");
  // pdf = 2 / (pi s (1 + (x/s)^2))
  return std::log(2.0 / math::kPi) + std::log(d.scale) - std::log(d.scale * d.scale + x * x);
}

inline double log_pdf(const TruncatedNormalLeft& d, double x) {
  detail::require_positive(d.scale, "TruncatedNormalLeft scale");
  if (x < d.low) throw OutOfSupport("TruncatedNormalLeft: x below truncation point");
  double z = (x - d.loc) / d.scale;
  double a = (d.low - d.loc) / d.scale;
  // kept mass = P(Z >= a) = Phi(-a)
  return -0.5 * z * z - std::log(d.scale) - math::kHalfLog2Pi - math::log_ndtr(-a);
}

inline double log_pdf(const TruncatedNormalRight& d, double x) {
  detail::require_positive(d.scale, "TruncatedNormalRight scale");
  if (x > d.high) throw OutOfSupport("TruncatedNormalRight: x above truncation point");
  double z = (x - d.loc) / d.scale;
  double b = (d.high - d.loc) / d.scale;
  return -0.5 * z * z - std::log(d.scale) - math::kHalfLog2Pi - math::log_ndtr(b);
}

inline double log_pdf(const BinomialProbs& d, double x) {
  if (!(d.p > 0.0 && d.p < 1.0)) throw DomainError("BinomialProbs p must be in (0,1)");
  if (d.n < 0) throw DomainError("BinomialProbs n must be >= 0");
  if (x < 0.0 || x > double(d.n) || x != std::floor(x)) {
    throw OutOfSupport("BinomialProbs: x not an integer in [0,n]");
  }
  auto k = std::int64_t(x);
  return math::lchoose(d.n, k) + double(k) * std::log(d.p) +
         double(d.n - k) * std::log1p(-d.p);
}

inline double log_pdf(const Kernel& k, double x) {
  return std::visit([&](const auto& d) { return log_pdf(d, x); }, k);
}

// ---------------------------------------------------------------------------
// gradients of the log density, in the value and in each parameter

struct NormalGrad {
  double d_x, d_loc, d_scale;
};

inline NormalGrad grad_log_pdf(const Normal& d, double x) {
  detail::require_positive(d.scale, "Normal scale");
  double s2 = d.scale * d.scale;
  double r = (x - d.loc) / s2;
  return {-r, r, (x - d.loc) * (x - d.loc) / (s2 * d.scale) - 1.0 / d.scale};
}

struct LogisticGrad {
  double d_x, d_loc, d_scale;
};

inline LogisticGrad grad_log_pdf(const Logistic& d, double x) {
  detail::require_positive(d.scale, "Logistic scale");
  double z = (x - d.loc) / d.scale;
  double core = 1.0 - 2.0 * math::sigmoid(z);  // d/dz of log pdf
  return {core / d.scale, -core / d.scale, (-1.0 - z * core) / d.scale};
}

struct BetaGrad {
  double d_x, d_alpha, d_beta;
};

inline BetaGrad grad_log_pdf(const Beta& d, double x) {
  detail::require_positive(d.alpha, "Beta alpha");
  detail::require_positive(d.beta, "Beta beta");
  if (!(x > 0.0 && x < 1.0)) throw OutOfSupport("Beta: x outside (0,1)");
  double psi_ab = math::digamma(d.alpha + d.beta);
  return {(d.alpha - 1.0) / x - (d.beta - 1.0) / (1.0 - x),
          std::log(x) - math::digamma(d.alpha) + psi_ab,
          std::log1p(-x) - math::digamma(d.beta) + psi_ab};
}

struct HalfCauchyGrad {
  double d_x, d_scale;
};

inline HalfCauchyGrad grad_log_pdf(const HalfCauchy& d, double x) {
  detail::require_positive(d.scale, "HalfCauchy scale");
  if (x < 0.0) throw OutOfSupport("HalfCauchy: x < 0");
  double denom = d.scale * d.scale + x * x;
  return {-2.0 * x / denom, 1.0 / d.scale - 2.0 * d.scale / denom};
}

struct TruncatedNormalLeftGrad {
  double d_x, d_loc, d_scale, d_low;
};

inline TruncatedNormalLeftGrad grad_log_pdf(const TruncatedNormalLeft& d, double x) {
  detail::require_positive(d.scale, "TruncatedNormalLeft scale");
  if (x < d.low) throw OutOfSupport("TruncatedNormalLeft: x below truncation point");
  double s = d.scale;
  double z = (x - d.loc) / s;
  double a = (d.low - d.loc) / s;
  double hz = math::normal_hazard_upper(a);  // phi(a) / Phi(-a)
  return {-z / s, z / s - hz / s, (z * z - 1.0 - hz * a) / s, hz / s};
}

struct TruncatedNormalRightGrad {
  double d_x, d_loc, d_scale, d_high;
};

inline TruncatedNormalRightGrad grad_log_pdf(const TruncatedNormalRight& d, double x) {
  detail::require_positive(d.scale, "TruncatedNormalRight scale");
  if (x > d.high) throw OutOfSupport("TruncatedNormalRight: x above truncation point");
  double s = d.scale;
  double z = (x - d.loc) / s;
  double b = (d.high - d.loc) / s;
  double hz = math::normal_hazard_lower(b);  // phi(b) / Phi(b)
  return {-z / s, z / s + hz / s, (z * z - 1.0 + hz * b) / s, -hz / s};
}

struct BinomialProbsGrad {
  double d_p;
};

inline BinomialProbsGrad grad_log_pdf(const BinomialProbs& d, double x) {
  log_pdf(d, x);  // validates
  auto k = std::int64_t(x);
  return {double(k) / d.p - double(d.n - k) / (1.0 - d.p)};
}

/// Generic view used by property tests: gradient in the value followed by
/// the gradient in each parameter, in declaration order.
inline std::vector<double> grad_log_pdf_vector(const Kernel& k, double x) {
  return std::visit(
      [&](const auto& d) -> std::vector<double> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Normal>) {
          auto g = grad_log_pdf(d, x);
          return {g.d_x, g.d_loc, g.d_scale};
        } else if constexpr (std::is_same_v<T, Logistic>) {
          auto g = grad_log_pdf(d, x);
          return {g.d_x, g.d_loc, g.d_scale};
        } else if constexpr (std::is_same_v<T, Beta>) {
          auto g = grad_log_pdf(d, x);
          return {g.d_x, g.d_alpha, g.d_beta};
        } else if constexpr (std::is_same_v<T, HalfCauchy>) {
          auto g = grad_log_pdf(d, x);
          return {g.d_x, g.d_scale};
        } else if constexpr (std::is_same_v<T, TruncatedNormalLeft>) {
          auto g = grad_log_pdf(d, x);
          return {g.d_x, g.d_loc, g.d_scale, g.d_low};
        } else if constexpr (std::is_same_v<T, TruncatedNormalRight>) {
          auto g = grad_log_pdf(d, x);
          return {g.d_x, g.d_loc, g.d_scale, g.d_high};
        } else {
          auto g = grad_log_pdf(d, x);
          return {g.d_p};
        }
      },
      k);
}

// ---------------------------------------------------------------------------
// sampling

inline double sample(const Normal& d, Rng& rng) {
  detail::require_positive(d.scale, "Normal scale");
  return d.loc + d.scale * rng.normal();
}

inline double sample(const Logistic& d, Rng& rng) {
  detail::require_positive(d.scale, "Logistic scale");
  double u = rng.uniform_open();
  return d.loc + d.scale * (std::log(u) - std::log1p(-u));
}

inline double sample(const Beta& d, Rng& rng) {
  detail::require_positive(d.alpha, "Beta alpha");
  detail::require_positive(d.beta, "Beta beta");
  return rng.beta(d.alpha, d.beta);
}

inline double sample(const HalfCauchy& d, Rng& rng) {
  detail::require_positive(d.scale, "HalfCauchy scale");
  return d.scale * std::tan(0.5 * math::kPi * rng.uniform_open());
}

inline double sample(const TruncatedNormalLeft& d, Rng& rng) {
  detail::require_positive(d.scale, "TruncatedNormalLeft scale");
  double a = (d.low - d.loc) / d.scale;
  double u = rng.uniform_open();
  // P(Z >= z) = (1-u) P(Z >= a), solved on the log scale
  double z = -math::ndtr_inverse_from_log(std::log1p(-u) + math::log_ndtr(-a));
  double x = d.loc + d.scale * z;
  return x < d.low ? d.low : x;
}

inline double sample(const TruncatedNormalRight& d, Rng& rng) {
  detail::require_positive(d.scale, "TruncatedNormalRight scale");
  double b = (d.high - d.loc) / d.scale;
  double u = rng.uniform_open();
  double z = math::ndtr_inverse_from_log(std::log(u) + math::log_ndtr(b));
  double x = d.loc + d.scale * z;
  return x > d.high ? d.high : x;
}

inline double sample(const BinomialProbs& d, Rng& rng) {
  if (!(d.p > 0.0 && d.p < 1.0)) throw DomainError("BinomialProbs p must be in (0,1)");
  return double(rng.binomial(d.n, d.p));
}

inline double sample(const Kernel& k, Rng& rng) {
  return std::visit([&](const auto& d) { return sample(d, rng); }, k);
}

// ---------------------------------------------------------------------------
// constrained <-> unconstrained transforms
//
// forward: constrained -> unconstrained. inverse: unconstrained ->
// constrained. log_abs_det_jacobian is log |d inverse(y) / dy| at the
// unconstrained point, the term added to a log density when a change of
// variables moves it to the unconstrained space.

struct Identity {};
struct LogPositive {};
struct LogitUnit {};
struct UpperBoundedExpShift {
  double bound;
};
struct LowerBoundedExpShift {
  double bound;
};

using Transform =
    std::variant<Identity, LogPositive, LogitUnit, UpperBoundedExpShift, LowerBoundedExpShift>;

inline double transform_forward(const Identity&, double x) { return x; }
inline double transform_forward(const LogPositive&, double x) {
  if (!(x > 0.0)) throw DomainError("LogPositive: x must be > 0");
  return std::log(x);
}
inline double transform_forward(const LogitUnit&, double x) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError("LogitUnit: x must be in (0,1)");
  return math::logit(x);
}
inline double transform_forward(const UpperBoundedExpShift& t, double x) {
  if (!(x < t.bound)) throw DomainError("UpperBoundedExpShift: x must be below bound");
  return std::log(t.bound - x);
}
inline double transform_forward(const LowerBoundedExpShift& t, double x) {
  if (!(x > t.bound)) throw DomainError("LowerBoundedExpShift: x must be above bound");
  return std::log(x - t.bound);
}

inline double transform_inverse(const Identity&, double y) { return y; }
inline double transform_inverse(const LogPositive&, double y) { return std::exp(y); }
inline double transform_inverse(const LogitUnit&, double y) { return math::sigmoid(y); }
inline double transform_inverse(const UpperBoundedExpShift& t, double y) {
  return t.bound - std::exp(y);
}
inline double transform_inverse(const LowerBoundedExpShift& t, double y) {
  return t.bound + std::exp(y);
}

inline double log_abs_det_jacobian(const Identity&, double) { return 0.0; }
inline double log_abs_det_jacobian(const LogPositive&, double y) { return y; }
inline double log_abs_det_jacobian(const LogitUnit&, double y) {
  // log sigma'(y) = log sigma(y) + log sigma(-y)
  return -math::log1p_exp(-y) - math::log1p_exp(y);
}
inline double log_abs_det_jacobian(const UpperBoundedExpShift&, double y) { return y; }
inline double log_abs_det_jacobian(const LowerBoundedExpShift&, double y) { return y; }

inline double transform_forward(const Transform& t, double x) {
  return std::visit([&](const auto& tt) { return transform_forward(tt, x); }, t);
}
inline double transform_inverse(const Transform& t, double y) {
  return std::visit([&](const auto& tt) { return transform_inverse(tt, y); }, t);
}
inline double log_abs_det_jacobian(const Transform& t, double y) {
  return std::visit([&](const auto& tt) { return log_abs_det_jacobian(tt, y); }, t);
}

}  // namespace hbmeta::dists
