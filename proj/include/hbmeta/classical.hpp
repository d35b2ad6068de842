#pragma once

#include <cmath>
#include <vector>

#include "hbmeta/math.hpp"
#include "hbmeta/types.hpp"

// Fixed-effect pooling: inverse-variance log relative risk, Peto log odds
// ratio for rare events, Cochran's Q, and the E-value sensitivity bound.

namespace hbmeta {

enum class ZeroCellPolicy {
  HaldaneAnscombe05,  // add 0.5 to all four cells of the affected study
  ExcludeStudy,
};

struct ClassicalConfig {
  double confidence_level = 0.95;
  ZeroCellPolicy zero_cell_policy = ZeroCellPolicy::HaldaneAnscombe05;
};

namespace detail {

inline double z_for_confidence(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw DataError("confidence_level must be strictly between 0 and 1");
  }
  return math::ndtr_inverse(0.5 + 0.5 * level);
}

/// Q over the usable per-study contributions, weights 1/se^2.
inline void fill_heterogeneity(EffectEstimate& est) {
  double sw = 0.0, swx = 0.0;
  int k = 0;
  for (const auto& c : est.per_study) {
    if (!c.usable || !(c.weight > 0.0)) continue;
    sw += c.weight;
    swx += c.weight * c.point;
    ++k;
  }
  if (k == 0 || sw <= 0.0) {
    est.q_statistic = 0.0;
    est.q_df = 0;
    est.q_p_value = 1.0;
    est.i_squared = 0.0;
    return;
  }
  double pooled = swx / sw;
  double q = 0.0;
  for (const auto& c : est.per_study) {
    if (!c.usable || !(c.weight > 0.0)) continue;
    double d = c.point - pooled;
    q += c.weight * d * d;
  }
  est.q_statistic = q;
  est.q_df = k - 1;
  est.q_p_value = math::chi_square_upper_tail(q, est.q_df);
  est.i_squared = (q > 0.0 && est.q_df > 0) ? std::max(0.0, (q - est.q_df) / q) : 0.0;
}

inline void finish_pooled(EffectEstimate& est, double pooled, double se, double level) {
  double zq = z_for_confidence(level);
  est.point = pooled;
  est.se = se;
  est.ci_low = pooled - zq * se;
  est.ci_high = pooled + zq * se;
  est.z = pooled / se;
  est.p_value = math::two_sided_p(est.z);
  est.confidence_level = level;
}

}  // namespace detail

/// Inverse-variance fixed-effect pooling of per-study log relative risks.
inline EffectEstimate fixed_effect_rr(const MetaDataset& data, const ClassicalConfig& cfg = {}) {
  EffectEstimate est;
  est.measure = Measure::LogRelativeRisk;
  double sw = 0.0, swx = 0.0;
  for (const auto& s : data.studies) {
    StudyContribution c;
    c.id = s.id;
    double a = double(s.intervention_events);
    double n1 = double(s.intervention_total());
    double cc = double(s.control_events);
    double n2 = double(s.control_total());
    bool zero_cell = s.intervention_events == 0 || s.intervention_nonevents == 0 ||
                     s.control_events == 0 || s.control_nonevents == 0;
    if (zero_cell) {
      if (cfg.zero_cell_policy == ZeroCellPolicy::ExcludeStudy) {
        c.usable = false;
        est.per_study.push_back(c);
        continue;
      }
      a += 0.5;
      cc += 0.5;
      n1 += 1.0;
      n2 += 1.0;
    }
    c.point = std::log(a / n1) - std::log(cc / n2);
    double var = 1.0 / a - 1.0 / n1 + 1.0 / cc - 1.0 / n2;
    if (!(var > 0.0) || !std::isfinite(c.point)) {
      c.usable = false;
      est.per_study.push_back(c);
      continue;
    }
    c.se = std::sqrt(var);
    c.weight = 1.0 / var;
    est.per_study.push_back(c);
    sw += c.weight;
    swx += c.weight * c.point;
  }
  bool any_usable = false;
  for (const auto& c : est.per_study) any_usable |= c.usable;
  if (!any_usable) throw NoUsableStudies("no study usable under the zero-cell policy");
  if (!(sw > 0.0)) throw DegenerateWeights("all per-study standard errors are infinite");
  detail::finish_pooled(est, swx / sw, 1.0 / std::sqrt(sw), cfg.confidence_level);
  detail::fill_heterogeneity(est);
  return est;
}

/// Peto approximate log odds ratio. Zero-total-event studies contribute
/// (0, 0) to the sums; no corrections are applied anywhere on this path.
inline EffectEstimate peto_or(const MetaDataset& data, const ClassicalConfig& cfg = {}) {
  EffectEstimate est;
  est.measure = Measure::PetoLogOddsRatio;
  double sum_oe = 0.0, sum_v = 0.0;
  for (const auto& s : data.studies) {
    StudyContribution c;
    c.id = s.id;
    double n1 = double(s.intervention_total());
    double n2 = double(s.control_total());
    double n = n1 + n2;
    double m = double(s.total_events());
    if (n < 2.0) throw DataError("study '" + s.id + "' has fewer than two patients");
    if (m == 0.0 || m == n) {
      c.o_minus_e = 0.0;
      c.v = 0.0;
      c.usable = false;
      est.per_study.push_back(c);
      continue;
    }
    double e = n1 * m / n;
    double v = n1 * n2 * m * (n - m) / (n * n * (n - 1.0));
    c.o_minus_e = double(s.intervention_events) - e;
    c.v = v;
    c.point = c.o_minus_e / v;
    c.se = 1.0 / std::sqrt(v);
    c.weight = v;
    est.per_study.push_back(c);
    sum_oe += c.o_minus_e;
    sum_v += v;
  }
  if (!(sum_v > 0.0)) throw AllZeroVariance("no events anywhere: Peto effect not estimable");
  detail::finish_pooled(est, sum_oe / sum_v, 1.0 / std::sqrt(sum_v), cfg.confidence_level);
  detail::fill_heterogeneity(est);
  return est;
}

struct QTest {
  double q;
  int df;
  double p;
};

/// Cochran's Q recomputed from an estimate's per-study contributions.
inline QTest cochran_q_test(const EffectEstimate& est) {
  int k = 0;
  for (const auto& c : est.per_study) {
    if (c.usable && c.weight > 0.0) ++k;
  }
  if (k < 2) throw InsufficientStudies("Cochran's Q needs at least two usable studies");
  EffectEstimate tmp = est;
  detail::fill_heterogeneity(tmp);
  return {tmp.q_statistic, tmp.q_df, tmp.q_p_value};
}

/// VanderWeele-Ding E-value for a relative risk point estimate.
inline double e_value(double rr_point) {
  if (!(rr_point > 0.0)) throw NonPositiveRR("E-value requires RR > 0");
  double rr = rr_point < 1.0 ? 1.0 / rr_point : rr_point;
  return rr + std::sqrt(rr * (rr - 1.0));
}

}  // namespace hbmeta
