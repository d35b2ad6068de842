#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "hbmeta/math.hpp"
#include "hbmeta/sampler.hpp"

// Convergence diagnostics and posterior summarization: rank-normalized
// split R-hat, Geyer initial-monotone-sequence effective sample size, and
// shortest-window highest-density intervals.

namespace hbmeta {

namespace diag_detail {

inline double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

inline double var_of(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / double(v.size() - 1);
}

/// Splits chains into >= 4 segments of equal length (halves, or quarters
/// for a single chain).
inline std::vector<std::vector<double>> split_segments(
    const std::vector<std::vector<double>>& chains) {
  int pieces = chains.size() >= 2 ? 2 : 4;
  std::vector<std::vector<double>> segments;
  for (const auto& c : chains) {
    size_t n = c.size() / pieces;
    if (n < 2) throw InsufficientDraws("chains too short to split");
    for (int p = 0; p < pieces; ++p) {
      segments.emplace_back(c.begin() + p * n, c.begin() + (p + 1) * n);
    }
  }
  return segments;
}

/// Average ranks (ties averaged), mapped through the normal quantile.
inline std::vector<std::vector<double>> rank_normalize(
    const std::vector<std::vector<double>>& segments) {
  struct Entry {
    double value;
    int seg;
    int idx;
  };
  std::vector<Entry> all;
  for (size_t s = 0; s < segments.size(); ++s) {
    for (size_t i = 0; i < segments[s].size(); ++i) {
      all.push_back({segments[s][i], int(s), int(i)});
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Entry& a, const Entry& b) { return a.value < b.value; });
  size_t total = all.size();
  std::vector<std::vector<double>> z(segments.size());
  for (size_t s = 0; s < segments.size(); ++s) z[s].resize(segments[s].size());
  size_t i = 0;
  while (i < total) {
    size_t j = i;
    while (j + 1 < total && all[j + 1].value == all[i].value) ++j;
    double avg_rank = 0.5 * (double(i) + double(j)) + 1.0;
    for (size_t k = i; k <= j; ++k) {
      double u = (avg_rank - 0.375) / (double(total) + 0.25);
      z[all[k].seg][all[k].idx] = math::ndtr_inverse(u);
    }
    i = j + 1;
  }
  return z;
}

inline double split_rhat_raw(const std::vector<std::vector<double>>& segments) {
  size_t m = segments.size();
  size_t n = segments[0].size();
  std::vector<double> means(m), vars(m);
  for (size_t s = 0; s < m; ++s) {
    means[s] = mean_of(segments[s]);
    vars[s] = var_of(segments[s], means[s]);
  }
  double grand = mean_of(means);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= double(n) / double(m - 1);
  double w = mean_of(vars);
  if (!(w > 0.0)) throw InsufficientDraws("zero within-segment variance: R-hat undefined");
  double var_plus = (double(n) - 1.0) / double(n) * w + b / double(n);
  return std::sqrt(var_plus / w);
}

}  // namespace diag_detail

/// Rank-normalized split R-hat over per-chain draws of one quantity.
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw InsufficientDraws("no chains");
  auto segments = diag_detail::split_segments(chains);
  bool constant = true;
  double first = segments[0][0];
  for (const auto& s : segments) {
    for (double v : s) constant &= (v == first);
  }
  if (constant) throw InsufficientDraws("constant draws: R-hat undefined");
  return diag_detail::split_rhat_raw(diag_detail::rank_normalize(segments));
}

/// Effective sample size with Geyer's initial monotone sequence.
inline double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw InsufficientDraws("no chains");
  size_t m = chains.size();
  size_t n = chains[0].size();
  for (const auto& c : chains) {
    if (c.size() != n) throw InsufficientDraws("chains of unequal length");
  }
  if (n < 8) throw InsufficientDraws("need at least 8 draws per chain");

  std::vector<double> means(m);
  std::vector<double> c0(m);
  for (size_t ch = 0; ch < m; ++ch) {
    means[ch] = diag_detail::mean_of(chains[ch]);
    double s = 0.0;
    for (double x : chains[ch]) s += (x - means[ch]) * (x - means[ch]);
    c0[ch] = s / double(n);  // biased autocovariance at lag 0
  }
  double mean_var = diag_detail::mean_of(c0) * double(n) / (double(n) - 1.0);
  double var_plus = mean_var * (double(n) - 1.0) / double(n);
  if (m > 1) {
    double grand = diag_detail::mean_of(means);
    double bvar = 0.0;
    for (double mu : means) bvar += (mu - grand) * (mu - grand);
    var_plus += bvar / double(m - 1);
  }
  if (!(var_plus > 0.0)) throw InsufficientDraws("zero variance: ESS undefined");

  auto acov_at = [&](size_t t) {
    double acc = 0.0;
    for (size_t ch = 0; ch < m; ++ch) {
      double s = 0.0;
      for (size_t i = 0; i + t < n; ++i) {
        s += (chains[ch][i] - means[ch]) * (chains[ch][i + t] - means[ch]);
      }
      acc += s / double(n);
    }
    return acc / double(m);
  };

  // Geyer pairs: G_0 = rho_0 + rho_1, G_k = rho_2k + rho_2k+1. Truncate at
  // the first non-positive pair, then apply the monotone non-increasing
  // envelope.
  std::vector<double> pair_sums;
  double rho1 = 1.0 - (mean_var - acov_at(1)) / var_plus;
  double g0 = 1.0 + rho1;
  if (g0 > 0.0) {
    pair_sums.push_back(g0);
    for (size_t t = 2; t + 1 < n; t += 2) {
      double rho_even = 1.0 - (mean_var - acov_at(t)) / var_plus;
      double rho_odd = 1.0 - (mean_var - acov_at(t + 1)) / var_plus;
      double pair = rho_even + rho_odd;
      if (pair <= 0.0) break;
      pair_sums.push_back(pair);
    }
  }
  double running = std::numeric_limits<double>::infinity();
  double tau = -1.0;
  for (double p : pair_sums) {
    running = std::min(running, p);
    tau += 2.0 * running;
  }
  tau = std::max(tau, 1e-3);
  return double(m) * double(n) / tau;
}

/// Shortest contiguous window holding ceil(mass * N) sorted draws.
inline std::pair<double, double> hdi(std::vector<double> draws, double mass = 0.95) {
  if (draws.size() < 100) throw InsufficientDraws("HDI needs at least 100 draws");
  std::sort(draws.begin(), draws.end());
  size_t n = draws.size();
  auto take = size_t(std::ceil(mass * double(n)));
  take = std::min(std::max<size_t>(take, 2), n);
  size_t best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + take <= n; ++i) {
    double width = draws[i + take - 1] - draws[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {draws[best], draws[best + take - 1]};
}

inline std::pair<double, double> hdi_95(const std::vector<double>& draws) {
  return hdi(draws, 0.95);
}

struct QuantitySummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;
  double rhat = std::numeric_limits<double>::quiet_NaN();
  double ess = std::numeric_limits<double>::quiet_NaN();
};

struct PosteriorSummary {
  std::vector<QuantitySummary> quantities;
  std::vector<std::string> warnings;
  int divergence_count = 0;
  int total_draws = 0;

  const QuantitySummary* find(const std::string& name) const {
    for (const auto& q : quantities) {
      if (q.name == name) return &q;
    }
    return nullptr;
  }
};

/// Decodes every retained draw, aggregates each named quantity, and runs
/// both diagnostics per quantity. Diagnostic failures (constant margins
/// and the like) become warnings, never silent drops.
template <class Model>
PosteriorSummary summarize(const std::vector<ChainResult>& chains, const Model& model) {
  if (chains.empty()) throw InsufficientDraws("no chains to summarize");
  const auto& names = model.quantity_names();
  size_t nq = names.size();
  PosteriorSummary out;
  out.total_draws = 0;
  for (const auto& c : chains) {
    out.divergence_count += c.divergence_count;
    out.total_draws += c.draws.rows();
  }

  // per quantity, per chain series
  std::vector<std::vector<std::vector<double>>> series(
      nq, std::vector<std::vector<double>>(chains.size()));
  std::vector<double> buf;
  std::vector<double> x(model.dim());
  for (size_t c = 0; c < chains.size(); ++c) {
    const DrawMatrix& d = chains[c].draws;
    for (int r = 0; r < d.rows(); ++r) {
      x.assign(d.row(r), d.row(r) + d.cols());
      model.extract_quantities(x, buf);
      for (size_t q = 0; q < nq; ++q) series[q][c].push_back(buf[q]);
    }
  }

  for (size_t q = 0; q < nq; ++q) {
    QuantitySummary s;
    s.name = names[q];
    std::vector<double> all;
    for (const auto& ch : series[q]) all.insert(all.end(), ch.begin(), ch.end());
    s.mean = diag_detail::mean_of(all);
    s.sd = all.size() > 1 ? std::sqrt(diag_detail::var_of(all, s.mean)) : 0.0;
    try {
      auto [lo, hi] = hdi_95(all);
      s.hdi_low = lo;
      s.hdi_high = hi;
      // Shortest-window vs equal-tailed ratio flags suspect multimodality.
      std::vector<double> sorted = all;
      std::sort(sorted.begin(), sorted.end());
      double eti_lo = sorted[size_t(0.025 * double(sorted.size()))];
      double eti_hi = sorted[std::min(sorted.size() - 1, size_t(0.975 * double(sorted.size())))];
      double eti_w = eti_hi - eti_lo;
      if (eti_w > 0.0 && (hi - lo) / eti_w > 1.5) {
        out.warnings.push_back("quantity '" + s.name + "': HDI much wider than equal-tailed interval; margin may be multimodal");
      }
    } catch (const Error& e) {
      out.warnings.push_back("quantity '" + s.name + "': " + e.what());
      s.hdi_low = s.hdi_high = s.mean;
    }
    try {
      s.rhat = split_rhat(series[q]);
    } catch (const Error& e) {
      out.warnings.push_back("quantity '" + s.name + "': " + e.what());
    }
    try {
      s.ess = effective_sample_size(series[q]);
    } catch (const Error& e) {
      out.warnings.push_back("quantity '" + s.name + "': " + e.what());
    }
    out.quantities.push_back(std::move(s));
  }
  return out;
}

}  // namespace hbmeta
