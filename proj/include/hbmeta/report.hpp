#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "hbmeta/diagnostics.hpp"
#include "hbmeta/types.hpp"

// Forest plots (hand-emitted SVG 1.1 and 80-column text) and summary
// tables. Rendering is pure string building with fixed formatting, so
// identical inputs produce identical bytes.

namespace hbmeta {

struct ForestRow {
  std::string label;
  double point = 1.0;    // ratio scale
  double ci_low = 1.0;   // ratio scale
  double ci_high = 1.0;  // ratio scale
  double weight = 0.0;   // classical rows; 0 for HDI rows
  bool is_hdi = false;
};

struct ForestPlotSpec {
  std::vector<ForestRow> rows;
  ForestRow pooled;
  std::string title;
  std::string measure_label;
  double p_value = -1.0;  // < 0 means "do not print"
};

namespace report_detail {

inline std::string fmt(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

inline std::string fmt_p(double p) {
  if (p < 0.001) return "p<0.001";
  return "p=" + fmt(p, 3);
}

struct LogAxis {
  double lmin, lmax;
  double position(double ratio) const {  // in [0,1]
    return (std::log(ratio) - lmin) / (lmax - lmin);
  }
};

inline LogAxis axis_for(const ForestPlotSpec& spec) {
  double lo = std::log(spec.pooled.ci_low);
  double hi = std::log(spec.pooled.ci_high);
  for (const auto& r : spec.rows) {
    lo = std::min(lo, std::log(r.ci_low));
    hi = std::max(hi, std::log(r.ci_high));
  }
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  double span = hi - lo;
  if (span < 1e-9) {
    lo -= std::log(2.0);
    hi += std::log(2.0);
    span = hi - lo;
  }
  return {lo - 0.05 * span, hi + 0.05 * span};
}

inline void validate(const ForestPlotSpec& spec) {
  if (spec.rows.empty()) throw EmptySpec("forest plot needs at least one study row");
  auto check = [](const ForestRow& r) {
    if (!(r.ci_low <= r.point && r.point <= r.ci_high)) {
      throw DataError("forest row '" + r.label + "' violates ci_low <= point <= ci_high");
    }
    if (!(r.ci_low > 0.0)) throw DataError("forest rows must be on the ratio scale");
  };
  for (const auto& r : spec.rows) check(r);
  check(spec.pooled);
}

}  // namespace report_detail

/// Deterministic SVG 1.1 forest plot: squares sized by weight for
/// classical rows, uniform circles for HDI rows, a diamond for the pooled
/// row, and a dashed reference line at ratio 1.
inline std::string render_forest_svg(const ForestPlotSpec& spec) {
  using report_detail::fmt;
  report_detail::validate(spec);
  const int n_rows = int(spec.rows.size()) + 1;
  const int width = 800;
  const int height = 60 + 40 * n_rows;
  const double plot_left = 250.0;
  const double plot_right = 760.0;
  auto axis = report_detail::axis_for(spec);
  auto xpos = [&](double ratio) {
    return plot_left + axis.position(ratio) * (plot_right - plot_left);
  };

  double wmax = 0.0;
  for (const auto& r : spec.rows) wmax = std::max(wmax, r.weight);

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
       std::to_string(width) + "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
       std::to_string(width) + " " + std::to_string(height) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" +
       std::to_string(height) + "\" fill=\"white\"/>\n";
  s += "<text x=\"20\" y=\"24\" font-family=\"monospace\" font-size=\"16\">" + spec.title +
       "</text>\n";
  s += "<text x=\"" + fmt(plot_left, 0) + "\" y=\"42\" font-family=\"monospace\" font-size=\"12\">" +
       spec.measure_label + "</text>\n";

  double base_y = 60.0;
  double axis_y = base_y + 40.0 * n_rows - 20.0;
  s += "<line x1=\"" + fmt(plot_left, 2) + "\" y1=\"" + fmt(axis_y, 2) + "\" x2=\"" +
       fmt(plot_right, 2) + "\" y2=\"" + fmt(axis_y, 2) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fmt(xpos(1.0), 2) + "\" y1=\"" + fmt(base_y - 8.0, 2) + "\" x2=\"" +
       fmt(xpos(1.0), 2) + "\" y2=\"" + fmt(axis_y, 2) +
       "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";

  auto emit_row = [&](const ForestRow& r, int index, bool pooled) {
    double y = base_y + 40.0 * index + 12.0;
    std::string value_text = fmt(r.point, 2) + " (" +
                             std::string(r.is_hdi ? "95% HDI " : "") + fmt(r.ci_low, 2) + "-" +
                             fmt(r.ci_high, 2) + ")";
    s += "<g class=\"row\">\n";
    s += "  <text x=\"20\" y=\"" + fmt(y + 4.0, 2) + "\" font-family=\"monospace\" font-size=\"12\"" +
         (pooled ? " font-weight=\"bold\"" : "") + ">" + r.label + "</text>\n";
    double x1 = xpos(r.ci_low);
    double x2 = xpos(r.ci_high);
    s += "  <line x1=\"" + fmt(x1, 2) + "\" y1=\"" + fmt(y, 2) + "\" x2=\"" + fmt(x2, 2) +
         "\" y2=\"" + fmt(y, 2) + "\" stroke=\"black\"/>\n";
    double xp = xpos(r.point);
    if (pooled) {
      s += "  <polygon points=\"" + fmt(x1, 2) + "," + fmt(y, 2) + " " + fmt(xp, 2) + "," +
           fmt(y - 8.0, 2) + " " + fmt(x2, 2) + "," + fmt(y, 2) + " " + fmt(xp, 2) + "," +
           fmt(y + 8.0, 2) + "\" fill=\"black\"/>\n";
    } else if (r.is_hdi) {
      s += "  <circle cx=\"" + fmt(xp, 2) + "\" cy=\"" + fmt(y, 2) +
           "\" r=\"5\" fill=\"black\"/>\n";
    } else {
      double side = wmax > 0.0 ? 4.0 + 8.0 * std::sqrt(r.weight / wmax) : 6.0;
      s += "  <rect x=\"" + fmt(xp - 0.5 * side, 2) + "\" y=\"" + fmt(y - 0.5 * side, 2) +
           "\" width=\"" + fmt(side, 2) + "\" height=\"" + fmt(side, 2) + "\" fill=\"black\"/>\n";
    }
    s += "  <text x=\"" + fmt(plot_right + 6.0, 2) + "\" y=\"" + fmt(y + 4.0, 2) +
         "\" font-family=\"monospace\" font-size=\"11\">" + value_text + "</text>\n";
    s += "</g>\n";
  };

  for (size_t i = 0; i < spec.rows.size(); ++i) emit_row(spec.rows[i], int(i), false);
  emit_row(spec.pooled, int(spec.rows.size()), true);

  if (spec.p_value >= 0.0) {
    s += "<text x=\"20\" y=\"" + fmt(axis_y + 16.0, 2) +
         "\" font-family=\"monospace\" font-size=\"11\">pooled " +
         report_detail::fmt_p(spec.p_value) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

/// 80-column text forest plot. CI segments are dashes, study points 'o',
/// the pooled point '#', the ratio-1 reference column '|'; intervals
/// leaving the axis range end in '<' or '>'.
inline std::string render_forest_text(const ForestPlotSpec& spec) {
  using report_detail::fmt;
  report_detail::validate(spec);
  auto axis = report_detail::axis_for(spec);
  const int label_w = 18;
  const int plot_w = 37;
  auto col = [&](double ratio) {
    int c = int(std::lround(axis.position(ratio) * (plot_w - 1)));
    return std::max(0, std::min(plot_w - 1, c));
  };
  int ref_col = col(1.0);

  std::string out;
  out += spec.title + "\n";
  auto pad = [](std::string t, size_t w) {
    if (t.size() > w) t = t.substr(0, w);
    t.resize(w, ' ');
    return t;
  };
  out += pad("study", label_w) + " " + pad(std::string(ref_col, ' ') + "|", plot_w) + " " +
         spec.measure_label + " (95% " + "CI)" + "\n";

  auto render_row = [&](const ForestRow& r, bool pooled) {
    std::string line(plot_w, ' ');
    line[ref_col] = '|';
    int lo = col(r.ci_low);
    int hi = col(r.ci_high);
    for (int c = lo; c <= hi; ++c) line[c] = '-';
    if (axis.position(r.ci_low) < 0.0) line[0] = '<';
    if (axis.position(r.ci_high) > 1.0) line[plot_w - 1] = '>';
    line[col(r.point)] = pooled ? '#' : 'o';
    std::string value = fmt(r.point, 2) + " (" + (r.is_hdi ? "95% HDI " : "") +
                        fmt(r.ci_low, 2) + "-" + fmt(r.ci_high, 2) + ")";
    if (pooled && spec.p_value >= 0.0) value += " " + report_detail::fmt_p(spec.p_value);
    out += pad(r.label, label_w) + " " + line + " " + value + "\n";
  };

  for (const auto& r : spec.rows) render_row(r, false);
  out += std::string(label_w, '-') + " " + std::string(plot_w, '-') + "\n";
  render_row(spec.pooled, true);
  return out;
}

/// Aligned text table for a classical pooled estimate. Ratios print at 2
/// decimals, p-values at 3 with the "p<0.001" convention.
inline std::string summary_table(const EffectEstimate& est,
                                 const std::vector<std::string>& labels = {}) {
  using report_detail::fmt;
  std::string out;
  const char* measure =
      est.measure == Measure::LogRelativeRisk ? "RR" : "OR (Peto)";
  out += std::string("study              ") + measure + "    95% CI          weight\n";
  double total_w = 0.0;
  for (const auto& c : est.per_study) total_w += c.usable ? c.weight : 0.0;
  const double zq = (est.ci_high - est.point) / est.se;
  for (size_t i = 0; i < est.per_study.size(); ++i) {
    const auto& c = est.per_study[i];
    std::string label = i < labels.size() ? labels[i] : c.id;
    if (label.size() > 18) label = label.substr(0, 18);
    label.resize(18, ' ');
    if (!c.usable) {
      out += label + " (not estimable)\n";
      continue;
    }
    double half = zq * c.se;
    out += label + " " + fmt(std::exp(c.point), 2) + "  (" + fmt(std::exp(c.point - half), 2) +
           "-" + fmt(std::exp(c.point + half), 2) + ")     " +
           fmt(total_w > 0.0 ? 100.0 * c.weight / total_w : 0.0, 1) + "%\n";
  }
  out += "pooled             " + fmt(std::exp(est.point), 2) + "  (" + fmt(std::exp(est.ci_low), 2) +
         "-" + fmt(std::exp(est.ci_high), 2) + ")  " + report_detail::fmt_p(est.p_value) + "\n";
  out += "heterogeneity      Q=" + fmt(est.q_statistic, 2) + " df=" + std::to_string(est.q_df) +
         " " + report_detail::fmt_p(est.q_p_value) + " I2=" + fmt(100.0 * est.i_squared, 1) +
         "%\n";
  return out;
}

/// Aligned text table for a posterior summary.
inline std::string summary_table(const PosteriorSummary& summary) {
  using report_detail::fmt;
  std::string out;
  out += "quantity              mean (95% HDI)            sd      R-hat   ESS\n";
  for (const auto& q : summary.quantities) {
    std::string name = q.name;
    if (name.size() > 20) name = name.substr(0, 20);
    name.resize(20, ' ');
    std::string hdi_text = fmt(q.mean, 2) + " (95% HDI " + fmt(q.hdi_low, 2) + "-" +
                           fmt(q.hdi_high, 2) + ")";
    hdi_text.resize(std::max<size_t>(hdi_text.size(), 25), ' ');
    out += name + "  " + hdi_text + " " + fmt(q.sd, 3) + "  " +
           (std::isnan(q.rhat) ? std::string("n/a  ") : fmt(q.rhat, 3)) + "  " +
           (std::isnan(q.ess) ? std::string("n/a") : fmt(q.ess, 0)) + "\n";
  }
  if (summary.divergence_count > 0) {
    out += "divergent transitions: " + std::to_string(summary.divergence_count) + " of " +
           std::to_string(summary.total_draws) + "\n";
  }
  return out;
}

/// Ratio-scale forest spec from a classical estimate.
inline ForestPlotSpec forest_from_classical(const EffectEstimate& est, const MetaDataset& data,
                                            std::string title = "") {
  ForestPlotSpec spec;
  spec.title = title.empty() ? "Fixed-effect meta-analysis" : std::move(title);
  spec.measure_label =
      est.measure == Measure::LogRelativeRisk ? "relative risk" : "Peto odds ratio";
  spec.p_value = est.p_value;
  double zq = (est.ci_high - est.point) / est.se;
  for (size_t i = 0; i < est.per_study.size(); ++i) {
    const auto& c = est.per_study[i];
    if (!c.usable) continue;
    ForestRow row;
    row.label = i < data.studies.size() ? data.studies[i].label : c.id;
    row.point = std::exp(c.point);
    row.ci_low = std::exp(c.point - zq * c.se);
    row.ci_high = std::exp(c.point + zq * c.se);
    row.weight = c.weight;
    spec.rows.push_back(std::move(row));
  }
  spec.pooled.label = "pooled";
  spec.pooled.point = std::exp(est.point);
  spec.pooled.ci_low = std::exp(est.ci_low);
  spec.pooled.ci_high = std::exp(est.ci_high);
  return spec;
}

/// Ratio-scale forest spec from a posterior summary: one row per study RR
/// plus the total RR as the pooled row, all with 95% HDIs.
inline ForestPlotSpec forest_from_posterior(const PosteriorSummary& summary,
                                            const MetaDataset& data, std::string title = "") {
  ForestPlotSpec spec;
  spec.title = title.empty() ? "Mediator-adjusted meta-analysis" : std::move(title);
  spec.measure_label = "relative risk";
  for (size_t i = 0; i < data.studies.size(); ++i) {
    const QuantitySummary* q = summary.find("rr[" + std::to_string(i + 1) + "]");
    if (q == nullptr) continue;
    ForestRow row;
    row.label = data.studies[i].label;
    row.point = q->mean;
    row.ci_low = std::min(q->hdi_low, q->mean);
    row.ci_high = std::max(q->hdi_high, q->mean);
    row.is_hdi = true;
    spec.rows.push_back(std::move(row));
  }
  const QuantitySummary* total = summary.find("total_rr");
  if (total == nullptr) throw EmptySpec("posterior summary lacks total_rr");
  spec.pooled.label = "total RR";
  spec.pooled.point = total->mean;
  spec.pooled.ci_low = std::min(total->hdi_low, total->mean);
  spec.pooled.ci_high = std::max(total->hdi_high, total->mean);
  spec.pooled.is_hdi = true;
  return spec;
}

}  // namespace hbmeta
