#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbmeta/classical.hpp"
#include "hbmeta/diagnostics.hpp"
#include "hbmeta/model.hpp"
#include "hbmeta/report.hpp"
#include "hbmeta/simulate.hpp"
#include "hbmeta/types.hpp"
#include "hbmeta/version.hpp"

// Machine-readable result documents (schema_version 1) and the JSON
// configuration formats. Keys are emitted sorted, values deterministically,
// so identical runs serialize byte-identically.

namespace hbmeta {

using json = nlohmann::json;

inline json to_json(const PriorConfig& p) {
  return json{{"eta_log_loc", p.eta_log_loc},
              {"mu_alpha", p.mu_alpha},
              {"mu_beta", p.mu_beta},
              {"tau_scale", p.tau_scale},
              {"tau_b_scale", p.tau_b_scale},
              {"mediator_prior_scale", p.mediator_prior_scale},
              {"threshold_scale", p.threshold_scale}};
}

inline PriorConfig prior_config_from_json(const json& j) {
  PriorConfig p;
  p.eta_log_loc = j.value("eta_log_loc", p.eta_log_loc);
  p.mu_alpha = j.value("mu_alpha", p.mu_alpha);
  p.mu_beta = j.value("mu_beta", p.mu_beta);
  p.tau_scale = j.value("tau_scale", p.tau_scale);
  p.tau_b_scale = j.value("tau_b_scale", p.tau_b_scale);
  p.mediator_prior_scale = j.value("mediator_prior_scale", p.mediator_prior_scale);
  p.threshold_scale = j.value("threshold_scale", p.threshold_scale);
  if (!(p.mu_alpha > 0.0) || !(p.mu_beta > 0.0) || !(p.tau_scale > 0.0) ||
      !(p.tau_b_scale > 0.0) || !(p.mediator_prior_scale > 0.0) ||
      !(p.threshold_scale > 0.0)) {
    throw DataError("prior config scales must be strictly positive");
  }
  return p;
}

inline json to_json(const SamplerConfig& c) {
  return json{{"chains", c.chains},
              {"warmup_draws", c.warmup_draws},
              {"retained_draws", c.retained_draws},
              {"target_accept", c.target_accept},
              {"max_tree_depth", c.max_tree_depth},
              {"seed", c.seed}};
}

inline json to_json(const SimScenario& s) {
  json arms = json::array();
  for (auto [ni, nc] : s.arm_sizes) arms.push_back(json::array({ni, nc}));
  return json{{"num_studies", s.num_studies}, {"arm_sizes", arms},
              {"true_theta", s.true_theta},   {"true_beta", s.true_beta},
              {"base_rate", s.base_rate},     {"threshold_loc", s.threshold_loc},
              {"eta", s.eta},                 {"seed", s.seed}};
}

inline SimScenario scenario_from_json(const json& j) {
  SimScenario s;
  s.num_studies = j.value("num_studies", s.num_studies);
  s.true_theta = j.value("true_theta", s.true_theta);
  s.true_beta = j.value("true_beta", s.true_beta);
  s.base_rate = j.value("base_rate", s.base_rate);
  s.threshold_loc = j.value("threshold_loc", s.threshold_loc);
  s.eta = j.value("eta", s.eta);
  s.seed = j.value("seed", s.seed);
  if (j.contains("arm_sizes")) {
    s.arm_sizes.clear();
    for (const auto& a : j.at("arm_sizes")) {
      s.arm_sizes.emplace_back(a.at(0).get<std::int64_t>(), a.at(1).get<std::int64_t>());
    }
  }
  return s;
}

inline json to_json(const ForestPlotSpec& spec) {
  json rows = json::array();
  for (const auto& r : spec.rows) {
    rows.push_back(json{{"label", r.label},
                        {"point", r.point},
                        {"ci_low", r.ci_low},
                        {"ci_high", r.ci_high},
                        {"weight", r.weight},
                        {"is_hdi", r.is_hdi}});
  }
  return json{{"title", spec.title},
              {"measure_label", spec.measure_label},
              {"p_value", spec.p_value},
              {"rows", rows},
              {"pooled", json{{"label", spec.pooled.label},
                              {"point", spec.pooled.point},
                              {"ci_low", spec.pooled.ci_low},
                              {"ci_high", spec.pooled.ci_high},
                              {"weight", spec.pooled.weight},
                              {"is_hdi", spec.pooled.is_hdi}}}};
}

inline ForestPlotSpec forest_from_json(const json& j) {
  ForestPlotSpec spec;
  spec.title = j.value("title", "");
  spec.measure_label = j.value("measure_label", "");
  spec.p_value = j.value("p_value", -1.0);
  auto row_of = [](const json& r) {
    ForestRow row;
    row.label = r.value("label", "");
    row.point = r.at("point").get<double>();
    row.ci_low = r.at("ci_low").get<double>();
    row.ci_high = r.at("ci_high").get<double>();
    row.weight = r.value("weight", 0.0);
    row.is_hdi = r.value("is_hdi", false);
    return row;
  };
  for (const auto& r : j.at("rows")) spec.rows.push_back(row_of(r));
  spec.pooled = row_of(j.at("pooled"));
  return spec;
}

inline json dataset_summary_json(const MetaDataset& data) {
  return json{{"n_studies", data.studies.size()},
              {"outcome_name", data.outcome_name},
              {"intervention_name", data.intervention_name},
              {"control_name", data.control_name}};
}

inline json to_json(const EffectEstimate& est) {
  json per_study = json::array();
  for (const auto& c : est.per_study) {
    per_study.push_back(json{{"id", c.id},
                             {"point", c.point},
                             {"se", c.se},
                             {"weight", c.weight},
                             {"o_minus_e", c.o_minus_e},
                             {"v", c.v},
                             {"usable", c.usable}});
  }
  return json{{"measure", est.measure == Measure::LogRelativeRisk ? "log_rr" : "peto_log_or"},
              {"point", est.point},
              {"se", est.se},
              {"ci_low", est.ci_low},
              {"ci_high", est.ci_high},
              {"z", est.z},
              {"p_value", est.p_value},
              {"confidence_level", est.confidence_level},
              {"ratio", json{{"point", std::exp(est.point)},
                             {"ci_low", std::exp(est.ci_low)},
                             {"ci_high", std::exp(est.ci_high)}}},
              {"q_statistic", est.q_statistic},
              {"q_df", est.q_df},
              {"q_p_value", est.q_p_value},
              {"i_squared", est.i_squared},
              {"per_study", per_study}};
}

inline json to_json(const PosteriorSummary& s) {
  json quantities = json::array();
  for (const auto& q : s.quantities) {
    json e{{"name", q.name}, {"mean", q.mean},       {"sd", q.sd},
           {"hdi_low", q.hdi_low}, {"hdi_high", q.hdi_high}};
    if (std::isfinite(q.rhat)) e["rhat"] = q.rhat;
    if (std::isfinite(q.ess)) e["ess"] = q.ess;
    quantities.push_back(std::move(e));
  }
  return json{{"quantities", quantities},
              {"warnings", s.warnings},
              {"divergence_count", s.divergence_count},
              {"total_draws", s.total_draws}};
}

inline json result_envelope(const std::string& command) {
  return json{{"schema_version", 1}, {"tool_version", kVersion}, {"command", command}};
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
}

inline void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("invalid JSON in '" + path + "': " + e.what());
  }
  return j;
}

}  // namespace hbmeta
