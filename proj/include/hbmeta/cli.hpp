#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hbmeta/classical.hpp"
#include "hbmeta/csv.hpp"
#include "hbmeta/model.hpp"
#include "hbmeta/report.hpp"
#include "hbmeta/result_io.hpp"
#include "hbmeta/sampler.hpp"
#include "hbmeta/simulate.hpp"

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data
// error, 3 diagnostics gate failure. Every analysis command writes its
// machine-readable result JSON into the --out directory; the embedded
// config echo is sufficient to reproduce the run (the output directory
// itself is intentionally not part of the echo).

namespace hbmeta::cli {

namespace fs = std::filesystem;

struct DiagnosticsGates {
  double rhat = 1.01;
  double ess = 400.0;
  double divergence_fraction = 0.01;
};

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "'");
}

inline MetaDataset load_dataset(const std::string& path, std::ostream& err) {
  std::vector<std::string> warnings;
  MetaDataset data = parse_csv(path, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  return data;
}

inline int run_fixed(const std::string& in_path, const std::string& measure, double conf,
                     const std::string& zero_cell, const std::string& out_dir,
                     std::ostream& out, std::ostream& err) {
  MetaDataset data = load_dataset(in_path, err);
  ClassicalConfig cfg;
  cfg.confidence_level = conf;
  cfg.zero_cell_policy = zero_cell == "exclude" ? ZeroCellPolicy::ExcludeStudy
                                                : ZeroCellPolicy::HaldaneAnscombe05;
  EffectEstimate est = measure == "peto-or" ? peto_or(data, cfg) : fixed_effect_rr(data, cfg);

  std::vector<std::string> labels;
  for (const auto& s : data.studies) labels.push_back(s.label);
  out << summary_table(est, labels);
  ForestPlotSpec forest = forest_from_classical(est, data);
  out << "\n" << render_forest_text(forest);

  ensure_dir(out_dir);
  json result = result_envelope("fixed");
  result["config"] = json{{"in", in_path},
                          {"measure", measure},
                          {"confidence_level", conf},
                          {"zero_cell_policy", zero_cell}};
  result["dataset"] = dataset_summary_json(data);
  result["estimate"] = to_json(est);
  result["forest"] = to_json(forest);
  write_json_file((fs::path(out_dir) / "result_fixed.json").string(), result);
  return 0;
}

inline int run_bayes(const std::string& in_path, const std::string& priors_path,
                     SamplerConfig sampler_cfg, const DiagnosticsGates& gates,
                     const std::string& out_dir, std::ostream& out, std::ostream& err) {
  MetaDataset data = load_dataset(in_path, err);
  PriorConfig priors;
  if (!priors_path.empty()) priors = prior_config_from_json(read_json_file(priors_path));
  MediatedModel model(data, priors);
  auto chains = run_chains(model, sampler_cfg);
  PosteriorSummary summary = summarize(chains, model);
  out << summary_table(summary);
  ForestPlotSpec forest = forest_from_posterior(summary, data);
  out << "\n" << render_forest_text(forest);

  double max_rhat = 0.0, min_ess = std::numeric_limits<double>::infinity();
  for (const auto& q : summary.quantities) {
    if (std::isfinite(q.rhat)) max_rhat = std::max(max_rhat, q.rhat);
    if (std::isfinite(q.ess)) min_ess = std::min(min_ess, q.ess);
  }
  double div_fraction =
      summary.total_draws > 0 ? double(summary.divergence_count) / summary.total_draws : 0.0;
  json diagnostics{{"max_rhat", max_rhat},
                   {"min_ess", min_ess},
                   {"divergence_count", summary.divergence_count},
                   {"divergence_fraction", div_fraction},
                   {"gates", json{{"rhat", gates.rhat},
                                  {"ess", gates.ess},
                                  {"divergence_fraction", gates.divergence_fraction}}}};
  json chain_info = json::array();
  for (const auto& c : chains) {
    chain_info.push_back(json{{"accept_rate", c.accept_rate},
                              {"divergences", c.divergence_count},
                              {"step_size", c.step_size}});
  }

  ensure_dir(out_dir);
  json result = result_envelope("bayes");
  result["config"] = json{{"in", in_path},
                          {"priors", to_json(priors)},
                          {"sampler", to_json(sampler_cfg)}};
  result["dataset"] = dataset_summary_json(data);
  result["summary"] = to_json(summary);
  result["diagnostics"] = diagnostics;
  result["chains"] = chain_info;
  result["forest"] = to_json(forest);
  write_json_file((fs::path(out_dir) / "result_bayes.json").string(), result);

  bool ok = max_rhat < gates.rhat && min_ess > gates.ess &&
            div_fraction < gates.divergence_fraction;
  if (!ok) {
    err << "diagnostics gate failed: max R-hat " << max_rhat << " (gate " << gates.rhat
        << "), min ESS " << min_ess << " (gate " << gates.ess << "), divergence fraction "
        << div_fraction << " (gate " << gates.divergence_fraction << ")\n";
    return 3;
  }
  return 0;
}

inline int run_evalue(double rr, const std::string& out_dir, std::ostream& out) {
  double e = e_value(rr);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", e);
  out << buf << "\n";
  ensure_dir(out_dir);
  json result = result_envelope("evalue");
  result["config"] = json{{"rr", rr}};
  result["e_value"] = e;
  write_json_file((fs::path(out_dir) / "result_evalue.json").string(), result);
  return 0;
}

inline int run_simulate(const std::string& scenario_path, int replicates,
                        const std::string& out_dir, std::ostream& out) {
  SimScenario scenario = scenario_from_json(read_json_file(scenario_path));
  if (replicates < 0) throw DataError("--replicates must be >= 0");
  ensure_dir(out_dir);
  json result = result_envelope("simulate");
  result["config"] = json{{"scenario", to_json(scenario)}, {"replicates", replicates}};
  json files = json::array();
  json truths = json::array();
  for (int r = 0; r < replicates; ++r) {
    SimScenario s = scenario;
    s.seed = scenario.seed + std::uint64_t(r);
    auto [data, truth] = simulate_dataset(s);
    char name[32];
    std::snprintf(name, sizeof(name), "dataset_%03d.csv", r);
    write_csv((fs::path(out_dir) / name).string(), data);
    files.push_back(name);
    json per_study = json::array();
    for (const auto& t : truth.studies) {
      per_study.push_back(json{{"delta_i", t.delta_i},
                               {"control_mediated", t.control_mediated},
                               {"intervention_mediated", t.intervention_mediated},
                               {"mu_control", t.mu_control},
                               {"mu_intervention", t.mu_intervention},
                               {"p_control", t.p_control},
                               {"p_intervention", t.p_intervention}});
    }
    truths.push_back(json{{"seed", s.seed},
                          {"theta", truth.theta},
                          {"beta", truth.beta},
                          {"base_rate", truth.base_rate},
                          {"threshold_loc", truth.threshold_loc},
                          {"eta", truth.eta},
                          {"studies", per_study}});
    out << name << "\n";
  }
  result["files"] = files;
  result["ground_truth"] = truths;
  write_json_file((fs::path(out_dir) / "result_simulate.json").string(), result);
  return 0;
}

inline int run_report(const std::string& from_path, const std::string& format,
                      const std::string& out_file) {
  json result = read_json_file(from_path);
  if (!result.contains("forest")) {
    throw DataError("'" + from_path + "' carries no forest block to render");
  }
  ForestPlotSpec spec = forest_from_json(result.at("forest"));
  std::string rendered = format == "svg" ? render_forest_svg(spec) : render_forest_text(spec);
  write_text_file(out_file, rendered);
  return 0;
}

/// Full CLI; invocable in-process. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"meta-analysis of binary two-arm studies with a hidden decision mediator"};
  app.require_subcommand(1);

  std::string in_path, out_dir = ".", priors_path, measure = "rr";
  double conf = 0.95;
  std::string zero_cell = "haldane-anscombe";
  auto* fixed = app.add_subcommand("fixed", "classical fixed-effect pooling");
  fixed->add_option("--measure", measure, "rr | peto-or")
      ->check(CLI::IsMember({"rr", "peto-or"}));
  fixed->add_option("--in", in_path, "study CSV")->required();
  fixed->add_option("--conf", conf, "confidence level, default 0.95");
  fixed->add_option("--zero-cell", zero_cell, "haldane-anscombe | exclude (RR path only)")
      ->check(CLI::IsMember({"haldane-anscombe", "exclude"}));
  fixed->add_option("--out", out_dir, "output directory, default .");

  SamplerConfig sampler_cfg;
  DiagnosticsGates gates;
  auto* bayes = app.add_subcommand("bayes", "hierarchical Bayesian mediator model");
  bayes->add_option("--in", in_path, "study CSV")->required();
  bayes->add_option("--chains", sampler_cfg.chains, "default 4");
  bayes->add_option("--warmup", sampler_cfg.warmup_draws, "default 1000");
  bayes->add_option("--draws", sampler_cfg.retained_draws, "retained draws, default 1000");
  bayes->add_option("--seed", sampler_cfg.seed, "64-bit seed");
  bayes->add_option("--target-accept", sampler_cfg.target_accept, "default 0.8");
  bayes->add_option("--max-tree-depth", sampler_cfg.max_tree_depth, "default 10");
  bayes->add_option("--priors", priors_path, "prior config JSON");
  bayes->add_option("--rhat-gate", gates.rhat, "default 1.01");
  bayes->add_option("--ess-gate", gates.ess, "default 400");
  bayes->add_option("--divergence-gate", gates.divergence_fraction, "default 0.01");
  bayes->add_option("--out", out_dir, "output directory, default .");

  double rr = 0.0;
  auto* evalue = app.add_subcommand("evalue", "E-value for a relative risk");
  evalue->add_option("--rr", rr, "relative risk point estimate")->required();
  evalue->add_option("--out", out_dir, "output directory, default .");

  std::string scenario_path;
  int replicates = 1;
  auto* simulate = app.add_subcommand("simulate", "draw synthetic confounded datasets");
  simulate->add_option("--scenario", scenario_path, "scenario JSON")->required();
  simulate->add_option("--out", out_dir, "output directory")->required();
  simulate->add_option("--replicates", replicates, "number of datasets, default 1");

  std::string from_path, format = "text", out_file;
  auto* report = app.add_subcommand("report", "render a stored result");
  report->add_option("--from", from_path, "result JSON")->required();
  report->add_option("--format", format, "svg | text")
      ->check(CLI::IsMember({"svg", "text"}));
  report->add_option("--out", out_file, "output file")->required();

  std::vector<const char*> argv;
  argv.push_back("hbmeta");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (fixed->parsed()) return run_fixed(in_path, measure, conf, zero_cell, out_dir, out, err);
    if (bayes->parsed()) {
      if (sampler_cfg.retained_draws < 100) {
        throw DataError("--draws must be at least 100 for summaries");
      }
      return run_bayes(in_path, priors_path, sampler_cfg, gates, out_dir, out, err);
    }
    if (evalue->parsed()) return run_evalue(rr, out_dir, out);
    if (simulate->parsed()) return run_simulate(scenario_path, replicates, out_dir, out);
    if (report->parsed()) return run_report(from_path, format, out_file);
  } catch (const DiagnosticsFailure& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const AllDivergent& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace hbmeta::cli
