#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hbmeta/classical.hpp"
#include "hbmeta/diagnostics.hpp"
#include "hbmeta/model.hpp"
#include "hbmeta/sampler.hpp"
#include "hbmeta/types.hpp"

// Forward sampler of the generative story with fixed hyper-parameters, the
// confounding-recovery experiment built on it, and simulation-based
// calibration of the model+sampler pair.

namespace hbmeta {

struct SimScenario {
  int num_studies = 6;
  /// (intervention total, control total) per study; a single entry is
  /// broadcast to every study.
  std::vector<std::pair<std::int64_t, std::int64_t>> arm_sizes = {{173, 500}};
  double true_theta = 0.0;
  double true_beta = 0.0;
  double base_rate = 0.32;
  double threshold_loc = 0.0;
  double eta = 30.0;  // Beta concentration, fixed at the prior median
  std::uint64_t seed = 0;
};

struct StudyTruth {
  double delta_i = 0.0;
  double control_mediated = 0.0;
  double intervention_mediated = 0.0;
  double mu_control = 0.0;
  double mu_intervention = 0.0;
  double p_control = 0.0;
  double p_intervention = 0.0;
};

struct GroundTruth {
  double theta = 0.0;
  double beta = 0.0;
  double base_rate = 0.0;
  double threshold_loc = 0.0;
  double eta = 0.0;
  std::vector<StudyTruth> studies;
};

namespace sim_detail {

inline void validate_scenario(const SimScenario& s) {
  if (s.num_studies < 1) throw DataError("scenario needs at least one study");
  if (!(s.base_rate > 0.0 && s.base_rate < 1.0)) {
    throw RateOutOfRange("scenario base_rate must be in (0,1)");
  }
  if (!(s.eta > 0.0)) throw DataError("scenario eta must be positive");
  if (s.arm_sizes.empty()) throw DataError("scenario needs arm sizes");
  if (s.arm_sizes.size() != 1 && int(s.arm_sizes.size()) != s.num_studies) {
    throw DataError("arm_sizes must have one entry or one entry per study");
  }
  for (auto [ni, nc] : s.arm_sizes) {
    if (ni < 1 || nc < 1) throw DataError("arm sizes must be >= 1");
  }
}

inline double clamp_unit(double v) {
  if (v < 1e-15) return 1e-15;
  if (v > 1.0 - 1e-15) return 1.0 - 1e-15;
  return v;
}

}  // namespace sim_detail

/// Draws one synthetic dataset from the generative story with theta, beta,
/// mu, delta fixed at the scenario values. Deterministic given the seed.
inline std::pair<MetaDataset, GroundTruth> simulate_dataset(const SimScenario& s) {
  sim_detail::validate_scenario(s);
  Rng rng = Rng::stream(s.seed, 0);
  MetaDataset data;
  data.outcome_name = "event";
  data.intervention_name = "intervention";
  data.control_name = "control";
  GroundTruth truth;
  truth.theta = s.true_theta;
  truth.beta = s.true_beta;
  truth.base_rate = s.base_rate;
  truth.threshold_loc = s.threshold_loc;
  truth.eta = s.eta;
  double base_logit = math::logit(s.base_rate);
  for (int i = 0; i < s.num_studies; ++i) {
    auto [n_intervention, n_control] =
        s.arm_sizes[s.arm_sizes.size() == 1 ? 0 : size_t(i)];
    StudyTruth t;
    t.delta_i = dists::sample(dists::Normal{s.threshold_loc, 1.0}, rng);
    t.control_mediated =
        dists::sample(dists::TruncatedNormalLeft{0.0, 1.0, t.delta_i}, rng);
    t.intervention_mediated =
        dists::sample(dists::TruncatedNormalRight{0.0, 1.0, t.delta_i}, rng);
    t.mu_control = sim_detail::clamp_unit(
        math::sigmoid(base_logit + s.true_beta * t.control_mediated));
    t.mu_intervention = sim_detail::clamp_unit(
        math::sigmoid(base_logit + s.true_beta * t.intervention_mediated + s.true_theta));
    t.p_control = sim_detail::clamp_unit(
        dists::sample(dists::Beta{t.mu_control * s.eta, (1.0 - t.mu_control) * s.eta}, rng));
    t.p_intervention = sim_detail::clamp_unit(dists::sample(
        dists::Beta{t.mu_intervention * s.eta, (1.0 - t.mu_intervention) * s.eta}, rng));
    StudyRecord rec;
    rec.id = "S" + std::to_string(i + 1);
    rec.label = "Simulated study " + std::to_string(i + 1);
    rec.intervention_events = rng.binomial(n_intervention, t.p_intervention);
    rec.intervention_nonevents = n_intervention - rec.intervention_events;
    rec.control_events = rng.binomial(n_control, t.p_control);
    rec.control_nonevents = n_control - rec.control_events;
    data.studies.push_back(rec);
    truth.studies.push_back(t);
  }
  return {std::move(data), std::move(truth)};
}

struct ReplicateOutcome {
  std::uint64_t seed = 0;
  double classical_rr = 1.0;
  double classical_p = 1.0;
  double bayes_total_rr_mean = 1.0;
  double bayes_hdi_low = 1.0;
  double bayes_hdi_high = 1.0;
  bool classical_significant = false;
  bool bayes_covers_one = false;
  bool failed = false;
  std::string failure;
};

struct ConfoundingReport {
  int replicates = 0;
  int completed = 0;
  int classical_significant = 0;
  int bayes_covers_one = 0;
  std::vector<ReplicateOutcome> rows;

  double classical_detection_fraction() const {
    return completed > 0 ? double(classical_significant) / completed : 0.0;
  }
  double bayes_coverage_fraction() const {
    return completed > 0 ? double(bayes_covers_one) / completed : 0.0;
  }
};

/// For each replicate: simulate under the scenario (true_theta must be 0),
/// pool classically, run the full Bayesian pipeline, and record whether
/// the classical p flags an effect and whether the total RR HDI covers 1.
/// Per-replicate sampler failures are recorded, not fatal.
inline ConfoundingReport confounding_demo(const SimScenario& scenario, int replicates,
                                          const PriorConfig& priors = {},
                                          const SamplerConfig& sampler_cfg = {}) {
  if (scenario.true_theta != 0.0) {
    throw DataError("confounding_demo requires true_theta = 0");
  }
  ConfoundingReport report;
  report.replicates = replicates;
  for (int r = 0; r < replicates; ++r) {
    SimScenario s = scenario;
    s.seed = scenario.seed + std::uint64_t(r);
    ReplicateOutcome row;
    row.seed = s.seed;
    try {
      auto [data, truth] = simulate_dataset(s);
      auto est = fixed_effect_rr(validate_dataset(data));
      row.classical_rr = std::exp(est.point);
      row.classical_p = est.p_value;
      row.classical_significant = est.p_value < 0.05;

      MediatedModel model(data, priors);
      SamplerConfig cfg = sampler_cfg;
      cfg.seed = sampler_cfg.seed + std::uint64_t(r) * 7919;
      auto chains = run_chains(model, cfg);
      PosteriorSummary summary = summarize(chains, model);
      const QuantitySummary* rr = summary.find("total_rr");
      if (rr == nullptr) throw Error("summary missing total_rr");
      row.bayes_total_rr_mean = rr->mean;
      row.bayes_hdi_low = rr->hdi_low;
      row.bayes_hdi_high = rr->hdi_high;
      row.bayes_covers_one = rr->hdi_low <= 1.0 && 1.0 <= rr->hdi_high;
      ++report.completed;
      if (row.classical_significant) ++report.classical_significant;
      if (row.bayes_covers_one) ++report.bayes_covers_one;
    } catch (const std::exception& e) {
      row.failed = true;
      row.failure = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

struct SbcOptions {
  int num_studies = 3;
  std::vector<std::pair<std::int64_t, std::int64_t>> arm_sizes = {{80, 80}};
  PriorConfig priors = {};
  int bins = 20;
  int ranks_per_sim = 99;  // rank in 0..99 so 20 bins hold 5 values each
  std::uint64_t seed = 0;
};

struct SbcResult {
  std::vector<std::string> parameters;
  std::vector<std::vector<int>> histograms;  // one per parameter
  std::vector<double> chi_square_p;
  int completed = 0;
  int failures = 0;
};

/// Simulation-based calibration: draw the ground truth from the full
/// prior, simulate data, sample the posterior, and record the rank of the
/// truth among thinned posterior draws. Uniform ranks are the pass signal.
inline SbcResult sbc_ranks(const SamplerConfig& sampler_cfg, int num_sims,
                           const SbcOptions& opt = {}) {
  if (num_sims < 50) throw InsufficientSims("SBC needs at least 50 simulations");
  const std::vector<std::string> params = {"theta", "beta", "mu"};
  SbcResult result;
  result.parameters = params;
  result.histograms.assign(params.size(), std::vector<int>(opt.bins, 0));
  result.chi_square_p.assign(params.size(), 1.0);

  // Dataset shell reused for every simulation.
  MetaDataset shell;
  for (int i = 0; i < opt.num_studies; ++i) {
    StudyRecord rec;
    rec.id = "S" + std::to_string(i + 1);
    rec.label = rec.id;
    shell.studies.push_back(rec);
  }

  for (int sim = 0; sim < num_sims; ++sim) {
    try {
      Rng rng = Rng::stream(opt.seed, std::uint64_t(sim) + 1);
      MediatedModel prior_model(shell, opt.priors);
      std::vector<double> truth_x = prior_model.sample_unconstrained_prior(rng);
      DecodedParams truth = prior_model.decode(truth_x);

      MetaDataset data = shell;
      for (int i = 0; i < opt.num_studies; ++i) {
        auto [ni, nc] = opt.arm_sizes[opt.arm_sizes.size() == 1 ? 0 : size_t(i)];
        data.studies[i].intervention_events =
            rng.binomial(ni, truth.studies[i].p_intervention);
        data.studies[i].intervention_nonevents =
            ni - data.studies[i].intervention_events;
        data.studies[i].control_events = rng.binomial(nc, truth.studies[i].p_control);
        data.studies[i].control_nonevents = nc - data.studies[i].control_events;
      }

      MediatedModel model(data, opt.priors);
      SamplerConfig cfg = sampler_cfg;
      cfg.seed = sampler_cfg.seed ^ (0x5851F42D4C957F2DULL * (std::uint64_t(sim) + 1));
      auto chains = run_chains(model, cfg);

      // Thin the pooled draws down to ranks_per_sim approximately
      // independent values per parameter.
      const int target_idx[3] = {ParamLayout::kTheta, ParamLayout::kBeta,
                                 ParamLayout::kMuLogit};
      double truth_val[3] = {truth.theta, truth.beta, truth.mu};
      int total = 0;
      for (const auto& c : chains) total += c.draws.rows();
      for (size_t p = 0; p < params.size(); ++p) {
        std::vector<double> pooled;
        pooled.reserve(total);
        for (const auto& c : chains) {
          for (int r = 0; r < c.draws.rows(); ++r) {
            double v = c.draws(r, target_idx[p]);
            pooled.push_back(p == 2 ? math::sigmoid(v) : v);
          }
        }
        int rank = 0;
        for (int j = 0; j < opt.ranks_per_sim; ++j) {
          size_t idx = size_t(double(j) * double(pooled.size()) / double(opt.ranks_per_sim));
          if (pooled[idx] < truth_val[p]) ++rank;
        }
        int bin = rank * opt.bins / (opt.ranks_per_sim + 1);
        result.histograms[p][size_t(bin)] += 1;
      }
      ++result.completed;
    } catch (const std::exception&) {
      ++result.failures;
    }
  }

  for (size_t p = 0; p < params.size(); ++p) {
    double expected = double(result.completed) / double(opt.bins);
    if (expected <= 0.0) continue;
    double x2 = 0.0;
    for (int c : result.histograms[p]) {
      double d = double(c) - expected;
      x2 += d * d / expected;
    }
    result.chi_square_p[p] = math::chi_square_upper_tail(x2, opt.bins - 1);
  }
  return result;
}

}  // namespace hbmeta
