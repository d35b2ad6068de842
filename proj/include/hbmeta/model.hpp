#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hbmeta/dists.hpp"
#include "hbmeta/rng.hpp"
#include "hbmeta/types.hpp"

// The decision-mediated hierarchical model. A study's intervention arm is
// the sub-population whose unobserved decision score fell at or below the
// study threshold delta_i, the control arm the one above it; both arm
// event probabilities share a common base rate moved on the logit scale by
// the mediator value and, for the intervention arm, the treatment effect.
//
// All inference runs on an unconstrained vector: positives go through log,
// unit-interval quantities through logit, and the truncated mediator draws
// through a moving exp-shift around the threshold. The effect coordinates
// theta, beta, theta_i are stored non-centered (standard-normal pre-images
// scaled by tau^2 / tau_B^2 on decode); the centered layout suffers a
// severe funnel under the half-Cauchy scale priors and cannot reach the
// sampler quality gates. log_joint includes every change-of-variable
// Jacobian, so MCMC on the unconstrained vector targets the intended
// posterior.

namespace hbmeta {

/// Hyper-prior constants. Defaults follow the reference generative story:
/// log eta ~ Logistic(log 30, 1), mu ~ Beta(12, 25),
/// tau, tau_B ~ HalfCauchy(sqrt(0.5/3)), mediator and threshold priors
/// standard normal. The normal "second parameter" of the effect priors is
/// the scale tau^2 (matching the reference implementation, which passes
/// tau*tau as a scale, not a variance).
struct PriorConfig {
  double eta_log_loc = 3.4011973816621555;  // log 30
  double mu_alpha = 12.0;
  double mu_beta = 25.0;
  double tau_scale = 0.408248290463863;  // sqrt(0.5/3)
  double tau_b_scale = 0.408248290463863;
  double mediator_prior_scale = 1.0;
  double threshold_scale = 1.0;
};

/// Heuristic informative Beta prior for a known population rate:
/// P = rate * 50, N = (1 - rate) * 50.
inline std::pair<double, double> beta_prior_from_rate(double population_rate) {
  if (!(population_rate > 0.0 && population_rate < 1.0)) {
    throw RateOutOfRange("population rate must be in (0,1)");
  }
  return {population_rate * 50.0, (1.0 - population_rate) * 50.0};
}

struct StudyParams {
  double theta_i = 0.0;
  double delta_i = 0.0;
  double control_mediated = 0.0;       // >= delta_i
  double intervention_mediated = 0.0;  // <= delta_i
  double p_control = 0.5;
  double p_intervention = 0.5;
};

struct DecodedParams {
  double eta = 30.0;
  double mu = 0.5;
  double tau = 1.0;
  double tau_b = 1.0;
  double theta = 0.0;
  double beta = 0.0;
  double mediator_prior = 0.0;
  double delta = 0.0;
  std::vector<StudyParams> studies;
};

struct ModelDerived {
  std::vector<double> rr_per_study;
  double total_rr = 1.0;
};

/// Named layout of the flat unconstrained vector: 8 global coordinates
/// followed by 6 per study. kTheta/kBeta hold non-centered pre-images
/// (theta = tau^2 * x[kTheta], beta = tau_B^2 * x[kBeta]); the per-study
/// theta_i slot likewise holds (theta_i - theta) / tau^2, and the event
/// probabilities are stored as scaled logit residuals around their arm
/// mean, p = sigmoid(logit(mu_arm) + z / sqrt(eta)). Both choices keep the
/// sampler out of the hyper-parameter funnels; decoded values are
/// unchanged.
struct ParamLayout {
  int num_studies = 0;

  static constexpr int kLogEta = 0;
  static constexpr int kMuLogit = 1;
  static constexpr int kLogTau = 2;
  static constexpr int kLogTauB = 3;
  static constexpr int kTheta = 4;
  static constexpr int kBeta = 5;
  static constexpr int kMediatorPrior = 6;
  static constexpr int kDelta = 7;
  static constexpr int kGlobals = 8;

  int dim() const { return kGlobals + 6 * num_studies; }
  int theta_i(int i) const { return kGlobals + 6 * i + 0; }
  int delta_i(int i) const { return kGlobals + 6 * i + 1; }
  int control_raw(int i) const { return kGlobals + 6 * i + 2; }
  int intervention_raw(int i) const { return kGlobals + 6 * i + 3; }
  int p_control_resid(int i) const { return kGlobals + 6 * i + 4; }
  int p_intervention_resid(int i) const { return kGlobals + 6 * i + 5; }
};

class MediatedModel {
 public:
  MediatedModel(MetaDataset data, PriorConfig priors = {})
      : data_(std::move(data)), priors_(priors) {
    layout_.num_studies = int(data_.studies.size());
    for (const auto& s : data_.studies) {
      ie_.push_back(double(s.intervention_events));
      ni_.push_back(double(s.intervention_total()));
      ce_.push_back(double(s.control_events));
      nc_.push_back(double(s.control_total()));
    }
    build_quantity_names();
  }

  const MetaDataset& data() const { return data_; }
  const PriorConfig& priors() const { return priors_; }
  const ParamLayout& layout() const { return layout_; }
  int num_studies() const { return layout_.num_studies; }
  int dim() const { return layout_.dim(); }

  DecodedParams decode(const std::vector<double>& x) const {
    check_dim(x);
    DecodedParams p;
    p.eta = std::exp(x[ParamLayout::kLogEta]);
    p.mu = math::sigmoid(x[ParamLayout::kMuLogit]);
    p.tau = std::exp(x[ParamLayout::kLogTau]);
    p.tau_b = std::exp(x[ParamLayout::kLogTauB]);
    double s_theta = p.tau * p.tau;
    double s_beta = p.tau_b * p.tau_b;
    p.theta = s_theta * x[ParamLayout::kTheta];
    p.beta = s_beta * x[ParamLayout::kBeta];
    p.mediator_prior = x[ParamLayout::kMediatorPrior];
    p.delta = x[ParamLayout::kDelta];
    double inv_sqrt_eta = std::exp(-0.5 * x[ParamLayout::kLogEta]);
    double ml = x[ParamLayout::kMuLogit];
    p.studies.resize(num_studies());
    for (int i = 0; i < num_studies(); ++i) {
      auto& sp = p.studies[i];
      sp.theta_i = p.theta + s_theta * x[layout_.theta_i(i)];
      sp.delta_i = x[layout_.delta_i(i)];
      sp.control_mediated = sp.delta_i + std::exp(x[layout_.control_raw(i)]);
      sp.intervention_mediated = sp.delta_i - std::exp(x[layout_.intervention_raw(i)]);
      double a_control = ml + p.beta * sp.control_mediated;
      double a_intervention = ml + p.beta * sp.intervention_mediated + sp.theta_i;
      sp.p_control =
          math::sigmoid(a_control + x[layout_.p_control_resid(i)] * inv_sqrt_eta);
      sp.p_intervention =
          math::sigmoid(a_intervention + x[layout_.p_intervention_resid(i)] * inv_sqrt_eta);
    }
    return p;
  }

  std::vector<double> encode(const DecodedParams& p) const {
    std::vector<double> x(dim());
    double s_theta = p.tau * p.tau;
    double s_beta = p.tau_b * p.tau_b;
    x[ParamLayout::kLogEta] = std::log(p.eta);
    x[ParamLayout::kMuLogit] = math::logit(p.mu);
    x[ParamLayout::kLogTau] = std::log(p.tau);
    x[ParamLayout::kLogTauB] = std::log(p.tau_b);
    x[ParamLayout::kTheta] = p.theta / s_theta;
    x[ParamLayout::kBeta] = p.beta / s_beta;
    x[ParamLayout::kMediatorPrior] = p.mediator_prior;
    x[ParamLayout::kDelta] = p.delta;
    double sqrt_eta = std::sqrt(p.eta);
    for (int i = 0; i < num_studies(); ++i) {
      const auto& sp = p.studies[i];
      x[layout_.theta_i(i)] = (sp.theta_i - p.theta) / s_theta;
      x[layout_.delta_i(i)] = sp.delta_i;
      x[layout_.control_raw(i)] =
          std::log(std::max(sp.control_mediated - sp.delta_i, 1e-300));
      x[layout_.intervention_raw(i)] =
          std::log(std::max(sp.delta_i - sp.intervention_mediated, 1e-300));
      double a_control = x[ParamLayout::kMuLogit] + p.beta * sp.control_mediated;
      double a_intervention =
          x[ParamLayout::kMuLogit] + p.beta * sp.intervention_mediated + sp.theta_i;
      x[layout_.p_control_resid(i)] = (math::logit(sp.p_control) - a_control) * sqrt_eta;
      x[layout_.p_intervention_resid(i)] =
          (math::logit(sp.p_intervention) - a_intervention) * sqrt_eta;
    }
    return x;
  }

  /// Joint log density on the unconstrained space, all Jacobians included.
  /// Returns -infinity where a decoded quantity saturates in floating
  /// point; a NaN anywhere raises NonFiniteDensity.
  double log_joint(const std::vector<double>& x) const {
    std::vector<double> scratch;
    return eval(x, nullptr, scratch);
  }

  /// Fused value-and-gradient evaluation; grad is resized to dim().
  /// When the value is -infinity the gradient content is all zeros.
  double log_joint_grad(const std::vector<double>& x, std::vector<double>& grad) const {
    return eval(x, &grad, grad);
  }

  std::vector<double> grad_log_joint(const std::vector<double>& x) const {
    std::vector<double> g;
    double lp = log_joint_grad(x, g);
    if (std::isnan(lp)) throw NonFiniteDensity("log_joint evaluated to NaN");
    for (double v : g) {
      if (std::isnan(v)) throw NonFiniteDensity("gradient contains NaN");
    }
    return g;
  }

  ModelDerived derived_quantities(const std::vector<double>& x) const {
    DecodedParams p = decode(x);
    ModelDerived d;
    d.total_rr = math::sigmoid(x[ParamLayout::kMuLogit] + p.theta) / p.mu;
    d.rr_per_study.reserve(p.studies.size());
    for (const auto& sp : p.studies) {
      d.rr_per_study.push_back(sp.p_intervention / sp.p_control);
    }
    return d;
  }

  /// Draw from the prior directly on the unconstrained space. Arm means
  /// and event probabilities are clamped away from exact saturation so the
  /// draw always encodes.
  std::vector<double> sample_unconstrained_prior(Rng& rng) const {
    DecodedParams p;
    double le = dists::sample(dists::Logistic{priors_.eta_log_loc, 1.0}, rng);
    p.eta = std::exp(le);
    p.mu = clamp_unit(dists::sample(dists::Beta{priors_.mu_alpha, priors_.mu_beta}, rng));
    p.tau = dists::sample(dists::HalfCauchy{priors_.tau_scale}, rng);
    p.tau_b = dists::sample(dists::HalfCauchy{priors_.tau_b_scale}, rng);
    double s_theta = p.tau * p.tau;
    double s_beta = p.tau_b * p.tau_b;
    p.theta = dists::sample(dists::Normal{0.0, s_theta}, rng);
    p.beta = dists::sample(dists::Normal{0.0, s_beta}, rng);
    p.mediator_prior = dists::sample(dists::Normal{0.0, priors_.mediator_prior_scale}, rng);
    p.delta = dists::sample(dists::Normal{0.0, priors_.threshold_scale}, rng);
    p.studies.resize(num_studies());
    for (int i = 0; i < num_studies(); ++i) {
      auto& sp = p.studies[i];
      sp.theta_i = dists::sample(dists::Normal{p.theta, s_theta}, rng);
      sp.delta_i = dists::sample(dists::Normal{p.delta, 1.0}, rng);
      sp.control_mediated =
          dists::sample(dists::TruncatedNormalLeft{p.mediator_prior, 1.0, sp.delta_i}, rng);
      sp.intervention_mediated =
          dists::sample(dists::TruncatedNormalRight{p.mediator_prior, 1.0, sp.delta_i}, rng);
      double mu_control =
          clamp_unit(math::sigmoid(math::logit(p.mu) + p.beta * sp.control_mediated));
      double mu_intervention = clamp_unit(
          math::sigmoid(math::logit(p.mu) + p.beta * sp.intervention_mediated + sp.theta_i));
      sp.p_control = clamp_unit(
          dists::sample(dists::Beta{mu_control * p.eta, (1.0 - mu_control) * p.eta}, rng));
      sp.p_intervention = clamp_unit(dists::sample(
          dists::Beta{mu_intervention * p.eta, (1.0 - mu_intervention) * p.eta}, rng));
    }
    return encode(p);
  }

  const std::vector<std::string>& quantity_names() const { return quantity_names_; }

  /// Decoded parameters followed by per-study RR and total RR, matching
  /// quantity_names() order.
  void extract_quantities(const std::vector<double>& x, std::vector<double>& out) const {
    DecodedParams p = decode(x);
    out.clear();
    out.reserve(quantity_names_.size());
    out.push_back(p.eta);
    out.push_back(p.mu);
    out.push_back(p.tau);
    out.push_back(p.tau_b);
    out.push_back(p.theta);
    out.push_back(p.beta);
    out.push_back(p.mediator_prior);
    out.push_back(p.delta);
    for (const auto& sp : p.studies) {
      out.push_back(sp.theta_i);
      out.push_back(sp.delta_i);
      out.push_back(sp.control_mediated);
      out.push_back(sp.intervention_mediated);
      out.push_back(sp.p_control);
      out.push_back(sp.p_intervention);
    }
    for (const auto& sp : p.studies) {
      out.push_back(sp.p_intervention / sp.p_control);
    }
    out.push_back(math::sigmoid(x[ParamLayout::kMuLogit] + p.theta) / p.mu);
  }

 private:
  static double clamp_unit(double v) {
    if (v < 1e-15) return 1e-15;
    if (v > 1.0 - 1e-15) return 1.0 - 1e-15;
    return v;
  }

  void check_dim(const std::vector<double>& x) const {
    if (int(x.size()) != dim()) throw DataError("parameter vector has wrong dimension");
  }

  void build_quantity_names() {
    quantity_names_ = {"eta", "mu", "tau", "tau_b", "theta", "beta", "mediator_prior", "delta"};
    for (int i = 0; i < num_studies(); ++i) {
      std::string tag = "[" + std::to_string(i + 1) + "]";
      quantity_names_.push_back("theta_i" + tag);
      quantity_names_.push_back("delta_i" + tag);
      quantity_names_.push_back("control_mediated" + tag);
      quantity_names_.push_back("intervention_mediated" + tag);
      quantity_names_.push_back("p_control" + tag);
      quantity_names_.push_back("p_intervention" + tag);
    }
    for (int i = 0; i < num_studies(); ++i) {
      quantity_names_.push_back("rr[" + std::to_string(i + 1) + "]");
    }
    quantity_names_.push_back("total_rr");
  }

  static constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  /// Single pass over every prior, Jacobian, and likelihood term. When
  /// grad_out is non-null it receives the analytic gradient.
  double eval(const std::vector<double>& x, std::vector<double>* grad_out,
              std::vector<double>& g) const {
    check_dim(x);
    const bool with_grad = grad_out != nullptr;
    if (with_grad) {
      g.assign(dim(), 0.0);
    }
    using namespace dists;
    const ParamLayout& L = layout_;

    const double le = x[ParamLayout::kLogEta];
    const double ml = x[ParamLayout::kMuLogit];
    const double lt = x[ParamLayout::kLogTau];
    const double ltb = x[ParamLayout::kLogTauB];
    const double th_raw = x[ParamLayout::kTheta];
    const double be_raw = x[ParamLayout::kBeta];
    const double mp = x[ParamLayout::kMediatorPrior];
    const double de = x[ParamLayout::kDelta];

    const double eta = std::exp(le);
    const double mu = math::sigmoid(ml);
    const double tau = std::exp(lt);
    const double tau_b = std::exp(ltb);
    const double s_theta = tau * tau;
    const double s_beta = tau_b * tau_b;
    const double th = s_theta * th_raw;
    const double be = s_beta * be_raw;
    if (!std::isfinite(eta) || !(mu > 0.0 && mu < 1.0) || !std::isfinite(s_theta) ||
        !(s_theta > 0.0) || !std::isfinite(s_beta) || !(s_beta > 0.0) ||
        !std::isfinite(th) || !std::isfinite(be)) {
      return kNegInf;
    }

    double lp = 0.0;

    const Logistic eta_prior{priors_.eta_log_loc, 1.0};
    lp += log_pdf(eta_prior, le);
    if (with_grad) g[ParamLayout::kLogEta] += grad_log_pdf(eta_prior, le).d_x;

    const Beta mu_prior{priors_.mu_alpha, priors_.mu_beta};
    lp += log_pdf(mu_prior, mu) + std::log(mu) + std::log1p(-mu);
    if (with_grad) {
      g[ParamLayout::kMuLogit] +=
          grad_log_pdf(mu_prior, mu).d_x * mu * (1.0 - mu) + (1.0 - 2.0 * mu);
    }

    const HalfCauchy tau_prior{priors_.tau_scale};
    lp += log_pdf(tau_prior, tau) + lt;
    if (with_grad) g[ParamLayout::kLogTau] += grad_log_pdf(tau_prior, tau).d_x * tau + 1.0;

    const HalfCauchy tau_b_prior{priors_.tau_b_scale};
    lp += log_pdf(tau_b_prior, tau_b) + ltb;
    if (with_grad) g[ParamLayout::kLogTauB] += grad_log_pdf(tau_b_prior, tau_b).d_x * tau_b + 1.0;

    // Non-centered effect pre-images are standard normal a priori.
    const Normal unit_normal{0.0, 1.0};
    lp += log_pdf(unit_normal, th_raw);
    lp += log_pdf(unit_normal, be_raw);
    if (with_grad) {
      g[ParamLayout::kTheta] += -th_raw;
      g[ParamLayout::kBeta] += -be_raw;
    }

    const Normal mediator_pop_prior{0.0, priors_.mediator_prior_scale};
    lp += log_pdf(mediator_pop_prior, mp);
    if (with_grad) g[ParamLayout::kMediatorPrior] += grad_log_pdf(mediator_pop_prior, mp).d_x;

    const Normal threshold_prior{0.0, priors_.threshold_scale};
    lp += log_pdf(threshold_prior, de);
    if (with_grad) g[ParamLayout::kDelta] += grad_log_pdf(threshold_prior, de).d_x;

    double d_beta_value = 0.0;  // dL/d(beta) accumulated over studies

    for (int i = 0; i < num_studies(); ++i) {
      const double thi_raw = x[L.theta_i(i)];
      const double dei = x[L.delta_i(i)];
      const double cr = x[L.control_raw(i)];
      const double ir = x[L.intervention_raw(i)];
      const double pcl = x[L.p_control_logit(i)];
      const double pil = x[L.p_intervention_logit(i)];

      const double thi = th + s_theta * thi_raw;
      const double ecr = std::exp(cr);
      const double eir = std::exp(ir);
      const double cm = dei + ecr;
      const double im = dei - eir;
      const double pc = math::sigmoid(pcl);
      const double pi = math::sigmoid(pil);
      if (!std::isfinite(cm) || !std::isfinite(im) || !std::isfinite(thi) ||
          !(pc > 0.0 && pc < 1.0) || !(pi > 0.0 && pi < 1.0)) {
        if (with_grad) g.assign(dim(), 0.0);
        return kNegInf;
      }

      lp += log_pdf(unit_normal, thi_raw);
      if (with_grad) g[L.theta_i(i)] += -thi_raw;

      const Normal delta_i_prior{de, 1.0};
      lp += log_pdf(delta_i_prior, dei);
      if (with_grad) {
        auto gd = grad_log_pdf(delta_i_prior, dei);
        g[L.delta_i(i)] += gd.d_x;
        g[ParamLayout::kDelta] += gd.d_loc;
      }

      const TruncatedNormalLeft cm_prior{mp, 1.0, dei};
      lp += log_pdf(cm_prior, cm) + cr;
      if (with_grad) {
        auto gc = grad_log_pdf(cm_prior, cm);
        g[L.control_raw(i)] += gc.d_x * ecr + 1.0;
        g[L.delta_i(i)] += gc.d_x + gc.d_low;
        g[ParamLayout::kMediatorPrior] += gc.d_loc;
      }

      const TruncatedNormalRight im_prior{mp, 1.0, dei};
      lp += log_pdf(im_prior, im) + ir;
      if (with_grad) {
        auto gi = grad_log_pdf(im_prior, im);
        g[L.intervention_raw(i)] += gi.d_x * (-eir) + 1.0;
        g[L.delta_i(i)] += gi.d_x + gi.d_high;
        g[ParamLayout::kMediatorPrior] += gi.d_loc;
      }

      const double mu_control = math::sigmoid(ml + be * cm);
      const double mu_intervention = math::sigmoid(ml + be * im + thi);
      if (!(mu_control > 0.0 && mu_control < 1.0) ||
          !(mu_intervention > 0.0 && mu_intervention < 1.0)) {
        if (with_grad) g.assign(dim(), 0.0);
        return kNegInf;
      }

      const Beta pc_prior{mu_control * eta, (1.0 - mu_control) * eta};
      lp += log_pdf(pc_prior, pc) + std::log(pc) + std::log1p(-pc);
      if (with_grad) {
        auto gp = grad_log_pdf(pc_prior, pc);
        g[L.p_control_logit(i)] += gp.d_x * pc * (1.0 - pc) + (1.0 - 2.0 * pc);
        g[ParamLayout::kLogEta] +=
            (gp.d_alpha * mu_control + gp.d_beta * (1.0 - mu_control)) * eta;
        double d_mu_arm = (gp.d_alpha - gp.d_beta) * eta;
        double slope = d_mu_arm * mu_control * (1.0 - mu_control);
        g[ParamLayout::kMuLogit] += slope;
        d_beta_value += slope * cm;
        g[L.control_raw(i)] += slope * be * ecr;
        g[L.delta_i(i)] += slope * be;
      }

      const Beta pi_prior{mu_intervention * eta, (1.0 - mu_intervention) * eta};
      lp += log_pdf(pi_prior, pi) + std::log(pi) + std::log1p(-pi);
      double d_thi_value = 0.0;  // dL/d(theta_i)
      if (with_grad) {
        auto gp = grad_log_pdf(pi_prior, pi);
        g[L.p_intervention_logit(i)] += gp.d_x * pi * (1.0 - pi) + (1.0 - 2.0 * pi);
        g[ParamLayout::kLogEta] +=
            (gp.d_alpha * mu_intervention + gp.d_beta * (1.0 - mu_intervention)) * eta;
        double d_mu_arm = (gp.d_alpha - gp.d_beta) * eta;
        double slope = d_mu_arm * mu_intervention * (1.0 - mu_intervention);
        g[ParamLayout::kMuLogit] += slope;
        d_beta_value += slope * im;
        g[L.intervention_raw(i)] += slope * be * (-eir);
        g[L.delta_i(i)] += slope * be;
        d_thi_value += slope;
      }

      lp += math::lchoose(std::int64_t(ni_[i]), std::int64_t(ie_[i])) +
            ie_[i] * std::log(pi) + (ni_[i] - ie_[i]) * std::log1p(-pi);
      lp += math::lchoose(std::int64_t(nc_[i]), std::int64_t(ce_[i])) +
            ce_[i] * std::log(pc) + (nc_[i] - ce_[i]) * std::log1p(-pc);
      if (with_grad) {
        g[L.p_intervention_logit(i)] += ie_[i] - ni_[i] * pi;
        g[L.p_control_logit(i)] += ce_[i] - nc_[i] * pc;

        // theta_i = s_theta * (th_raw + thi_raw), so the likelihood pull on
        // theta_i reaches the raw slot, the global effect, and log tau.
        g[L.theta_i(i)] += d_thi_value * s_theta;
        g[ParamLayout::kTheta] += d_thi_value * s_theta;
        g[ParamLayout::kLogTau] += d_thi_value * 2.0 * s_theta * (th_raw + thi_raw);
      }
    }

    if (with_grad) {
      g[ParamLayout::kBeta] += d_beta_value * s_beta;
      g[ParamLayout::kLogTauB] += d_beta_value * 2.0 * s_beta * be_raw;
    }

    if (std::isnan(lp)) throw NonFiniteDensity("log_joint evaluated to NaN");
    if (lp == kNegInf && with_grad) g.assign(dim(), 0.0);
    return lp;
  }

  MetaDataset data_;
  PriorConfig priors_;
  ParamLayout layout_;
  std::vector<double> ie_, ni_, ce_, nc_;
  std::vector<std::string> quantity_names_;
};

}  // namespace hbmeta
