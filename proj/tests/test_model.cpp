#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hbmeta/model.hpp"

using namespace hbmeta;
using Catch::Approx;

namespace {

MetaDataset k_studies(int k) {
  MetaDataset d;
  int as[] = {84, 90, 77, 102, 64, 88};
  int cs[] = {150, 160, 139, 171, 148, 155};
  for (int i = 0; i < k; ++i) {
    StudyRecord s;
    s.id = "S" + std::to_string(i + 1);
    s.label = s.id;
    s.intervention_events = as[i % 6];
    s.intervention_nonevents = 173 - as[i % 6];
    s.control_events = cs[i % 6];
    s.control_nonevents = 500 - cs[i % 6];
    d.studies.push_back(s);
  }
  return d;
}

MetaDataset empty_dataset() { return MetaDataset{}; }

std::vector<double> random_state(const MediatedModel& m, Rng& rng, double spread = 1.5) {
  std::vector<double> x(m.dim());
  for (auto& v : x) v = spread * (2.0 * rng.uniform01() - 1.0);
  return x;
}

}  // namespace

TEST_CASE("layout dimension is 8 + 6k", "[model]") {
  CHECK(MediatedModel(empty_dataset()).dim() == 8);
  CHECK(MediatedModel(k_studies(1)).dim() == 14);
  CHECK(MediatedModel(k_studies(6)).dim() == 44);
}

TEST_CASE("decode then encode is the identity", "[model]") {
  MediatedModel m(k_studies(3));
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_state(m, rng);
    auto back = m.encode(m.decode(x));
    for (int i = 0; i < m.dim(); ++i) {
      CHECK(back[i] == Approx(x[i]).margin(1e-12));
    }
  }
}

TEST_CASE("decoded values satisfy the domain constraints", "[model]") {
  MediatedModel m(k_studies(4));
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = m.decode(random_state(m, rng, 3.0));
    CHECK(p.mu > 0.0);
    CHECK(p.mu < 1.0);
    CHECK(p.tau > 0.0);
    CHECK(p.tau_b > 0.0);
    for (const auto& sp : p.studies) {
      CHECK(sp.control_mediated >= sp.delta_i);
      CHECK(sp.intervention_mediated <= sp.delta_i);
      CHECK(sp.p_control > 0.0);
      CHECK(sp.p_control < 1.0);
      CHECK(sp.p_intervention > 0.0);
      CHECK(sp.p_intervention < 1.0);
    }
  }
}

TEST_CASE("k=0 log joint is the sum of the eight global prior terms", "[model]") {
  PriorConfig pc;
  MediatedModel m(empty_dataset(), pc);
  std::vector<double> x = {3.2, -0.8, -0.9, -1.1, 0.15, -0.25, 0.4, -0.6};
  double mu = math::sigmoid(x[1]);
  double tau = std::exp(x[2]);
  double tau_b = std::exp(x[3]);
  double expected = 0.0;
  expected += dists::log_pdf(dists::Logistic{pc.eta_log_loc, 1.0}, x[0]);
  expected += dists::log_pdf(dists::Beta{pc.mu_alpha, pc.mu_beta}, mu) + std::log(mu) +
              std::log1p(-mu);
  expected += dists::log_pdf(dists::HalfCauchy{pc.tau_scale}, tau) + x[2];
  expected += dists::log_pdf(dists::HalfCauchy{pc.tau_b_scale}, tau_b) + x[3];
  // non-centered effect pre-images carry standard normal priors
  expected += dists::log_pdf(dists::Normal{0.0, 1.0}, x[4]);
  expected += dists::log_pdf(dists::Normal{0.0, 1.0}, x[5]);
  expected += dists::log_pdf(dists::Normal{0.0, pc.mediator_prior_scale}, x[6]);
  expected += dists::log_pdf(dists::Normal{0.0, pc.threshold_scale}, x[7]);
  CHECK(m.log_joint(x) == Approx(expected).margin(1e-12));
}

TEST_CASE("non-centered coordinates decode to the centered story", "[model]") {
  // The joint density of (decoded theta, tau) under the non-centered
  // coordinates must match the centered composition N(theta; 0, tau^2)
  // after dividing out the reparameterization Jacobian s_theta.
  PriorConfig pc;
  MediatedModel m(empty_dataset(), pc);
  std::vector<double> x = {3.2, -0.8, -0.4, -1.1, 0.7, -0.25, 0.4, -0.6};
  auto p = m.decode(x);
  double s_theta = p.tau * p.tau;
  CHECK(p.theta == Approx(s_theta * x[4]).epsilon(1e-12));
  CHECK(dists::log_pdf(dists::Normal{0.0, 1.0}, x[4]) - std::log(s_theta) ==
        Approx(dists::log_pdf(dists::Normal{0.0, s_theta}, p.theta)).margin(1e-12));
}

TEST_CASE("one-study log joint matches a term-by-term oracle", "[model]") {
  PriorConfig pc;
  MetaDataset data = k_studies(1);
  MediatedModel m(data, pc);
  std::vector<double> x = {3.5, -0.7, -1.0, -1.2, 0.1, -0.3, 0.2, -0.1,
                           0.05, 0.3, -0.4, -0.2, -0.75, -0.55};

  // oracle assembled from individually tested kernels
  double eta = std::exp(x[0]);
  double mu = math::sigmoid(x[1]);
  double tau = std::exp(x[2]);
  double tau_b = std::exp(x[3]);
  double theta = tau * tau * x[4], beta = tau_b * tau_b * x[5], mp = x[6], delta = x[7];
  double theta_i = theta + tau * tau * x[8], delta_i = x[9];
  double cm = delta_i + std::exp(x[10]);
  double im = delta_i - std::exp(x[11]);
  double p_c = math::sigmoid(x[12]);
  double p_i = math::sigmoid(x[13]);

  double expected = 0.0;
  expected += dists::log_pdf(dists::Logistic{pc.eta_log_loc, 1.0}, x[0]);
  expected += dists::log_pdf(dists::Beta{pc.mu_alpha, pc.mu_beta}, mu) + std::log(mu) +
              std::log1p(-mu);
  expected += dists::log_pdf(dists::HalfCauchy{pc.tau_scale}, tau) + x[2];
  expected += dists::log_pdf(dists::HalfCauchy{pc.tau_b_scale}, tau_b) + x[3];
  expected += dists::log_pdf(dists::Normal{0.0, 1.0}, x[4]);
  expected += dists::log_pdf(dists::Normal{0.0, 1.0}, x[5]);
  expected += dists::log_pdf(dists::Normal{0.0, 1.0}, mp);
  expected += dists::log_pdf(dists::Normal{0.0, 1.0}, delta);
  expected += dists::log_pdf(dists::Normal{0.0, 1.0}, x[8]);
  expected += dists::log_pdf(dists::Normal{delta, 1.0}, delta_i);
  expected += dists::log_pdf(dists::TruncatedNormalLeft{mp, 1.0, delta_i}, cm) + x[10];
  expected += dists::log_pdf(dists::TruncatedNormalRight{mp, 1.0, delta_i}, im) + x[11];
  double mu_c = math::sigmoid(x[1] + beta * cm);
  double mu_i = math::sigmoid(x[1] + beta * im + theta_i);
  expected += dists::log_pdf(dists::Beta{mu_c * eta, (1.0 - mu_c) * eta}, p_c) +
              std::log(p_c) + std::log1p(-p_c);
  expected += dists::log_pdf(dists::Beta{mu_i * eta, (1.0 - mu_i) * eta}, p_i) +
              std::log(p_i) + std::log1p(-p_i);
  const auto& s = data.studies[0];
  expected += dists::log_pdf(dists::BinomialProbs{p_i, s.intervention_total()},
                             double(s.intervention_events));
  expected += dists::log_pdf(dists::BinomialProbs{p_c, s.control_total()},
                             double(s.control_events));

  CHECK(m.log_joint(x) == Approx(expected).margin(1e-10));
}

TEST_CASE("log joint is invariant to study order", "[model]") {
  MetaDataset data = k_studies(4);
  MediatedModel m(data, {});
  MetaDataset permuted = data;
  std::swap(permuted.studies[0], permuted.studies[2]);
  std::swap(permuted.studies[1], permuted.studies[3]);
  MediatedModel mp(permuted, {});
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = random_state(m, rng);
    // permute the per-study blocks the same way
    auto xp = x;
    auto copy_block = [&](int from, int to) {
      for (int j = 0; j < 6; ++j) xp[8 + 6 * to + j] = x[8 + 6 * from + j];
    };
    copy_block(0, 2);
    copy_block(2, 0);
    copy_block(1, 3);
    copy_block(3, 1);
    CHECK(m.log_joint(x) == Approx(mp.log_joint(xp)).margin(1e-10));
  }
}

TEST_CASE("gradient matches finite differences on random states", "[model]") {
  for (int k : {1, 6}) {
    MediatedModel m(k_studies(k), {});
    Rng rng(777 + k);
    for (int trial = 0; trial < 25; ++trial) {
      auto x = random_state(m, rng);
      auto g = m.grad_log_joint(x);
      REQUIRE(int(g.size()) == m.dim());
      for (int i = 0; i < m.dim(); ++i) {
        double h = 1e-5;
        auto xp = x;
        xp[i] = x[i] + h;
        double up = m.log_joint(xp);
        xp[i] = x[i] - h;
        double dn = m.log_joint(xp);
        double fd = (up - dn) / (2.0 * h);
        double tol = 1e-4 * std::max({1.0, std::fabs(fd), std::fabs(g[i])});
        INFO("k=" << k << " trial=" << trial << " coord=" << i << " grad=" << g[i]
                  << " fd=" << fd);
        CHECK(std::fabs(g[i] - fd) <= tol);
      }
    }
  }
}

TEST_CASE("gradient of theta is zero at the symmetric prior mode", "[model]") {
  MediatedModel m(empty_dataset(), {});
  std::vector<double> x = {3.4011973816621555, math::logit(12.0 / 37.0), -0.5, -0.5,
                           0.0, 0.0, 0.0, 0.0};
  auto g = m.grad_log_joint(x);
  CHECK(g[ParamLayout::kTheta] == Approx(0.0).margin(1e-12));
  CHECK(g[ParamLayout::kBeta] == Approx(0.0).margin(1e-12));
}

TEST_CASE("per-study gradient blocks permute with the studies", "[model]") {
  MetaDataset data = k_studies(3);
  MetaDataset permuted = data;
  std::rotate(permuted.studies.begin(), permuted.studies.begin() + 1, permuted.studies.end());
  MediatedModel m(data, {}), mperm(permuted, {});
  Rng rng(31);
  auto x = random_state(m, rng);
  auto xp = x;
  // study j of permuted = study (j+1) mod 3 of original
  for (int j = 0; j < 3; ++j) {
    for (int c = 0; c < 6; ++c) xp[8 + 6 * j + c] = x[8 + 6 * ((j + 1) % 3) + c];
  }
  auto g = m.grad_log_joint(x);
  auto gp = mperm.grad_log_joint(xp);
  for (int j = 0; j < 3; ++j) {
    for (int c = 0; c < 6; ++c) {
      CHECK(gp[8 + 6 * j + c] == Approx(g[8 + 6 * ((j + 1) % 3) + c]).margin(1e-10));
    }
  }
}

TEST_CASE("derived quantities", "[model]") {
  MediatedModel m(k_studies(2), {});
  Rng rng(8);
  auto x = random_state(m, rng);

  SECTION("theta = 0 gives total RR exactly 1") {
    x[ParamLayout::kTheta] = 0.0;
    CHECK(m.derived_quantities(x).total_rr == 1.0);
  }
  SECTION("equal arm probabilities give per-study RR 1") {
    x[12] = 0.3;
    x[13] = 0.3;  // p_control_logit == p_intervention_logit for study 1
    CHECK(m.derived_quantities(x).rr_per_study[0] == 1.0);
  }
  SECTION("direct arithmetic oracle") {
    double mu = 0.317;
    x[ParamLayout::kMuLogit] = math::logit(mu);
    x[ParamLayout::kTheta] = math::logit(0.4) - math::logit(0.317);
    CHECK(m.derived_quantities(x).total_rr == Approx(1.2618296529968456).epsilon(1e-10));
  }
}

TEST_CASE("beta_prior_from_rate", "[model]") {
  auto [a, b] = beta_prior_from_rate(0.317);
  CHECK(a == Approx(15.85).margin(1e-12));
  CHECK(b == Approx(34.15).margin(1e-12));
  auto [a5, b5] = beta_prior_from_rate(0.5);
  CHECK(a5 == Approx(25.0).margin(1e-12));
  CHECK(b5 == Approx(25.0).margin(1e-12));
  PriorConfig defaults;
  CHECK(defaults.mu_alpha == 12.0);
  CHECK(defaults.mu_beta == 25.0);
  CHECK(defaults.mu_alpha / (defaults.mu_alpha + defaults.mu_beta) ==
        Approx(0.3243243243243243).epsilon(1e-12));
  CHECK_THROWS_AS(beta_prior_from_rate(0.0), RateOutOfRange);
  CHECK_THROWS_AS(beta_prior_from_rate(1.0), RateOutOfRange);
}

TEST_CASE("prior pushforward reproduces constrained prior moments", "[model]") {
  // forward/inverse consistency: unconstrained prior draws decode to
  // constrained draws whose moments match the analytic prior
  MediatedModel m(empty_dataset(), {});
  Rng rng(4242);
  int n = 100000;
  double mu_sum = 0.0, mu_sq = 0.0, theta_pos = 0.0;
  for (int i = 0; i < n; ++i) {
    auto x = m.sample_unconstrained_prior(rng);
    auto p = m.decode(x);
    mu_sum += p.mu;
    mu_sq += p.mu * p.mu;
    theta_pos += p.theta > 0.0 ? 1.0 : 0.0;
  }
  double mean = mu_sum / n;
  double mc_se = std::sqrt((mu_sq / n - mean * mean) / n);
  CHECK(mean == Approx(12.0 / 37.0).margin(3.0 * mc_se + 1e-6));
  CHECK(theta_pos / n == Approx(0.5).margin(0.01));
}

TEST_CASE("mediator ordering holds in every decoded state", "[model]") {
  MediatedModel m(k_studies(5), {});
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    auto p = m.decode(random_state(m, rng, 4.0));
    for (const auto& sp : p.studies) {
      CHECK(sp.intervention_mediated <= sp.delta_i);
      CHECK(sp.delta_i <= sp.control_mediated);
    }
  }
}

TEST_CASE("quantity extraction matches names", "[model]") {
  MediatedModel m(k_studies(2), {});
  const auto& names = m.quantity_names();
  CHECK(names.size() == 8 + 6 * 2 + 2 + 1);
  CHECK(names.front() == "eta");
  CHECK(names.back() == "total_rr");
  Rng rng(3);
  auto x = random_state(m, rng);
  std::vector<double> out;
  m.extract_quantities(x, out);
  CHECK(out.size() == names.size());
  auto p = m.decode(x);
  CHECK(out[1] == p.mu);
}
