#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hbmeta/diagnostics.hpp"
#include "hbmeta/rng.hpp"

using namespace hbmeta;
using Catch::Approx;

namespace {

std::vector<double> white_noise(Rng& rng, int n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("split r-hat near one for iid chains", "[diagnostics]") {
  Rng rng(1);
  std::vector<std::vector<double>> chains;
  for (int c = 0; c < 4; ++c) chains.push_back(white_noise(rng, 1000));
  CHECK(split_rhat(chains) < 1.01);
}

TEST_CASE("split r-hat flags non-overlapping chains", "[diagnostics]") {
  Rng rng(2);
  std::vector<std::vector<double>> chains;
  chains.push_back(white_noise(rng, 500));
  auto shifted = white_noise(rng, 500);
  for (auto& v : shifted) v += 10.0;
  chains.push_back(shifted);
  // Rank normalization saturates near 1.83 for two fully separated chains
  // (the z-scores of disjoint rank blocks), far above any mixing gate.
  CHECK(split_rhat(chains) > 1.7);
}

TEST_CASE("split r-hat on a single chain splits into quarters", "[diagnostics]") {
  Rng rng(3);
  std::vector<std::vector<double>> chains = {white_noise(rng, 1000)};
  CHECK(split_rhat(chains) < 1.02);
}

TEST_CASE("split r-hat refuses constant chains", "[diagnostics]") {
  std::vector<std::vector<double>> chains = {std::vector<double>(100, 3.5),
                                             std::vector<double>(100, 3.5)};
  CHECK_THROWS_AS(split_rhat(chains), InsufficientDraws);
}

TEST_CASE("ess of iid draws is close to the total", "[diagnostics]") {
  Rng rng(4);
  std::vector<std::vector<double>> chains;
  for (int c = 0; c < 4; ++c) chains.push_back(white_noise(rng, 1000));
  double ess = effective_sample_size(chains);
  CHECK(ess >= 3200.0);
  CHECK(ess <= 4800.0);
}

TEST_CASE("ess of an AR(1) chain matches the analytic value", "[diagnostics]") {
  // ESS ~ N (1-rho)/(1+rho) = N/19 for rho = 0.9
  Rng rng(5);
  double rho = 0.9;
  std::vector<std::vector<double>> chains;
  for (int c = 0; c < 4; ++c) {
    std::vector<double> v(4000);
    double x = 0.0;
    for (auto& e : v) {
      x = rho * x + std::sqrt(1.0 - rho * rho) * rng.normal();
      e = x;
    }
    chains.push_back(v);
  }
  double total = 4.0 * 4000.0;
  double expected = total * (1.0 - rho) / (1.0 + rho);
  double ess = effective_sample_size(chains);
  CHECK(ess > expected / 1.5);
  CHECK(ess < expected * 1.5);
}

TEST_CASE("ess refuses degenerate input", "[diagnostics]") {
  std::vector<std::vector<double>> chains = {std::vector<double>(500, 1.0)};
  CHECK_THROWS_AS(effective_sample_size(chains), InsufficientDraws);
}

TEST_CASE("hdi of a uniform grid has width 0.95", "[diagnostics]") {
  int n = 1000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = double(i) / double(n - 1);
  auto [lo, hi] = hdi_95(draws);
  CHECK(hi - lo == Approx(0.95).margin(2.0 / n));
}

TEST_CASE("hdi of normal draws approximates +-1.96", "[diagnostics]") {
  Rng rng(6);
  std::vector<double> draws(100000);
  for (auto& v : draws) v = rng.normal();
  auto [lo, hi] = hdi_95(draws);
  CHECK(lo == Approx(-1.959963984540054).margin(0.03));
  CHECK(hi == Approx(1.959963984540054).margin(0.03));
}

TEST_CASE("hdi of exponential draws hugs zero", "[diagnostics]") {
  Rng rng(7);
  std::vector<double> draws(100000);
  for (auto& v : draws) v = -std::log(rng.uniform_open());
  auto [lo, hi] = hdi_95(draws);
  CHECK(lo == Approx(0.0).margin(0.01));
  CHECK(hi == Approx(2.995732273553991).margin(0.05));
}

TEST_CASE("hdi requires enough draws", "[diagnostics]") {
  std::vector<double> draws(50, 1.0);
  CHECK_THROWS_AS(hdi_95(draws), InsufficientDraws);
}

TEST_CASE("hdi window holds the stated mass", "[diagnostics]") {
  Rng rng(8);
  std::vector<double> draws(2000);
  for (auto& v : draws) v = rng.normal();
  auto [lo, hi] = hdi_95(draws);
  int inside = 0;
  for (double v : draws) inside += (v >= lo && v <= hi) ? 1 : 0;
  double mass = double(inside) / double(draws.size());
  CHECK(mass >= 0.95 - 1.0 / double(draws.size()));
  CHECK(mass <= 0.95 + 2.0 / double(draws.size()));
}

namespace {

/// Minimal model stand-in so summarize can be driven with hand-built chains.
struct PassthroughModel {
  int d = 2;
  std::vector<std::string> names{"a", "b"};
  int dim() const { return d; }
  const std::vector<std::string>& quantity_names() const { return names; }
  void extract_quantities(const std::vector<double>& x, std::vector<double>& out) const {
    out = x;
  }
};

}  // namespace

TEST_CASE("summarize aggregates chains and is order-free", "[diagnostics]") {
  PassthroughModel model;
  Rng rng(9);
  std::vector<ChainResult> chains(2);
  for (auto& c : chains) {
    c.draws = DrawMatrix(500, 2);
    for (int r = 0; r < 500; ++r) {
      c.draws(r, 0) = rng.normal();
      c.draws(r, 1) = 5.0 + 2.0 * rng.normal();
    }
  }
  auto summary = summarize(chains, model);
  REQUIRE(summary.quantities.size() == 2);
  CHECK(summary.quantities[0].mean == Approx(0.0).margin(0.1));
  CHECK(summary.quantities[1].mean == Approx(5.0).margin(0.2));
  CHECK(summary.quantities[1].sd == Approx(2.0).margin(0.2));

  std::vector<ChainResult> permuted;
  permuted.push_back(chains[1]);
  permuted.push_back(chains[0]);
  auto summary2 = summarize(permuted, model);
  CHECK(summary2.quantities[0].mean == Approx(summary.quantities[0].mean).margin(1e-12));
  CHECK(summary2.quantities[0].sd == Approx(summary.quantities[0].sd).margin(1e-12));
  CHECK(summary2.quantities[0].hdi_low == summary.quantities[0].hdi_low);
}

TEST_CASE("summarize records constant margins as warnings, not failures", "[diagnostics]") {
  PassthroughModel model;
  std::vector<ChainResult> chains(2);
  Rng rng(10);
  for (auto& c : chains) {
    c.draws = DrawMatrix(200, 2);
    for (int r = 0; r < 200; ++r) {
      c.draws(r, 0) = 1.0;  // constant quantity
      c.draws(r, 1) = rng.normal();
    }
  }
  auto summary = summarize(chains, model);
  CHECK(summary.quantities[0].mean == 1.0);
  CHECK(std::isnan(summary.quantities[0].rhat));
  CHECK(!summary.warnings.empty());
}
