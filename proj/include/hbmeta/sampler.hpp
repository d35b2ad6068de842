#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hbmeta/errors.hpp"
#include "hbmeta/rng.hpp"

// Dynamic-trajectory HMC with a no-U-turn termination rule and multinomial
// selection along the trajectory, dual-averaging step-size adaptation, and
// windowed diagonal mass-matrix estimation during warm-up. The model type
// must provide dim(), log_joint_grad(x, grad) -> double and
// sample_unconstrained_prior(rng) -> std::vector<double>.

namespace hbmeta {

struct SamplerConfig {
  int chains = 4;
  int warmup_draws = 1000;
  int retained_draws = 1000;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 0;
};

/// Row-major draws matrix, rows = retained draws, cols = dimensions.
class DrawMatrix {
 public:
  DrawMatrix() = default;
  DrawMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(size_t(rows) * cols) {}
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return data_[size_t(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[size_t(r) * cols_ + c]; }
  const double* row(int r) const { return data_.data() + size_t(r) * cols_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

struct ChainResult {
  DrawMatrix draws;  // unconstrained
  double accept_rate = 0.0;
  int divergence_count = 0;
  double step_size = 0.0;
};

namespace nuts_detail {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double kinetic(const Vec& rho, const Vec& inv_mass) {
  double s = 0.0;
  for (size_t i = 0; i < rho.size(); ++i) s += rho[i] * rho[i] * inv_mass[i];
  return 0.5 * s;
}

struct Point {
  Vec q, rho, grad;
  double logp_q = 0.0;      // model log density
  double logp_joint = 0.0;  // logp_q - kinetic
};

/// One position-momentum leapfrog update. Returns the new model log
/// density via logp_q; the caller recomputes the joint density.
template <class Model>
void leapfrog_step(const Model& model, const Vec& inv_mass, double eps, Vec& q, Vec& rho,
                   Vec& grad, double& logp_q) {
  double half = 0.5 * eps;
  for (size_t d = 0; d < q.size(); ++d) rho[d] += half * grad[d];
  for (size_t d = 0; d < q.size(); ++d) q[d] += eps * inv_mass[d] * rho[d];
  logp_q = model.log_joint_grad(q, grad);
  if (std::isfinite(logp_q)) {
    for (size_t d = 0; d < q.size(); ++d) rho[d] += half * grad[d];
  }
}

/// Subtree summary: endpoints, the multinomial candidate, and accumulated
/// acceptance statistics.
struct Tree {
  Point bk, fw;
  Vec candidate;
  double log_weight = -std::numeric_limits<double>::infinity();
  double sum_accept = 0.0;
  int n_leaf = 0;
  bool divergent = false;
  bool uturn = false;
};

template <class Model>
class Chain {
 public:
  Chain(const Model& model, const SamplerConfig& cfg, Rng rng)
      : model_(model), cfg_(cfg), rng_(rng), dim_(model.dim()), inv_mass_(dim_, 1.0) {}

  ChainResult run() {
    init_position();
    warmup();
    ChainResult out;
    out.draws = DrawMatrix(cfg_.retained_draws, dim_);
    out.step_size = step_size_;
    double accept_sum = 0.0;
    for (int n = 0; n < cfg_.retained_draws; ++n) {
      bool divergent = false;
      double astat = transition(divergent);
      accept_sum += astat;
      if (divergent) ++out.divergence_count;
      for (int d = 0; d < dim_; ++d) out.draws(n, d) = q_[d];
    }
    out.accept_rate = cfg_.retained_draws > 0 ? accept_sum / cfg_.retained_draws : 0.0;
    if (out.divergence_count * 2 > cfg_.retained_draws) {
      throw AllDivergent("chain diverged on more than half of its draws (step size " +
                         std::to_string(step_size_) + ")");
    }
    return out;
  }

 private:
  void init_position() {
    for (int attempt = 0; attempt < 100; ++attempt) {
      q_ = model_.sample_unconstrained_prior(rng_);
      grad_.assign(dim_, 0.0);
      logp_ = model_.log_joint_grad(q_, grad_);
      if (std::isfinite(logp_)) return;
    }
    throw GradientFailure("no finite starting point found in 100 prior draws");
  }

  double logp_grad(const Vec& q, Vec& grad, bool& ok) {
    double lp = model_.log_joint_grad(q, grad);
    if (std::isnan(lp)) throw NonFiniteDensity("log density evaluated to NaN");
    for (double v : grad) {
      if (std::isnan(v)) throw GradientFailure("gradient evaluated to NaN");
    }
    ok = std::isfinite(lp);
    return lp;
  }

  Point leapfrog(const Point& from, double eps) {
    Point next;
    next.rho = from.rho;
    next.q = from.q;
    next.grad = from.grad;
    leapfrog_step(model_, inv_mass_, eps, next.q, next.rho, next.grad, next.logp_q);
    if (std::isnan(next.logp_q)) throw NonFiniteDensity("log density evaluated to NaN");
    if (std::isfinite(next.logp_q)) {
      for (double v : next.grad) {
        if (std::isnan(v)) throw GradientFailure("gradient evaluated to NaN");
      }
      next.logp_joint = next.logp_q - kinetic(next.rho, inv_mass_);
    } else {
      next.logp_joint = -std::numeric_limits<double>::infinity();
    }
    return next;
  }

  bool uturn_between(const Point& bk, const Point& fw) const {
    double fwd = 0.0, bwd = 0.0;
    for (int d = 0; d < dim_; ++d) {
      double span = inv_mass_[d] * (fw.q[d] - bk.q[d]);
      fwd += span * fw.rho[d];
      bwd += span * bk.rho[d];
    }
    return fwd < 0.0 || bwd < 0.0;
  }

  Tree leaf(const Point& from, double dir_eps, double logp0) {
    Tree t;
    Point p = leapfrog(from, dir_eps);
    double delta = p.logp_joint - logp0;
    t.sum_accept = delta > 0.0 ? 1.0 : std::exp(delta);
    t.n_leaf = 1;
    if (!(delta > -1000.0)) {
      t.divergent = true;
    }
    t.log_weight = p.logp_joint;
    t.candidate = p.q;
    t.bk = p;
    t.fw = std::move(p);
    return t;
  }

  /// Builds a subtree of 2^depth leapfrog states in one direction.
  Tree build_tree(int depth, const Point& from, bool forward, double logp0) {
    if (depth == 0) {
      return leaf(from, forward ? step_size_ : -step_size_, logp0);
    }
    Tree first = build_tree(depth - 1, from, forward, logp0);
    if (first.divergent || first.uturn) return first;
    Tree second = build_tree(depth - 1, forward ? first.fw : first.bk, forward, logp0);
    first.sum_accept += second.sum_accept;
    first.n_leaf += second.n_leaf;
    if (second.divergent || second.uturn) {
      first.divergent = second.divergent;
      first.uturn = second.uturn;
      return first;
    }
    double total = math::log_sum_exp(first.log_weight, second.log_weight);
    if (std::log(rng_.uniform_open()) < second.log_weight - total) {
      first.candidate = std::move(second.candidate);
    }
    first.log_weight = total;
    if (forward) {
      first.fw = std::move(second.fw);
    } else {
      first.bk = std::move(second.bk);
    }
    first.uturn = uturn_between(first.bk, first.fw);
    return first;
  }

  /// One NUTS transition; returns the mean acceptance statistic.
  double transition(bool& divergent) {
    Point init;
    init.q = q_;
    init.grad = grad_;
    init.logp_q = logp_;
    init.rho.resize(dim_);
    for (int d = 0; d < dim_; ++d) {
      init.rho[d] = rng_.normal() / std::sqrt(inv_mass_[d]);
    }
    init.logp_joint = init.logp_q - kinetic(init.rho, inv_mass_);
    double logp0 = init.logp_joint;

    Tree span;
    span.bk = init;
    span.fw = init;
    span.candidate = init.q;
    span.log_weight = init.logp_joint;
    span.sum_accept = 0.0;
    span.n_leaf = 0;
    divergent = false;

    for (int depth = 0; depth < cfg_.max_tree_depth; ++depth) {
      bool forward = rng_.uniform01() < 0.5;
      Tree next = build_tree(depth, forward ? span.fw : span.bk, forward, logp0);
      span.sum_accept += next.sum_accept;
      span.n_leaf += next.n_leaf;
      if (next.divergent) {
        divergent = true;
        break;
      }
      if (next.uturn) break;
      // Biased progressive selection favoring the new subtree.
      double switch_logprob = next.log_weight - span.log_weight;
      if (switch_logprob > 0.0 || std::log(rng_.uniform_open()) < switch_logprob) {
        span.candidate = next.candidate;
      }
      span.log_weight = math::log_sum_exp(span.log_weight, next.log_weight);
      if (forward) {
        span.fw = std::move(next.fw);
      } else {
        span.bk = std::move(next.bk);
      }
      if (uturn_between(span.bk, span.fw)) break;
    }

    if (span.candidate != q_) {
      q_ = span.candidate;
      bool ok = false;
      logp_ = logp_grad(q_, grad_, ok);
    }
    return span.n_leaf > 0 ? span.sum_accept / span.n_leaf : 0.0;
  }

  void find_initial_step_size() {
    step_size_ = 1.0;
    Point init;
    init.q = q_;
    init.grad = grad_;
    init.logp_q = logp_;
    init.rho.resize(dim_);
    for (int d = 0; d < dim_; ++d) init.rho[d] = rng_.normal() / std::sqrt(inv_mass_[d]);
    init.logp_joint = init.logp_q - kinetic(init.rho, inv_mass_);
    auto accept_of = [&](double eps) {
      Point p = leapfrog(init, eps);
      return p.logp_joint - init.logp_joint;  // log acceptance
    };
    double delta = accept_of(step_size_);
    double dir = delta > std::log(0.5) ? 1.0 : -1.0;
    for (int iter = 0; iter < 100; ++iter) {
      step_size_ *= std::pow(2.0, dir);
      if (step_size_ < 1e-10 || step_size_ > 1e7) break;
      delta = accept_of(step_size_);
      if (dir > 0.0 ? delta <= std::log(0.5) : delta >= std::log(0.5)) break;
    }
    step_size_ = std::min(std::max(step_size_, 1e-10), 1e7);
  }

  struct DualAverage {
    double mu = 0.0;
    double log_eps_bar = 0.0;
    double h_bar = 0.0;
    int m = 0;
    void restart(double eps) {
      mu = std::log(10.0 * eps);
      log_eps_bar = std::log(eps);
      h_bar = 0.0;
      m = 0;
    }
    double update(double accept_stat, double target) {
      ++m;
      const double t0 = 10.0, gamma = 0.05, kappa = 0.75;
      h_bar = (1.0 - 1.0 / (m + t0)) * h_bar + (target - accept_stat) / (m + t0);
      double log_eps = mu - std::sqrt(double(m)) / gamma * h_bar;
      double w = std::pow(double(m), -kappa);
      log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
      return std::exp(log_eps);
    }
  };

  void warmup() {
    if (cfg_.warmup_draws <= 0) {
      step_size_ = 0.1;
      return;
    }
    find_initial_step_size();
    DualAverage da;
    da.restart(step_size_);

    // Stan-style schedule: fast start, doubling variance-estimation
    // windows, fast tail. Small warm-up budgets collapse to step-size-only.
    int W = cfg_.warmup_draws;
    int init_buf = std::max(1, int(0.15 * W));
    int term_buf = std::max(1, int(0.10 * W));
    int window = std::max(1, int(0.0625 * W));
    bool adapt_mass = W >= 40;
    if (!adapt_mass) init_buf = W;

    std::vector<double> mean(dim_, 0.0), m2(dim_, 0.0);
    int count = 0;
    int window_end = adapt_mass ? init_buf + window : W;

    for (int iter = 0; iter < W; ++iter) {
      bool divergent = false;
      double astat = transition(divergent);
      step_size_ = da.update(astat, cfg_.target_accept);
      bool in_slow = adapt_mass && iter >= init_buf && iter < W - term_buf;
      if (in_slow) {
        ++count;
        for (int d = 0; d < dim_; ++d) {
          double delta = q_[d] - mean[d];
          mean[d] += delta / count;
          m2[d] += delta * (q_[d] - mean[d]);
        }
        bool last_slow = iter + 1 == W - term_buf;
        if ((iter + 1 == window_end || last_slow) && count >= 10) {
          for (int d = 0; d < dim_; ++d) {
            double var = m2[d] / (count - 1);
            inv_mass_[d] = var * count / (count + 5.0) + 1e-3 * (5.0 / (count + 5.0));
          }
          mean.assign(dim_, 0.0);
          m2.assign(dim_, 0.0);
          count = 0;
          window *= 2;
          window_end = std::min(iter + 1 + window, W - term_buf);
          find_initial_step_size();
          da.restart(step_size_);
        }
      }
    }
    step_size_ = std::exp(da.log_eps_bar);
  }

  const Model& model_;
  SamplerConfig cfg_;
  Rng rng_;
  int dim_;
  Vec inv_mass_;
  Vec q_, grad_;
  double logp_ = 0.0;
  double step_size_ = 1.0;
};

}  // namespace nuts_detail

/// Runs cfg.chains independent chains; chain c is seeded with seed xor c.
/// Chains run on separate threads with no shared mutable state, and the
/// result only depends on (model, cfg).
template <class Model>
std::vector<ChainResult> run_chains(const Model& model, const SamplerConfig& cfg) {
  if (cfg.chains < 1) throw DataError("sampler needs at least one chain");
  std::vector<ChainResult> results(cfg.chains);
  std::vector<std::exception_ptr> failures(cfg.chains);
  std::vector<std::thread> workers;
  workers.reserve(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c) {
    workers.emplace_back([&, c]() {
      try {
        nuts_detail::Chain<Model> chain(model, cfg, Rng(cfg.seed ^ std::uint64_t(c)));
        results[c] = chain.run();
      } catch (...) {
        failures[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (int c = 0; c < cfg.chains; ++c) {
    if (failures[c]) std::rethrow_exception(failures[c]);
  }
  return results;
}

}  // namespace hbmeta
