#pragma once

#include "h22/rng.hpp"
#include "h22/schrodinger.hpp"
#include "h22/weighted_graph.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace h22 {

struct McmcConfig {
  int burn_in_sweeps = 10000;
  int thinning = 10;       // sweeps between returned samples
  double initial_scale = 1.0;
  // proposal scale is adapted towards this acceptance band during burn-in
  double accept_low = 0.30;
  double accept_high = 0.50;
};

/// Single-site Gaussian-proposal Metropolis chain for the pinned u-field law
///   log dens = -sum_i u_i - sum_{i~j} W_ij (cosh(u_i-u_j) - 1) + 0.5 ln D(W,u)
/// with u fixed to 0 at the pinning vertex. The spanning-tree factor is
/// recomputed from a fresh cofactor determinant on every proposal; graphs at
/// desk scale keep that cheap. Scale adaptation runs during burn-in only, so
/// the collected chain targets the exact law.
class UFieldMcmc {
 public:
  UFieldMcmc(const WeightedGraph& g, Eigen::Index i0, McmcConfig cfg, RngStream rng)
      : graph_(g), i0_(i0), cfg_(cfg), rng_(rng) {
    if (!g.connected()) throw std::invalid_argument("graph not connected");
    if (i0 < 0 || i0 >= g.size()) throw std::invalid_argument("pinning out of range");
    u_ = Eigen::VectorXd::Zero(g.size());
    log_tree_ = std::log(spanning_tree_polynomial(graph_, u_));
    scale_ = cfg.initial_scale;
    burn_in();
  }

  const Eigen::VectorXd& current() const { return u_; }

  /// Advance by the thinning interval and return the new state.
  const Eigen::VectorXd& next_sample() {
    for (int s = 0; s < cfg_.thinning; ++s) sweep(false);
    return u_;
  }

  double proposal_scale() const { return scale_; }
  double acceptance_rate() const { return proposals_ ? double(accepts_) / double(proposals_) : 0.0; }

 private:
  void burn_in() {
    const int window = 100;
    for (int s = 0; s < cfg_.burn_in_sweeps; ++s) {
      sweep(true);
      if ((s + 1) % window == 0) {
        const double rate = double(win_accepts_) / double(win_proposals_);
        if (rate < cfg_.accept_low) scale_ *= 0.9;
        else if (rate > cfg_.accept_high) scale_ *= 1.1;
        win_accepts_ = win_proposals_ = 0;
      }
    }
    accepts_ = proposals_ = 0;
  }

  void sweep(bool adapting) {
    for (Eigen::Index i = 0; i < graph_.size(); ++i) {
      if (i == i0_) continue;
      const double old_ui = u_(i);
      const double new_ui = old_ui + scale_ * rng_.normal();
      double delta = -(new_ui - old_ui);
      for (Eigen::Index j = 0; j < graph_.size(); ++j) {
        const double w = graph_.weights(i, j);
        if (w <= 0.0) continue;
        delta -= w * (std::cosh(new_ui - u_(j)) - std::cosh(old_ui - u_(j)));
      }
      u_(i) = new_ui;
      const double new_log_tree = std::log(spanning_tree_polynomial(graph_, u_));
      delta += 0.5 * (new_log_tree - log_tree_);
      ++proposals_;
      if (adapting) ++win_proposals_;
      if (delta >= 0.0 || rng_.uniform_pos() < std::exp(delta)) {
        log_tree_ = new_log_tree;
        ++accepts_;
        if (adapting) ++win_accepts_;
      } else {
        u_(i) = old_ui;
      }
    }
  }

  WeightedGraph graph_;
  Eigen::Index i0_;
  McmcConfig cfg_;
  RngStream rng_;
  Eigen::VectorXd u_;
  double log_tree_ = 0.0;
  double scale_ = 1.0;
  long accepts_ = 0, proposals_ = 0;
  long win_accepts_ = 0, win_proposals_ = 0;
};

/// One approximate draw from the pinned u-field law (burn-in included).
inline Eigen::VectorXd sample_u_mcmc(const WeightedGraph& g, Eigen::Index i0, int sweeps,
                                     RngStream rng) {
  McmcConfig cfg;
  cfg.burn_in_sweeps = sweeps;
  UFieldMcmc chain(g, i0, cfg, rng);
  return chain.current();
}

/// One potential draw: u-field sample composed with an independent
/// Gamma(1/2) pinning variable.
inline Eigen::VectorXd sample_beta_direct(const WeightedGraph& g, Eigen::Index i0, int sweeps,
                                          RngStream rng) {
  const std::uint64_t tag = rng.next_u64();
  RngStream chain_rng(tag, 1), gamma_rng(tag, 2);
  McmcConfig cfg;
  cfg.burn_in_sweeps = sweeps;
  UFieldMcmc chain(g, i0, cfg, chain_rng);
  return beta_from_u(g, chain.current(), gamma_rng.gamma_half(), i0);
}

}  // namespace h22
