#pragma once

#include "h22/graining.hpp"
#include "h22/hierarchical.hpp"
#include "h22/mcmc.hpp"
#include "h22/rng.hpp"
#include "h22/schrodinger.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace h22 {

/// One level of the growth coupling: potential, log-field and Green diagonal
/// on the 2^n lattice sites (boundary vertex data is implicit: its field is 0,
/// its Green diagonal 1/(2 gamma), and its potential follows from the field).
struct CascadeLevel {
  int level = 0;
  double wbar = 0.0;          // inverse temperature of this level's graph
  Eigen::VectorXd beta;
  Eigen::VectorXd u;
  Eigen::VectorXd diag_g;     // G(i,i) at the lattice sites
};

/// Growth coupling of the lattice models: one shared pinning variable gamma
/// and per-level fields produced by iterated pair splits. The inverse
/// temperature gains a factor rho/2 per level.
struct CascadeRealization {
  HierParams base;            // level-0 parameters (wbar, rho)
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double gamma = 0.0;
  std::vector<CascadeLevel> levels;
  int max_level = 20;
  double validation_deviation = 0.0;  // worst fast-path vs full-matrix gap seen

  int grown_level() const { return static_cast<int>(levels.size()) - 1; }
  double wbar_at(int n) const { return base.wbar * std::pow(base.rho / 2.0, n); }
  double total_mass() const { return std::exp(levels.front().u(0)); }
};

/// Intra-pair weight used when growing level n to n+1 (sibling distance 1).
inline double cascade_intra_weight(const CascadeRealization& r, int n) {
  return r.wbar_at(n + 1) / (2.0 * r.base.rho);
}

namespace detail {
inline RngStream cascade_root_rng(std::uint64_t seed, std::uint64_t stream) {
  return RngStream(seed, substream(stream, 0, 0));
}
inline RngStream cascade_split_rng(std::uint64_t seed, std::uint64_t stream, int new_level,
                                   Eigen::Index parent) {
  return RngStream(seed, substream(stream, std::uint64_t(new_level),
                                   std::uint64_t(parent) + 1));
}
}  // namespace detail

/// Start a realization: gamma ~ Gamma(1/2) and the root field. The root law
/// of e^{u} on the two-vertex level-0 graph is inverse Gaussian with mean 1
/// and shape equal to the boundary weight wbar/(2(rho-1)).
inline CascadeRealization init_root(const HierParams& params, std::uint64_t seed,
                                    std::uint64_t stream, int max_level = 20) {
  params.validate();
  if (params.level != 0) throw std::invalid_argument("init_root expects level-0 parameters");
  CascadeRealization r;
  r.base = params;
  r.seed = seed;
  r.stream = stream;
  r.max_level = max_level;

  RngStream rng = detail::cascade_root_rng(seed, stream);
  r.gamma = rng.gamma_half();
  const double wd = params.wbar / (2.0 * (params.rho - 1.0));
  const double mass = rng.inverse_gaussian(1.0, wd);
  const double u1 = std::log(mass);

  CascadeLevel l0;
  l0.level = 0;
  l0.wbar = params.wbar;
  l0.u = Eigen::VectorXd::Constant(1, u1);
  l0.beta = Eigen::VectorXd::Constant(1, 0.5 * wd * std::exp(-u1));
  const double beta_delta = 0.5 * (wd * std::exp(u1) + 2.0 * r.gamma);
  const double det = 4.0 * l0.beta(0) * beta_delta - wd * wd;
  l0.diag_g = Eigen::VectorXd::Constant(1, 2.0 * beta_delta / det);
  r.levels.push_back(std::move(l0));
  return r;
}

/// One growth step: every site k of level n splits into {2k-1, 2k} of level
/// n+1 through an independent pair draw. Children fields follow from exact
/// mass conservation combined with the pair-block column-sum ratio; children
/// Green diagonals come from the same pair block. Draws consume one substream
/// per split keyed by (level, parent), so the loop order is immaterial.
inline void grow_one_level(CascadeRealization& r) {
  const int n = r.grown_level();
  if (n + 1 > r.max_level) throw std::invalid_argument("configured max level reached");
  const CascadeLevel& cur = r.levels.back();
  const Eigen::Index m = cur.beta.size();
  const double w = cascade_intra_weight(r, n);

  CascadeLevel next;
  next.level = n + 1;
  next.wbar = r.wbar_at(n + 1);
  next.beta.resize(2 * m);
  next.u.resize(2 * m);
  next.diag_g.resize(2 * m);

  for (Eigen::Index k = 0; k < m; ++k) {
    RngStream rng = detail::cascade_split_rng(r.seed, r.stream, n + 1, k);
    const double beta_prime = cur.beta(k);
    const SplitDraw d = fine_grain_pair(beta_prime, w, rng);
    const Eigen::Matrix2d block = fine_pair_block(d, beta_prime, w, cur.diag_g(k));
    const double s1 = block(0, 0) + block(1, 0);
    const double s2 = block(0, 1) + block(1, 1);
    const double ratio = s1 / s2;
    next.beta(2 * k) = d.beta1;
    next.beta(2 * k + 1) = d.beta2;
    next.u(2 * k) = cur.u(k) + std::log(2.0 * ratio / (1.0 + ratio));
    next.u(2 * k + 1) = cur.u(k) + std::log(2.0 / (1.0 + ratio));
    next.diag_g(2 * k) = block(0, 0);
    next.diag_g(2 * k + 1) = block(1, 1);
  }
  r.levels.push_back(std::move(next));
}

inline double replay_level_full(const CascadeRealization& r, int n);

/// Grow to the target level. In validation mode every step with source level
/// <= 10 is additionally replayed through full Green matrices and the worst
/// gap between the ratio path and the full-matrix fields is recorded on the
/// realization (logged, never patched).
inline void grow_to_level(CascadeRealization& r, int target, bool validate_full = false) {
  while (r.grown_level() < target) {
    grow_one_level(r);
    const int src = r.grown_level() - 1;
    if (validate_full && src <= 10)
      r.validation_deviation = std::max(r.validation_deviation, replay_level_full(r, src));
  }
}

/// Full-matrix replay of one growth step for cross-validation: rebuilds the
/// fine Green matrix by sequential pair splits of the level graph (same
/// substreams, hence the same draws as grow_one_level) and returns the worst
/// deviation of the ratio-path fields and diagonals from the full-matrix ones.
/// Practical only at small levels.
inline double replay_level_full(const CascadeRealization& r, int n) {
  if (n < 0 || n + 1 > r.grown_level()) throw std::invalid_argument("level not grown");
  if (n > 10) throw std::invalid_argument("full-matrix replay capped at level 10");
  HierParams hp = r.base;
  hp.level = n;
  hp.wbar = r.wbar_at(n);
  WeightedGraph g = build_level_graph(hp);
  const CascadeLevel& cur = r.levels[static_cast<std::size_t>(n)];
  const Eigen::Index m = cur.beta.size();

  // level-n Green matrix from (u, gamma)
  Eigen::VectorXd u(m + 1);
  u.head(m) = cur.u;
  u(m) = 0.0;
  Eigen::VectorXd beta = beta_from_u(g, u, r.gamma, m);
  Eigen::MatrixXd green = green_matrix(assemble_schrodinger(g, beta));

  const double w = cascade_intra_weight(r, n);
  for (Eigen::Index k = 0; k < m; ++k) {
    RngStream rng = detail::cascade_split_rng(r.seed, r.stream, n + 1, k);
    // parent k sits at row 2k after the first k splits
    const Eigen::Index pos = 2 * k;
    WeightedGraph fine = split_vertex(g, pos, w);
    PairSplit split{pos, w};
    green = fine_grain_G(green, fine, split, rng, cur.beta(k));
    g = std::move(fine);
  }

  const CascadeLevel& nxt = r.levels[static_cast<std::size_t>(n) + 1];
  const Eigen::VectorXd u_full = u_field(green, green.rows() - 1);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < nxt.u.size(); ++i) {
    worst = std::max(worst, std::abs(std::exp(u_full(i)) - std::exp(nxt.u(i))));
    // Green diagonals scale like 1/gamma, compare relatively
    worst = std::max(worst,
                     std::abs(green(i, i) - nxt.diag_g(i)) / (1.0 + std::abs(nxt.diag_g(i))));
  }
  return worst;
}

/// Exact per-cell mass conservation check across all grown levels: returns the
/// largest |e^{u_parent} - (e^{u_child1} + e^{u_child2})/2|.
inline double conservation_defect(const CascadeRealization& r) {
  double worst = 0.0;
  for (std::size_t n = 0; n + 1 < r.levels.size(); ++n) {
    const auto& a = r.levels[n];
    const auto& b = r.levels[n + 1];
    for (Eigen::Index k = 0; k < a.u.size(); ++k) {
      const double parent = std::exp(a.u(k));
      const double child = 0.5 * (std::exp(b.u(2 * k)) + std::exp(b.u(2 * k + 1)));
      worst = std::max(worst, std::abs(parent - child));
    }
  }
  return worst;
}

/// Re-verify every structural invariant of a realization (used after loading
/// from disk). Throws consistency_error with a description on failure.
inline void validate(const CascadeRealization& r) {
  if (r.levels.empty()) throw consistency_error("realization has no levels");
  if (!(r.gamma > 0.0)) throw consistency_error("gamma must be positive");
  for (std::size_t n = 0; n < r.levels.size(); ++n) {
    const auto& l = r.levels[n];
    const Eigen::Index want = Eigen::Index(1) << n;
    if (l.beta.size() != want || l.u.size() != want || l.diag_g.size() != want)
      throw consistency_error("level array size mismatch");
    if (std::abs(l.wbar - r.wbar_at(static_cast<int>(n))) > 1e-12 * r.wbar_at(static_cast<int>(n)))
      throw consistency_error("inverse temperature recursion violated");
    if ((l.beta.array() <= 0.0).any()) throw consistency_error("nonpositive potential entry");
    for (Eigen::Index i = 0; i < l.diag_g.size(); ++i)
      if (!(l.diag_g(i) >= 1.0 / (2.0 * l.beta(i)) - 1e-12))
        throw consistency_error("Green diagonal below its pointwise lower bound");
  }
  for (std::size_t n = 0; n + 1 < r.levels.size(); ++n) {
    const auto& a = r.levels[n];
    const auto& b = r.levels[n + 1];
    const double w = cascade_intra_weight(r, static_cast<int>(n));
    for (Eigen::Index k = 0; k < a.beta.size(); ++k) {
      const double back = coarse_grain_beta(b.beta(2 * k), b.beta(2 * k + 1), w);
      if (std::abs(back - a.beta(k)) > 1e-12 * std::max(1.0, a.beta(k)))
        throw consistency_error("pair reduction does not return the parent potential");
    }
  }
  if (conservation_defect(r) > 1e-10)
    throw consistency_error("dyadic mass conservation violated");
}

/// Dyadic path of a point x in [0,1): the site index of x at each level.
struct DyadicPoint {
  double x = 0.0;

  explicit DyadicPoint(double x_) : x(x_) {
    if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("x must lie in [0,1)");
  }

  /// 1-based site index at level n.
  std::uint64_t site(int n) const {
    return static_cast<std::uint64_t>(std::floor(x * std::pow(2.0, n))) + 1;
  }
};

/// Field values e^{u^(n)} along the dyadic path of x, n = 0..grown level.
inline std::vector<double> phi_path(const CascadeRealization& r, const DyadicPoint& x) {
  std::vector<double> phi;
  phi.reserve(r.levels.size());
  for (const auto& l : r.levels)
    phi.push_back(std::exp(l.u(static_cast<Eigen::Index>(x.site(l.level)) - 1)));
  return phi;
}

/// Independent level-n state under the wired coupling: a fresh u-field from
/// the Metropolis sampler on the level graph, sharing the given gamma.
inline SchrodingerState wired_coupling_sample(int n, const HierParams& params, double gamma,
                                              const McmcConfig& cfg, RngStream rng) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  HierParams hp = params;
  hp.level = n;
  WeightedGraph g = build_level_graph(hp);
  UFieldMcmc chain(g, *g.pinning, cfg, rng);
  const Eigen::VectorXd beta = beta_from_u(g, chain.current(), gamma, *g.pinning);
  return make_state(g, beta);
}

/// psi observable of a pinned state: e^{u_i} at the lattice sites.
inline Eigen::VectorXd psi_field(const SchrodingerState& s) {
  if (!s.graph.pinning) throw std::invalid_argument("state has no pinning vertex");
  const Eigen::Index n = s.graph.size() - 1;
  Eigen::VectorXd psi(n);
  for (Eigen::Index i = 0; i < n; ++i) psi(i) = std::exp(s.pinned_u(i));
  return psi;
}

}  // namespace h22
