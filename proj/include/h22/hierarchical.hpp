#pragma once

#include "h22/weighted_graph.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace h22 {

/// Parameters of the hierarchical lattice: inverse temperature wbar, decay
/// parameter rho > 1, ball level n. Spectral dimension is 2 ln2 / ln rho.
struct HierParams {
  double wbar = 1.0;
  double rho = 2.0;
  int level = 0;

  void validate() const {
    if (!(wbar > 0.0)) throw std::invalid_argument("wbar must be positive");
    if (!(rho > 1.0)) throw std::invalid_argument("rho must exceed 1");
    if (level < 0) throw std::invalid_argument("level must be nonnegative");
  }

  double spectral_dimension() const { return 2.0 * std::log(2.0) / std::log(rho); }
};

/// Ultrametric block distance on the positive integers: the smallest n such
/// that i and j share a block (k*2^n, (k+1)*2^n]. Sites are 1-based.
inline int hier_distance(std::uint64_t i, std::uint64_t j) {
  if (i == 0 || j == 0) throw std::invalid_argument("sites are 1-based");
  std::uint64_t a = i - 1, b = j - 1;
  int d = 0;
  while (a != b) {
    a >>= 1;
    b >>= 1;
    ++d;
  }
  return d;
}

/// W_ij = wbar * (2 rho)^(-d(i,j)) for distinct sites.
inline double hier_weight(std::uint64_t i, std::uint64_t j, const HierParams& p) {
  if (i == j) throw std::invalid_argument("hier_weight needs distinct sites");
  return p.wbar * std::pow(2.0 * p.rho, -hier_distance(i, j));
}

/// Exact tail sum of the weights from a site in the level-n ball to all sites
/// outside it: wbar * rho^(-n) / (2 (rho - 1)). Independent of the site.
inline double wired_boundary_weight(std::uint64_t i, const HierParams& p) {
  if (i == 0 || i > (std::uint64_t(1) << p.level)) throw std::invalid_argument("site outside the ball");
  return p.wbar * std::pow(p.rho, -p.level) / (2.0 * (p.rho - 1.0));
}

/// Ball of 2^n sites plus the wired boundary vertex (last row), pinned there.
/// Site i (1-based) lives in row i-1.
inline WeightedGraph build_level_graph(const HierParams& p) {
  p.validate();
  // full dense matrices stay desk-sized up to 2^14+1 vertices; deeper levels
  // exist only through the cascade arrays
  if (p.level > 14) throw std::invalid_argument("level graph too large to materialize");
  const Eigen::Index m = Eigen::Index(1) << p.level;
  WeightedGraph g;
  g.weights.setZero(m + 1, m + 1);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = a + 1; b < m; ++b)
      g.weights(a, b) = g.weights(b, a) =
          hier_weight(std::uint64_t(a) + 1, std::uint64_t(b) + 1, p);
  const double wd = wired_boundary_weight(1, p);
  for (Eigen::Index a = 0; a < m; ++a) g.weights(a, m) = g.weights(m, a) = wd;
  g.pinning = m;
  return g;
}

/// Block-swap automorphism: exchanges [1,2^n] with [2^n+1,2^(n+1)], fixes the
/// rest. An involution that preserves hier_weight.
inline std::uint64_t block_swap(std::uint64_t i, int n) {
  const std::uint64_t half = std::uint64_t(1) << n;
  if (i >= 1 && i <= half) return i + half;
  if (i > half && i <= 2 * half) return i - half;
  return i;
}

}  // namespace h22
