#pragma once

#include "h22/rng.hpp"
#include "h22/schrodinger.hpp"
#include "h22/weighted_graph.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace h22 {

/// One vertex split: reduced vertex `parent` blows up into the fine-graph
/// pair {parent, parent+1} (split_vertex layout) with the given intra weight.
struct PairSplit {
  Eigen::Index parent = 0;
  double intra_weight = 0.0;
};

/// The auxiliary randomness of one pair split. beta_check is the half-sum
/// coordinate (beta1 + beta2 + w)/2; t is the chi-square variable with
/// beta_check = (t + 2 beta' + 4w)/4; eps is the Rademacher sign of
/// beta1 - beta2.
struct SplitDraw {
  double t = 0.0;
  double eps = 1.0;
  double beta_check = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
};

/// Exact reduction of the pair potential: 1/(2 beta') is the average of the
/// entries of the inverted 2x2 pair block,
///   1/(2 beta') = (1/4) (2 b1 + 2 b2 + 2w) / (4 b1 b2 - w^2).
inline double coarse_grain_beta(double beta1, double beta2, double w) {
  const double det = 4.0 * beta1 * beta2 - w * w;
  if (!(det > 0.0)) throw consistency_error("pair block not positive definite");
  return det / (beta1 + beta2 + w);
}

/// Row/column averaging of a Green matrix over the indistinguishable pair
/// {c, c+1}: off-pair entries are kept, the merged row is the pair average and
/// the merged diagonal the average of the four pair entries.
template <class Derived>
Eigen::MatrixXd coarse_grain_G(const Eigen::MatrixBase<Derived>& green, Eigen::Index c) {
  const Eigen::Index n = green.rows();
  if (c < 0 || c + 1 >= n) throw std::invalid_argument("pair out of range");
  Eigen::MatrixXd out(n - 1, n - 1);
  auto fine = [&](Eigen::Index ell) { return ell <= c ? ell : ell + 1; };
  for (Eigen::Index k = 0; k < n - 1; ++k)
    for (Eigen::Index l = 0; l < n - 1; ++l) {
      if (k == c && l == c)
        out(k, l) = 0.25 * (green(c, c) + green(c, c + 1) + green(c + 1, c) + green(c + 1, c + 1));
      else if (k == c)
        out(k, l) = 0.5 * (green(c, fine(l)) + green(c + 1, fine(l)));
      else if (l == c)
        out(k, l) = 0.5 * (green(fine(k), c) + green(fine(k), c + 1));
      else
        out(k, l) = green(fine(k), fine(l));
    }
  return out;
}

/// Deterministic core of the pair split for a forced (t, eps) draw.
inline SplitDraw fine_grain_pair_from(double beta_prime, double w, double t, double eps) {
  SplitDraw d;
  d.t = t;
  d.eps = eps;
  d.beta_check = 0.25 * (t + 2.0 * beta_prime + 4.0 * w);
  const double sum = 2.0 * d.beta_check - w;
  const double diff = eps * std::sqrt(t * d.beta_check);
  d.beta1 = 0.5 * (sum + diff);
  d.beta2 = 0.5 * (sum - diff);
  return d;
}

/// Split one reduced potential value into a pair with prescribed intra weight.
/// t ~ chi^2_1 and an independent sign give
///   beta_check = (t + 2 beta' + 4w)/4,
///   beta1 + beta2 = 2 beta_check - w,   beta1 - beta2 = eps sqrt(t beta_check),
/// which inverts coarse_grain_beta exactly and keeps 4 b1 b2 - w^2 =
/// 2 beta_check beta' > 0.
inline SplitDraw fine_grain_pair(double beta_prime, double w, RngStream& rng) {
  if (!(beta_prime > 0.0)) throw std::invalid_argument("beta' must be positive");
  if (!(w > 0.0)) throw std::invalid_argument("intra weight must be positive");
  const double t = rng.chi_square_1();
  const double eps = rng.rademacher();
  return fine_grain_pair_from(beta_prime, w, t, eps);
}

/// Pair block of the fine Green matrix, from the inverted 2x2 operator block
/// plus the excursion correction through the rest of the graph:
///   G_UU = Ghat + c (Ghat 1)(Ghat 1)^T,  c = (4 beta'^2 G'(u,u) - 2 beta')/4,
/// where Ghat = [[2 b1, -w], [-w, 2 b2]]^{-1}. The 2x2 determinant has the
/// exact value 2 beta_check beta'.
inline Eigen::Matrix2d fine_pair_block(const SplitDraw& d, double beta_prime, double w,
                                       double green_uu) {
  const double det = 2.0 * d.beta_check * beta_prime;
  Eigen::Matrix2d ghat;
  ghat << 2.0 * d.beta2, w, w, 2.0 * d.beta1;
  ghat /= det;
  const Eigen::Vector2d s = ghat * Eigen::Vector2d::Ones();
  const double c = (4.0 * beta_prime * beta_prime * green_uu - 2.0 * beta_prime) / 4.0;
  if (c < 0.0) throw consistency_error("reduced Green diagonal below its lower bound");
  return ghat + c * s * s.transpose();
}

/// Fine-grain a reduced Green matrix across one pair split. Off-pair entries
/// are preserved bit for bit; the new pair rows follow from the reconstructed
/// pair block: their sums equal twice the reduced row and their ratio equals
/// the ratio of the pair-block column sums. When beta_prime is not supplied it
/// is recovered from the inverse of the reduced matrix, which is also checked
/// to be a Schrodinger operator of the reduced graph.
inline Eigen::MatrixXd fine_grain_G(const Eigen::MatrixXd& reduced_green,
                                    const WeightedGraph& fine_graph, const PairSplit& split,
                                    RngStream& rng, double beta_prime = -1.0,
                                    SplitDraw* out_draw = nullptr) {
  const Eigen::Index m = reduced_green.rows();
  const Eigen::Index c = split.parent;
  if (reduced_green.cols() != m) throw std::invalid_argument("reduced Green not square");
  if (fine_graph.size() != m + 1) throw std::invalid_argument("fine graph size mismatch");
  if (c < 0 || c >= m) throw std::invalid_argument("split parent out of range");
  if (!is_indistinguishable(fine_graph, {c, c + 1}))
    throw std::invalid_argument("split children not indistinguishable");
  if (fine_graph.weights(c, c + 1) != split.intra_weight)
    throw std::invalid_argument("intra weight does not match the fine graph");

  if (beta_prime <= 0.0) {
    // fallback for externally supplied matrices: invert and validate shape
    Eigen::LLT<Eigen::MatrixXd> llt(reduced_green);
    if (llt.info() != Eigen::Success)
      throw consistency_error("reduced Green matrix is not positive definite");
    const Eigen::MatrixXd hp = llt.solve(Eigen::MatrixXd::Identity(m, m));
    const WeightedGraph rg = reduced_weights(fine_graph, c);
    const double scale = hp.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < m; ++k)
      for (Eigen::Index l = 0; l < m; ++l)
        if (k != l && std::abs(hp(k, l) + rg.weights(k, l)) > 1e-8 * scale)
          throw consistency_error("reduced matrix does not invert to the reduced operator");
    beta_prime = 0.5 * hp(c, c);
  }

  SplitDraw d = fine_grain_pair(beta_prime, split.intra_weight, rng);
  if (out_draw) *out_draw = d;

  const Eigen::Matrix2d block = fine_pair_block(d, beta_prime, split.intra_weight, reduced_green(c, c));
  const double s1 = block(0, 0) + block(1, 0);
  const double s2 = block(0, 1) + block(1, 1);
  const double ratio = s1 / s2;

  Eigen::MatrixXd out(m + 1, m + 1);
  auto fine = [&](Eigen::Index ell) { return ell <= c ? ell : ell + 1; };
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = 0; l < m; ++l)
      if (k != c && l != c) out(fine(k), fine(l)) = reduced_green(k, l);
  out.block<2, 2>(c, c) = block;
  for (Eigen::Index l = 0; l < m; ++l) {
    if (l == c) continue;
    const double pair_sum = 2.0 * reduced_green(c, l);
    const double g1 = pair_sum * ratio / (1.0 + ratio);
    const double g2 = pair_sum / (1.0 + ratio);
    out(c, fine(l)) = out(fine(l), c) = g1;
    out(c + 1, fine(l)) = out(fine(l), c + 1) = g2;
  }
  return out;
}

/// Right-hand side of the one-step exponential martingale identity,
///   E[exp(-<lambda, G eta> - <lambda, G lambda>/2) | reduced field]
///     = exp(-<hat lambda, G'' hat eta> - <hat lambda, G'' hat lambda>/2),
/// where hat maps the pair entries to their sum divided by sqrt(2) and G'' is
/// the averaged reduced Green matrix with the merged row/column rescaled by
/// sqrt(2) (the orthonormal block average).
inline double exponential_martingale_rhs(const Eigen::MatrixXd& reduced_green, Eigen::Index c,
                                         const Eigen::VectorXd& lambda,
                                         const Eigen::VectorXd& eta) {
  const Eigen::Index m = reduced_green.rows();
  if (lambda.size() != m + 1 || eta.size() != m + 1)
    throw std::invalid_argument("lambda/eta live on the fine graph");
  const double inv_sqrt2 = 0.70710678118654752440;
  Eigen::VectorXd lam_hat(m), eta_hat(m);
  auto fine = [&](Eigen::Index ell) { return ell <= c ? ell : ell + 1; };
  for (Eigen::Index k = 0; k < m; ++k) {
    if (k == c) {
      lam_hat(k) = (lambda(c) + lambda(c + 1)) * inv_sqrt2;
      eta_hat(k) = (eta(c) + eta(c + 1)) * inv_sqrt2;
    } else {
      lam_hat(k) = lambda(fine(k));
      eta_hat(k) = eta(fine(k));
    }
  }
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(m);
  scale(c) = std::sqrt(2.0);
  const Eigen::MatrixXd g2 = scale.asDiagonal() * reduced_green * scale.asDiagonal();
  return std::exp(-lam_hat.dot(g2 * eta_hat) - 0.5 * lam_hat.dot(g2 * lam_hat));
}

struct MartingaleCheck {
  double mc_mean = 0.0;
  double mc_se = 0.0;
  double closed_form = 0.0;
  long n_samples = 0;
  bool passed = false;
};

/// Hold a reduced state fixed, draw independent fine-grainings and compare
/// the empirical mean of exp(-<lambda,G eta> - <lambda,G lambda>/2) with the
/// closed-form right side. eta must be constant on the split pair; the
/// identity additionally requires lambda constant on the pair (the exact-zero
/// cases lambda = 0 and lambda supported off the pair satisfy this trivially).
inline MartingaleCheck verify_exponential_martingale(const SchrodingerState& reduced,
                                                     const PairSplit& split,
                                                     const WeightedGraph& fine_graph,
                                                     const Eigen::VectorXd& lambda,
                                                     const Eigen::VectorXd& eta, long n,
                                                     RngStream& rng) {
  const Eigen::Index c = split.parent;
  if (eta(c) != eta(c + 1)) throw std::invalid_argument("eta must be constant on the pair");
  MartingaleCheck r;
  r.n_samples = n;
  r.closed_form = exponential_martingale_rhs(reduced.green, c, lambda, eta);
  double sum = 0.0, sumsq = 0.0;
  const double beta_prime = reduced.beta(c);
  for (long k = 0; k < n; ++k) {
    const Eigen::MatrixXd g = fine_grain_G(reduced.green, fine_graph, split, rng, beta_prime);
    const double x = std::exp(-lambda.dot(g * eta) - 0.5 * lambda.dot(g * lambda));
    sum += x;
    sumsq += x * x;
  }
  r.mc_mean = sum / n;
  const double var = std::max(0.0, sumsq / n - r.mc_mean * r.mc_mean);
  r.mc_se = std::sqrt(var / n);
  r.passed = std::abs(r.mc_mean - r.closed_form) <= std::max(3.0 * r.mc_se, 1e-12);
  return r;
}

}  // namespace h22
