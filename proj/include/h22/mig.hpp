#pragma once

#include "h22/rng.hpp"
#include "h22/weighted_graph.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

namespace h22 {

/// Parameter set of the multivariate reciprocal-inverse-Gaussian family:
/// a graph, the local-time vector theta (constant 1 throughout this project)
/// and a nonnegative boundary vector eta.
struct MIGParams {
  WeightedGraph graph;
  Eigen::VectorXd theta;
  Eigen::VectorXd eta;

  static MIGParams plain(const WeightedGraph& g) {
    MIGParams p;
    p.graph = g;
    p.theta = Eigen::VectorXd::Ones(g.size());
    p.eta = g.boundary ? *g.boundary : Eigen::VectorXd::Zero(g.size());
    return p;
  }

  void validate() const {
    if (theta.size() != graph.size() || eta.size() != graph.size())
      throw std::invalid_argument("parameter dimension mismatch");
    if ((theta.array() != 1.0).any())
      throw std::invalid_argument("theta must be constant 1");
    if ((eta.array() < 0.0).any()) throw std::invalid_argument("eta must be nonnegative");
  }
};

/// Laplace transform E[exp(-<lambda, beta>)] of the potential, in closed form:
///   exp(-sum_{i~j} W_ij (sqrt((l_i+th_i^2)(l_j+th_j^2)) - th_i th_j)
///       -sum_i eta_i (sqrt(l_i+th_i^2) - th_i)) * prod_i th_i/sqrt(l_i+th_i^2).
/// The edge sum runs over unordered pairs; the value lies in (0, 1].
inline double laplace_closed_form(const MIGParams& p, const Eigen::VectorXd& lambda) {
  p.validate();
  const Eigen::Index n = p.graph.size();
  if (lambda.size() != n) throw std::invalid_argument("lambda dimension mismatch");
  if ((lambda.array() < 0.0).any()) throw std::invalid_argument("lambda must be nonnegative");
  Eigen::VectorXd root = (lambda.array() + p.theta.array().square()).sqrt();
  double expo = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (p.graph.weights(i, j) > 0.0)
        expo -= p.graph.weights(i, j) * (root(i) * root(j) - p.theta(i) * p.theta(j));
  for (Eigen::Index i = 0; i < n; ++i) expo -= p.eta(i) * (root(i) - p.theta(i));
  double prefactor = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) prefactor *= p.theta(i) / root(i);
  return prefactor * std::exp(expo);
}

/// Monte Carlo estimate of E[exp(-<lambda, beta>)] with its standard error,
/// over N draws produced by the supplied sampler.
inline std::pair<double, double> laplace_mc(
    const std::function<Eigen::VectorXd(RngStream&)>& sample_beta,
    const Eigen::VectorXd& lambda, long n_samples, RngStream& rng) {
  if (n_samples < 1000) throw std::invalid_argument("need at least 1e3 samples");
  double sum = 0.0, sumsq = 0.0;
  for (long k = 0; k < n_samples; ++k) {
    const double x = std::exp(-lambda.dot(sample_beta(rng)));
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n_samples;
  const double var = std::max(0.0, sumsq / n_samples - mean * mean);
  return {mean, std::sqrt(var / n_samples)};
}

}  // namespace h22
