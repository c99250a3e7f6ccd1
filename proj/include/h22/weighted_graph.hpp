#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <vector>

namespace h22 {

/// Finite weighted graph with symmetric nonnegative edge weights, an optional
/// nonnegative boundary-weight vector eta and an optional pinning vertex.
/// Vertices are rows 0..n-1 of the weight matrix.
template <class Scalar = double>
struct WeightedGraphT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weights;                    // W(i,j) = W(j,i) >= 0, zero diagonal
  std::optional<Vector> boundary;    // eta >= 0, indexed by vertices
  std::optional<Eigen::Index> pinning;

  Eigen::Index size() const { return weights.rows(); }

  bool has_boundary() const { return boundary.has_value(); }

  // Structural invariants: symmetry, sign, zero diagonal, connectivity of the
  // positive-weight graph (boundary links count as edges to a common root).
  void validate() const {
    const Eigen::Index n = size();
    if (weights.cols() != n) throw std::invalid_argument("weight matrix not square");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (weights(i, i) != Scalar(0)) throw std::invalid_argument("nonzero weight diagonal");
      for (Eigen::Index j = 0; j < n; ++j) {
        if (weights(i, j) < Scalar(0)) throw std::invalid_argument("negative edge weight");
        if (weights(i, j) != weights(j, i)) throw std::invalid_argument("asymmetric weights");
      }
    }
    if (boundary) {
      if (boundary->size() != n) throw std::invalid_argument("boundary size mismatch");
      if ((boundary->array() < Scalar(0)).any()) throw std::invalid_argument("negative boundary weight");
    }
    if (pinning && (*pinning < 0 || *pinning >= n)) throw std::invalid_argument("pinning out of range");
    if (!connected()) throw std::invalid_argument("graph not connected");
  }

  bool connected() const {
    const Eigen::Index n = size();
    if (n == 0) return false;
    std::vector<char> seen(static_cast<std::size_t>(n) + 1, 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Eigen::Index v = stack.back();
      stack.pop_back();
      if (v == n) {  // virtual boundary root
        for (Eigen::Index j = 0; j < n; ++j)
          if (!seen[j] && boundary && (*boundary)(j) > Scalar(0)) { seen[j] = 1; stack.push_back(j); }
        continue;
      }
      for (Eigen::Index j = 0; j < n; ++j)
        if (!seen[j] && weights(v, j) > Scalar(0)) { seen[j] = 1; stack.push_back(j); }
      if (boundary && !seen[n] && (*boundary)(v) > Scalar(0)) { seen[n] = 1; stack.push_back(n); }
    }
    for (Eigen::Index j = 0; j < n; ++j)
      if (!seen[j]) return false;
    return true;
  }
};

using WeightedGraph = WeightedGraphT<double>;

/// True iff every vertex outside U sees all members of U with identical
/// weights (and, when a boundary is present, all members share one eta).
template <class Scalar>
bool is_indistinguishable(const WeightedGraphT<Scalar>& g,
                          const std::vector<Eigen::Index>& subset) {
  if (subset.empty()) throw std::invalid_argument("empty subset");
  std::vector<char> in_u(static_cast<std::size_t>(g.size()), 0);
  for (auto i : subset) {
    if (i < 0 || i >= g.size()) throw std::invalid_argument("subset vertex out of range");
    in_u[static_cast<std::size_t>(i)] = 1;
  }
  const Eigen::Index ref = subset.front();
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    if (in_u[static_cast<std::size_t>(k)]) continue;
    for (auto i : subset)
      if (g.weights(k, i) != g.weights(k, ref)) return false;
  }
  if (g.boundary)
    for (auto i : subset)
      if ((*g.boundary)(i) != (*g.boundary)(ref)) return false;
  return true;
}

/// Collapse an indistinguishable pair {c, c+1} into one vertex at position c.
/// New weights from the merged vertex are the sums of the children's weights;
/// boundary weights add as well.
template <class Scalar>
WeightedGraphT<Scalar> reduced_weights(const WeightedGraphT<Scalar>& g, Eigen::Index c) {
  if (c < 0 || c + 1 >= g.size()) throw std::invalid_argument("pair out of range");
  if (!is_indistinguishable(g, {c, c + 1})) throw std::invalid_argument("pair not indistinguishable");
  const Eigen::Index n = g.size();
  WeightedGraphT<Scalar> r;
  r.weights.setZero(n - 1, n - 1);
  auto fine = [&](Eigen::Index ell) { return ell <= c ? ell : ell + 1; };
  for (Eigen::Index k = 0; k < n - 1; ++k)
    for (Eigen::Index l = 0; l < n - 1; ++l) {
      if (k == l) continue;
      Scalar wk;
      if (k == c) wk = g.weights(c, fine(l)) + g.weights(c + 1, fine(l));
      else if (l == c) wk = g.weights(fine(k), c) + g.weights(fine(k), c + 1);
      else wk = g.weights(fine(k), fine(l));
      r.weights(k, l) = wk;
    }
  if (g.boundary) {
    typename WeightedGraphT<Scalar>::Vector eta(n - 1);
    for (Eigen::Index k = 0; k < n - 1; ++k)
      eta(k) = (k == c) ? (*g.boundary)(c) + (*g.boundary)(c + 1) : (*g.boundary)(fine(k));
    r.boundary = eta;
  }
  if (g.pinning) {
    if (*g.pinning == c || *g.pinning == c + 1) throw std::invalid_argument("cannot reduce the pinning vertex");
    r.pinning = *g.pinning < c ? *g.pinning : *g.pinning - 1;
  }
  return r;
}

/// Inverse of reduce_pair on the graph level: vertex p splits into {p, p+1},
/// each child inheriting half of p's outside weights (and half its eta), with
/// the given intra-pair weight. Vertices after p shift up by one.
template <class Scalar>
WeightedGraphT<Scalar> split_vertex(const WeightedGraphT<Scalar>& g, Eigen::Index p,
                                    Scalar intra_weight) {
  if (p < 0 || p >= g.size()) throw std::invalid_argument("split vertex out of range");
  if (intra_weight <= Scalar(0)) throw std::invalid_argument("intra weight must be positive");
  const Eigen::Index n = g.size();
  WeightedGraphT<Scalar> f;
  f.weights.setZero(n + 1, n + 1);
  auto fine = [&](Eigen::Index ell) { return ell <= p ? ell : ell + 1; };
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l) {
      if (k == l) continue;
      if (k == p) {
        f.weights(p, fine(l)) = f.weights(fine(l), p) = g.weights(p, l) / Scalar(2);
        f.weights(p + 1, fine(l)) = f.weights(fine(l), p + 1) = g.weights(p, l) / Scalar(2);
      } else if (l != p) {
        f.weights(fine(k), fine(l)) = g.weights(k, l);
      }
    }
  f.weights(p, p + 1) = f.weights(p + 1, p) = intra_weight;
  if (g.boundary) {
    typename WeightedGraphT<Scalar>::Vector eta(n + 1);
    for (Eigen::Index k = 0; k < n; ++k) eta(fine(k)) = (*g.boundary)(k);
    eta(p) = eta(p + 1) = (*g.boundary)(p) / Scalar(2);
    f.boundary = eta;
  }
  if (g.pinning) {
    if (*g.pinning == p) throw std::invalid_argument("cannot split the pinning vertex");
    f.pinning = *g.pinning < p ? *g.pinning : *g.pinning + 1;
  }
  return f;
}

}  // namespace h22
