#pragma once

#include "h22/weighted_graph.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace h22 {

/// Sampled state violates an exact model invariant (e.g. the operator lost
/// positive definiteness). Always a bug or corrupted input, never a branch.
struct consistency_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Schrodinger operator of a potential beta on a weighted graph:
/// diagonal 2*beta, off-diagonal -W. No positivity check here.
template <class Scalar, class Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> assemble_schrodinger(
    const WeightedGraphT<Scalar>& g, const Eigen::MatrixBase<Derived>& beta) {
  if (beta.size() != g.size()) throw std::invalid_argument("beta dimension mismatch");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> h = -g.weights;
  h.diagonal() = Scalar(2) * beta;
  return h;
}

/// Inverse of a symmetric positive definite operator, certified through the
/// Cholesky factorization. Failure is fatal: correctly sampled potentials
/// always satisfy {H > 0}.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> green_matrix(
    const Eigen::MatrixBase<Derived>& h) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success)
    throw consistency_error("operator is not positive definite");
  Matrix g = llt.solve(Matrix::Identity(h.rows(), h.cols()));
  // entries are strictly positive on connected graphs and never negative
  if ((g.array() < Scalar(0)).any())
    throw consistency_error("Green matrix has a negative entry");
  return g;
}

/// Log-ratio field of a Green matrix pinned at i0: u_i = ln G(i0,i) - ln G(i0,i0).
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> u_field(
    const Eigen::MatrixBase<Derived>& green, Eigen::Index i0) {
  using Scalar = typename Derived::Scalar;
  if (i0 < 0 || i0 >= green.rows()) throw std::invalid_argument("pinning out of range");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> u(green.rows());
  const Scalar g00 = green(i0, i0);
  if (!(g00 > Scalar(0))) throw consistency_error("nonpositive pinned Green entry");
  for (Eigen::Index i = 0; i < green.rows(); ++i) {
    const Scalar gi = green(i0, i);
    if (!(gi > Scalar(0))) throw consistency_error("nonpositive Green entry");
    u(i) = std::log(gi) - std::log(g00);
  }
  u(i0) = Scalar(0);
  return u;
}

/// Rebuild the potential from a pinned u-field and the independent pinning
/// variable gamma = 1/(2 G(i0,i0)):  2 beta_i = sum_j W_ij e^{u_j-u_i} + [i==i0] 2 gamma.
template <class Scalar, class Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> beta_from_u(
    const WeightedGraphT<Scalar>& g, const Eigen::MatrixBase<Derived>& u, Scalar gamma,
    Eigen::Index i0) {
  if (u.size() != g.size()) throw std::invalid_argument("u dimension mismatch");
  if (!(gamma > Scalar(0))) throw std::invalid_argument("gamma must be positive");
  if (u(i0) != Scalar(0)) throw std::invalid_argument("u must vanish at the pinning vertex");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> beta(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    Scalar acc = Scalar(0);
    for (Eigen::Index j = 0; j < g.size(); ++j)
      if (g.weights(i, j) > Scalar(0)) acc += g.weights(i, j) * std::exp(u(j) - u(i));
    if (i == i0) acc += Scalar(2) * gamma;
    beta(i) = acc / Scalar(2);
  }
  return beta;
}

/// Partial sum of the nearest-neighbor path expansion of G(i,j) over paths of
/// length at most L, via S_{l+1} = D^{-1} + D^{-1} W S_l with D = diag(2 beta).
/// Nondecreasing in L and convergent to G(i,j) whenever H is positive definite.
template <class Scalar, class Derived>
Scalar walk_expansion_truncated(const WeightedGraphT<Scalar>& g,
                                const Eigen::MatrixBase<Derived>& beta, Eigen::Index i,
                                Eigen::Index j, int max_length) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (max_length < 0) throw std::invalid_argument("negative path length");
  const Eigen::Index n = g.size();
  if (i < 0 || i >= n || j < 0 || j >= n) throw std::invalid_argument("vertex out of range");
  const auto dinv = (Scalar(2) * beta).cwiseInverse().eval();
  // the series converges iff the similar symmetric matrix D^{-1/2} W D^{-1/2}
  // stays below one in spectral radius (equivalent to H > 0)
  const auto dinv_sqrt = dinv.cwiseSqrt().eval();
  const Matrix sym = dinv_sqrt.asDiagonal() * g.weights * dinv_sqrt.asDiagonal();
  const Scalar radius = sym.template selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
  if (!(radius < Scalar(1)))
    throw consistency_error("path expansion divergent: spectral radius >= 1");
  Matrix s = dinv.asDiagonal();
  for (int l = 0; l < max_length; ++l)
    s = (dinv.asDiagonal() * Matrix(g.weights * s)).eval() + Matrix(dinv.asDiagonal());
  return s(i, j);
}

/// Weighted spanning tree sum D(W,u) = sum_T prod_{(ij) in T} W_ij e^{u_i+u_j},
/// evaluated as a principal cofactor of the Laplacian with conductances
/// W_ij e^{u_i+u_j} (matrix-tree identity). Deletes the pinning row/column
/// when the graph has one, else row/column 0.
template <class Scalar, class Derived>
Scalar spanning_tree_polynomial(const WeightedGraphT<Scalar>& g,
                                const Eigen::MatrixBase<Derived>& u) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = g.size();
  if (u.size() != n) throw std::invalid_argument("u dimension mismatch");
  if (n == 1) return Scalar(1);  // empty product over the single-vertex tree
  Matrix c(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      c(a, b) = (a == b) ? Scalar(0) : g.weights(a, b) * std::exp(u(a) + u(b));
  Matrix lap = Matrix(c.colwise().sum().asDiagonal()) - c;
  const Eigen::Index drop = g.pinning ? *g.pinning : 0;
  Matrix minor(n - 1, n - 1);
  for (Eigen::Index a = 0, ra = 0; a < n; ++a) {
    if (a == drop) continue;
    for (Eigen::Index b = 0, rb = 0; b < n; ++b) {
      if (b == drop) continue;
      minor(ra, rb) = lap(a, b);
      ++rb;
    }
    ++ra;
  }
  const Scalar det = minor.determinant();
  if (!(det > Scalar(0))) throw consistency_error("spanning-tree sum not positive (disconnected graph?)");
  return det;
}

/// Entrywise-relative inversion residual: max |(G H - I)_ij| scaled by the
/// magnitudes entering the product. Scale-invariant, so heavy-tailed states
/// (Green entries grow like 1/gamma) are judged by backward error rather
/// than raw magnitude.
template <class DerivedG, class DerivedH>
double inverse_residual(const Eigen::MatrixBase<DerivedG>& green,
                        const Eigen::MatrixBase<DerivedH>& h) {
  const Eigen::MatrixXd r = green * h - Eigen::MatrixXd::Identity(green.rows(), green.cols());
  const Eigen::MatrixXd scale = green.cwiseAbs() * h.cwiseAbs();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j)
      worst = std::max(worst, std::abs(r(i, j)) / (1.0 + scale(i, j)));
  return worst;
}

/// Entrywise gap between two matrices relative to the target's magnitude.
template <class DerivedA, class DerivedB>
double relative_gap(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / (1.0 + std::abs(b(i, j))));
  return worst;
}

/// A graph together with a sampled potential and the derived operator data.
template <class Scalar = double>
struct SchrodingerStateT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  WeightedGraphT<Scalar> graph;
  Vector beta;
  Matrix h;
  Matrix green;
  Vector pinned_u;  // u-field for graph.pinning (empty when unpinned)
};

using SchrodingerState = SchrodingerStateT<double>;

template <class Scalar, class Derived>
SchrodingerStateT<Scalar> make_state(const WeightedGraphT<Scalar>& g,
                                     const Eigen::MatrixBase<Derived>& beta) {
  SchrodingerStateT<Scalar> s;
  s.graph = g;
  s.beta = beta;
  s.h = assemble_schrodinger(g, beta);
  s.green = green_matrix(s.h);
  if ((s.green.array() <= Scalar(0)).any())
    throw consistency_error("Green matrix of a sampled state must be strictly positive");
  if (inverse_residual(s.green, s.h) > 1e-10)
    throw consistency_error("inversion residual above tolerance");
  if (g.pinning) s.pinned_u = u_field(s.green, *g.pinning);
  return s;
}

}  // namespace h22
