#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "latent/graph.hpp"
#include "latent/rng.hpp"
#include "latent/types.hpp"

namespace latent {

template <typename Scalar>
struct Embedding {
  Positions<Scalar> positions;         // n x d, U S^{1/2}
  Vec<Scalar> singular_values;         // d retained, nonincreasing
  Vec<Scalar> all_singular_values;     // full spectrum, nonincreasing

  Index dimension() const { return positions.cols(); }
};

using EmbeddingResult = Embedding<double>;

/// Spectral embedding of a symmetric matrix: the d eigenpairs of largest
/// |eigenvalue|, scaled by sqrt(|eigenvalue|). For symmetric input the
/// singular values are the absolute eigenvalues and the left singular
/// vectors are the eigenvectors. Each column is signed so that its entry of
/// largest magnitude (first on ties) is positive.
template <typename Derived>
Embedding<typename Derived::Scalar> spectral_embedding(const Eigen::MatrixBase<Derived>& a, Index d) {
  using Scalar = typename Derived::Scalar;
  const Index n = a.rows();
  if (a.cols() != n) throw InvalidArgument("spectral_embedding: matrix must be square");
  if (d < 1 || d > n) {
    throw InvalidArgument("spectral_embedding: need 1 <= d <= n (d=" + std::to_string(d) +
                          ", n=" + std::to_string(n) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(a.derived().template cast<Scalar>());
  if (solver.info() != Eigen::Success) throw Error("spectral_embedding: eigendecomposition failed");

  const Vec<Scalar>& values = solver.eigenvalues();
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
    return std::abs(values(x)) > std::abs(values(y));
  });

  Embedding<Scalar> out;
  out.all_singular_values.resize(n);
  for (Index i = 0; i < n; ++i) out.all_singular_values(i) = std::abs(values(order[i]));
  out.singular_values = out.all_singular_values.head(d);
  out.positions.resize(n, d);
  for (Index c = 0; c < d; ++c) {
    Vec<Scalar> u = solver.eigenvectors().col(order[c]);
    Index peak = 0;
    u.cwiseAbs().maxCoeff(&peak);
    if (u(peak) < Scalar(0)) u = -u;
    out.positions.col(c) = u * std::sqrt(out.singular_values(c));
  }
  return out;
}

/// Adjacency spectral embedding.
EmbeddingResult ase(const AdjacencyMatrix& a, Index d);

struct DimensionSelection {
  Index dimension = 1;
  std::vector<Index> elbows;        // successive elbows, 1-based
  std::vector<double> profile;      // log-likelihood of each split for the first elbow
  bool degenerate = false;          // all values equal; dimension forced to 1
};

/// Profile-likelihood elbow of a nonincreasing sequence: the split q that
/// maximizes the log-likelihood of a two-segment Gaussian model with
/// segment means and one pooled MLE variance. With more than one candidate
/// the search repeats on the values after each elbow; the last elbow found
/// is returned.
DimensionSelection select_dimension(const VecX& values, int max_elbow_candidates = 1);

/// Log-likelihood of splitting `values` after the first q entries.
double split_log_likelihood(const VecX& values, Index q);

/// Per-vertex plug-in covariance of the spectral embedding error,
/// (1/n) D^{-1} [ (1/n) sum_j x_j x_j^T max(0, p_ij - p_ij^2) ] D^{-1}
/// with D = X^T X / n and p_ij = x_i . x_j. Each matrix is symmetrized and
/// negative eigenvalues clipped to zero.
std::vector<MatX> estimate_clt_covariance(const LatentPositions& x);

/// Symmetric square root of a PSD matrix (negative eigenvalues clipped).
MatX psd_factor(const MatX& covariance);

/// mean + factor * g for standard normal g, i.e. a draw from
/// N(mean, factor * factor^T).
VecX draw_gaussian(const VecX& mean, const MatX& factor, Engine& engine);

/// Adds N(0, (n_large / n_small - 1) * cov_i) to each row so the noise level
/// of the larger graph's embedding matches that of a graph with n_small
/// vertices.
LatentPositions variance_correct(const LatentPositions& x_large, Index n_small, const RngSeed& seed);

/// Same, with explicit per-vertex covariances.
LatentPositions variance_correct(const LatentPositions& x_large, const std::vector<MatX>& covariances,
                                 Index n_small, const RngSeed& seed);

}  // namespace latent
