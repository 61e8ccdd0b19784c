#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "latent/types.hpp"

namespace latent {

struct SignFlip {
  LatentPositions flipped;
  VecX signs;  // +1 or -1 per dimension
};

/// Negates each column of y whose median sign differs from the matching
/// column of x. A zero median counts as positive.
SignFlip median_sign_flip(const LatentPositions& x, const LatentPositions& y);

/// Median of a column (mean of the two middle values for even length).
double median(const VecX& values);

/// W minimizing ||x - y W||_F over orthogonal W, from the SVD of y^T x.
template <typename DerivedX, typename DerivedY>
Mat<typename DerivedX::Scalar> orthogonal_procrustes(const Eigen::MatrixBase<DerivedX>& x,
                                                     const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw InvalidArgument("orthogonal_procrustes: X and Y must have the same shape");
  }
  const Mat<Scalar> cross = y.transpose() * x;
  Eigen::JacobiSVD<Mat<Scalar>> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Nearest orthogonal matrix (polar factor) of a square matrix.
template <typename Derived>
Mat<typename Derived::Scalar> polar_factor(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::JacobiSVD<Mat<Scalar>> svd(m.derived().eval(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

struct TransportPlan {
  MatX plan;                  // n x m, rows sum to 1/n, columns to 1/m
  int iterations = 0;
  double marginal_error = 0;  // max absolute marginal deviation
};

/// Entropy-regularized optimal transport between uniform marginals. Works
/// with scaling vectors when exp(-C/reg) is representable and switches to
/// log-domain potentials otherwise. Throws ConvergenceError if the marginal
/// error is still >= tol after max_iter sweeps.
TransportPlan sinkhorn_plan(const MatX& cost, double reg, double tol = 1e-8, int max_iter = 2000);

/// Unregularized optimal transport between uniform marginals (exact, by
/// successive shortest paths on integer masses m/g per row and n/g per
/// column, g = gcd(n, m)). `iterations` counts augmenting paths.
TransportPlan exact_transport(const MatX& cost);

/// (C_W)_ij = ||x_i - W y_j||^2.
MatX transport_cost(const LatentPositions& x, const LatentPositions& y, const MatX& rotation);

struct OtpOptions {
  /// Entropic regularization; unset means reg_scale * median(C_I).
  std::optional<double> reg;
  double reg_scale = 0.1;
  double tol = 1e-6;           // on ||W_{t+1} - W_t||_F
  int max_outer_iter = 100;
  double sinkhorn_tol = 1e-8;
  int sinkhorn_max_iter = 2000;
  /// Exact-transport alternation steps applied to the winning start; 0
  /// keeps the entropic plan.
  int exact_refinement_iter = 20;
};

struct AlignmentResult {
  MatX rotation;  // W; apply as y W^T
  MatX plan;
  double objective = 0;  // <plan, C_W>
  int iterations = 0;
  int initialization = 0;  // bit k set: dimension k starts at -1
  double reg = 0;
  double entropic_objective = 0;  // objective when the Sinkhorn alternation stopped
  int refinement_iterations = 0;
  std::vector<double> objective_history;  // per outer iteration, chosen start
};

/// Optimal transport Procrustes: from every diagonal +-1 start, alternate a
/// Sinkhorn plan for the current W with the weighted Procrustes update
/// W = polar(x^T plan y). The start with the lowest final objective wins
/// (lowest id within 1e-12). The winner is then refined by the same
/// alternation with exact transport plans, which removes the entropic
/// blur from the reported plan and objective.
AlignmentResult otp_align(const LatentPositions& x, const LatentPositions& y, const OtpOptions& options = {});

/// Runs the alternation from a single starting rotation.
AlignmentResult otp_align_from(const LatentPositions& x, const LatentPositions& y, const MatX& start, double reg,
                               const OtpOptions& options);

/// y W^T: maps the rows of y toward the rows of x.
LatentPositions apply_rotation(const LatentPositions& y, const MatX& rotation);

}  // namespace latent
