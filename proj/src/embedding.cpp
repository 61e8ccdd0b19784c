#include "latent/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace latent {

EmbeddingResult ase(const AdjacencyMatrix& a, Index d) {
  if (d > a.size()) {
    throw InvalidArgument("ase: embedding dimension " + std::to_string(d) + " exceeds vertex count " +
                          std::to_string(a.size()));
  }
  return spectral_embedding(a.matrix(), d);
}

double split_log_likelihood(const VecX& values, Index q) {
  const Index p = values.size();
  const auto head = values.head(q);
  const auto tail = values.tail(p - q);
  const double ss = (head.array() - head.mean()).square().sum() + (tail.array() - tail.mean()).square().sum();
  const double variance = ss / static_cast<double>(p);
  if (variance <= 0.0) return std::numeric_limits<double>::infinity();
  return -0.5 * static_cast<double>(p) * (std::log(2.0 * std::numbers::pi * variance) + 1.0);
}

namespace {

// 1-based split maximizing the profile likelihood; lowest split on ties.
// Splits that tie exactly in real arithmetic can differ in the last bits,
// so values within 1e-12 relative count as tied.
Index best_split(const VecX& values, std::vector<double>* profile) {
  const Index p = values.size();
  Index best = 1;
  double best_ll = 0.0;
  for (Index q = 1; q < p; ++q) {
    const double ll = split_log_likelihood(values, q);
    if (profile) profile->push_back(ll);
    const bool better = q == 1 || (std::isinf(best_ll) ? ll > best_ll
                                                       : ll > best_ll + 1e-12 * std::max(1.0, std::abs(best_ll)));
    if (better) {
      best_ll = ll;
      best = q;
    }
  }
  return best;
}

}  // namespace

DimensionSelection select_dimension(const VecX& values, int max_elbow_candidates) {
  if (values.size() < 2) throw InvalidArgument("select_dimension: need at least two values");
  if (max_elbow_candidates < 1) throw InvalidArgument("select_dimension: max_elbow_candidates must be >= 1");

  DimensionSelection out;
  if ((values.array() == values(0)).all()) {
    out.degenerate = true;
    out.elbows = {1};
    out.dimension = 1;
    return out;
  }
  Index offset = 0;
  for (int c = 0; c < max_elbow_candidates; ++c) {
    const Index remaining = values.size() - offset;
    if (remaining < 2) break;
    const VecX rest = values.tail(remaining);
    if (c > 0 && (rest.array() == rest(0)).all()) break;
    offset += best_split(rest, c == 0 ? &out.profile : nullptr);
    out.elbows.push_back(offset);
  }
  out.dimension = out.elbows.back();
  return out;
}

std::vector<MatX> estimate_clt_covariance(const LatentPositions& x) {
  const Index n = x.rows();
  const auto nd = static_cast<double>(n);
  const MatX second_moment = x.transpose() * x / nd;
  Eigen::FullPivLU<MatX> lu(second_moment);
  if (!lu.isInvertible()) {
    throw DegenerateInput("estimate_clt_covariance: X^T X is singular; embedding is rank deficient, use a smaller d");
  }
  const MatX inverse = lu.inverse();
  const MatX gram = x * x.transpose();

  std::vector<MatX> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const VecX weight = (gram.row(i).array() - gram.row(i).array().square()).max(0.0).matrix();
    const MatX middle = x.transpose() * weight.asDiagonal() * x / nd;
    MatX cov = inverse * middle * inverse / nd;
    cov = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<MatX> solver(cov);
    const VecX clipped = solver.eigenvalues().cwiseMax(0.0);
    const MatX rebuilt = solver.eigenvectors() * clipped.asDiagonal() * solver.eigenvectors().transpose();
    out[static_cast<std::size_t>(i)] = 0.5 * (rebuilt + rebuilt.transpose());
  }
  return out;
}

MatX psd_factor(const MatX& covariance) {
  Eigen::SelfAdjointEigenSolver<MatX> solver(0.5 * (covariance + covariance.transpose()));
  const VecX roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

VecX draw_gaussian(const VecX& mean, const MatX& factor, Engine& engine) {
  VecX g(mean.size());
  for (Index k = 0; k < g.size(); ++k) g(k) = standard_normal(engine);
  return mean + factor * g;
}

LatentPositions variance_correct(const LatentPositions& x_large, const std::vector<MatX>& covariances,
                                 Index n_small, const RngSeed& seed) {
  const Index n_large = x_large.rows();
  if (n_small < 1 || n_small >= n_large) {
    throw InvalidArgument("variance_correct: need 1 <= n_small < n_large (n_small=" + std::to_string(n_small) +
                          ", n_large=" + std::to_string(n_large) + ")");
  }
  if (static_cast<Index>(covariances.size()) != n_large) {
    throw InvalidArgument("variance_correct: one covariance per vertex required");
  }
  const double scale = static_cast<double>(n_large) / static_cast<double>(n_small) - 1.0;
  auto engine = make_engine(seed);
  LatentPositions out = x_large;
  const VecX zero = VecX::Zero(x_large.cols());
  for (Index i = 0; i < n_large; ++i) {
    const MatX factor = psd_factor(scale * covariances[static_cast<std::size_t>(i)]);
    out.row(i) += draw_gaussian(zero, factor, engine).transpose();
  }
  return out;
}

LatentPositions variance_correct(const LatentPositions& x_large, Index n_small, const RngSeed& seed) {
  if (n_small >= x_large.rows()) {
    throw InvalidArgument("variance_correct: n_small must be smaller than the embedded graph");
  }
  return variance_correct(x_large, estimate_clt_covariance(x_large), n_small, seed);
}

}  // namespace latent
