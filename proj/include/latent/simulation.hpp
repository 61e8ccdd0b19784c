#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latent/alignment.hpp"
#include "latent/embedding.hpp"
#include "latent/graph.hpp"
#include "latent/permutation.hpp"
#include "latent/rng.hpp"
#include "latent/types.hpp"

namespace latent {

enum class AlignmentMethod { median_flip, otp };

std::string to_string(AlignmentMethod method);
AlignmentMethod parse_alignment(const std::string& name);  // "median" or "otp"

/// Rotates or flips y toward x; returns the aligned copy of y. OTP goes
/// through otp_align_with_retry.
LatentPositions align(const LatentPositions& x, const LatentPositions& y, AlignmentMethod method,
                      const OtpOptions& otp = {});

/// otp_align, doubling the regularization after each Sinkhorn convergence
/// failure, at most `retries` times.
AlignmentResult otp_align_with_retry(const LatentPositions& x, const LatentPositions& y, const OtpOptions& otp = {},
                                     int retries = 4);

/// 95% Wilson score interval for k successes out of n.
std::pair<double, double> wilson_interval(int successes, int trials, double z = 1.959963984540054);

struct PowerCurve {
  std::string experiment;
  std::string statistic;
  std::string alignment;
  double rho = 0.0;
  double alpha = 0.05;
  int replicates = 0;
  int permutations = 0;
  RngSeed seed;

  std::vector<Index> sizes;
  std::vector<int> rejections;
  std::vector<double> rate;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
  std::vector<int> degenerate;                // replicates whose statistic was undefined (p = 1)
  std::vector<std::vector<double>> p_values;  // [size][replicate]

  /// Rejection rate at another level, recomputed from the stored p-values.
  double rate_at(std::size_t size_index, double level) const;
};

// ---------------------------------------------------------------------------
// Univariate latent positions

enum class UnivariateScenario { null_same, linear_shift, nonlinear_beta };

std::string to_string(UnivariateScenario scenario);
UnivariateScenario parse_scenario(const std::string& name);  // null, linear, nonlinear

/// n draws of the first (second == false) or second sample's distribution:
/// Unif(0.2, 0.7) for the first sample and for the null's second sample,
/// Unif(0.2, 0.7) + 0.1 for the shift, 0.5 Beta(0.2, 0.2) + 0.2 otherwise.
VecX draw_univariate(UnivariateScenario scenario, bool second, Index n, Engine& engine);

struct UnivariateConfig {
  UnivariateScenario scenario = UnivariateScenario::null_same;
  std::vector<Index> sizes{50, 100};
  int replicates = 200;
  double alpha = 0.05;
  std::vector<StatisticKind> statistics{StatisticKind::dcorr_unbiased, StatisticKind::mgc};
  int permutations = 500;
  RngSeed seed;
  int threads = 0;
};

/// Per replicate: two RDPGs on n vertices, 1-d ASE, median flip, k-sample
/// transform, permutation test. One curve per statistic; all statistics see
/// the same graphs and permutations.
std::vector<PowerCurve> run_univariate_power(const UnivariateConfig& config);

// ---------------------------------------------------------------------------
// Synthetic pairs from an estimated connectome embedding

struct SyntheticPair {
  AdjacencyMatrix a;
  AdjacencyMatrix b;
  std::vector<Index> sampled;        // source row of each slot (with replacement)
  std::vector<Index> perturbed;      // slots that received a sphere offset, ascending
  LatentPositions y;                 // latent positions behind a
  LatentPositions z;                 // latent positions behind b
  LatentPositions offsets;           // epsilon per slot (zero rows outside `perturbed`)
};

/// Square roots of the per-vertex plug-in covariances, for repeated sampling.
std::vector<MatX> covariance_factors(const LatentPositions& xhat);

/// m slots drawn with replacement from the rows of xhat; round(rho * m)
/// slots perturbed by a uniform point on the radius-r sphere. Slot i gets
/// y_i ~ N(xhat_k, S_k) and z_i ~ N(xhat_k + eps_i, S_k); both graphs are
/// sampled with clipped dot products.
SyntheticPair generate_synthetic_pair(const LatentPositions& xhat, const std::vector<MatX>& factors, Index m,
                                      double rho, double radius, const RngSeed& seed);

SyntheticPair generate_synthetic_pair(const LatentPositions& xhat, Index m, double rho, double radius,
                                      const RngSeed& seed);

/// r * g / ||g|| for standard normal g.
VecX uniform_on_sphere(Index d, double radius, Engine& engine);

struct SyntheticConfig {
  LatentPositions source;
  std::string source_name = "source";
  std::vector<Index> sizes{50, 100, 200};
  double rho = 0.0;
  double radius = 1.0;
  Index dimension = 3;
  std::vector<AlignmentMethod> alignments{AlignmentMethod::median_flip, AlignmentMethod::otp};
  std::vector<StatisticKind> statistics{StatisticKind::dcorr_unbiased, StatisticKind::mgc};
  int replicates = 200;
  double alpha = 0.05;
  int permutations = 500;
  RngSeed seed;
  int threads = 0;
  OtpOptions otp;
};

/// One curve per (alignment, statistic), alignment-major.
std::vector<PowerCurve> run_synthetic_power(const SyntheticConfig& config);

// ---------------------------------------------------------------------------
// Two-sample test on a pair of observed graphs

struct GraphTestConfig {
  std::optional<Index> dimension;  // unset: profile-likelihood selection
  int max_elbows = 1;
  AlignmentMethod alignment = AlignmentMethod::otp;
  StatisticKind statistic = StatisticKind::mgc;
  int permutations = 1000;
  double alpha = 0.05;
  RngSeed seed;
  bool correct_variance = false;
  int threads = 0;
  OtpOptions otp;
};

struct GraphTestReport {
  Index dimension = 0;
  EmbeddingResult embedding_a;
  EmbeddingResult embedding_b;
  LatentPositions aligned_b;
  std::optional<AlignmentResult> alignment;  // OTP only
  VecX flips;                                // median flip only
  bool variance_corrected = false;
  TestResult test;
  bool reject = false;
};

/// Embeds both graphs, optionally corrects the larger embedding's variance,
/// aligns b to a, and runs the permutation test on the k-sample transform.
/// With an automatic dimension the larger of the two graphs' elbows is used.
GraphTestReport two_sample_graph_test(const AdjacencyMatrix& a, const AdjacencyMatrix& b,
                                      const GraphTestConfig& config);

struct HemisphereConfig {
  std::vector<Index> dimensions{1, 2, 3, 4, 5};
  std::vector<AlignmentMethod> alignments{AlignmentMethod::otp, AlignmentMethod::median_flip};
  std::vector<StatisticKind> statistics{StatisticKind::mgc, StatisticKind::dcorr_unbiased};
  int permutations = 1000;
  RngSeed seed;
  bool correct_variance = false;
  int threads = 0;
  OtpOptions otp;
};

struct HemisphereRow {
  StatisticKind statistic;
  AlignmentMethod alignment;
  std::vector<double> p_values;    // per dimension
  std::vector<double> statistics;  // per dimension
};

struct HemisphereTable {
  std::vector<Index> dimensions;
  std::vector<HemisphereRow> rows;  // alignment-major, as in the usual layout
  int permutations = 0;
  RngSeed seed;

  const HemisphereRow& row(StatisticKind statistic, AlignmentMethod alignment) const;
};

/// p-values of the left-vs-right test for every (alignment, statistic,
/// dimension). Rows at one dimension share permutations.
HemisphereTable hemisphere_test(const AdjacencyMatrix& left, const AdjacencyMatrix& right,
                                const HemisphereConfig& config);

}  // namespace latent
