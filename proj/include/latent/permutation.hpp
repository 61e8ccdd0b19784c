#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latent/rng.hpp"
#include "latent/test_stats.hpp"
#include "latent/types.hpp"

namespace latent {

enum class StatisticKind { dcorr_unbiased, dcorr_biased, mgc };

std::string to_string(StatisticKind kind);

/// Accepts "dcorr" / "dcorr-u", "dcorr-biased", "mgc".
StatisticKind parse_statistic(const std::string& name);

struct TestResult {
  StatisticKind kind = StatisticKind::dcorr_unbiased;
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<double> null_values;
  std::optional<Scale> optimal_scale;  // MGC only; empty means global scale
  int permutations = 0;
  RngSeed seed;
};

/// (1 + #{null >= observed}) / (B + 1).
double permutation_pvalue(double observed, std::span<const double> null_values);

/// Independence statistic with the Z side precomputed, so that it can be
/// re-evaluated cheaply for many label vectors.
class PreparedStatistic {
 public:
  PreparedStatistic(StatisticKind kind, const MatX& z, const MgcOptions& mgc = {});

  StatisticKind kind() const { return kind_; }
  Index size() const { return centered_.rows(); }

  /// Labels with exactly two distinct values take a closed-form DCorr and
  /// a direct MGC grid fill; anything else goes through the generic path.
  double evaluate(const VecX& labels) const;
  MgcResult<double> evaluate_mgc(const VecX& labels) const;

  /// The generic path only, for checking the two-group shortcuts.
  double evaluate_generic(const VecX& labels) const;

 private:
  struct Groups;
  double dcorr_two_groups(const Groups& groups) const;
  detail::Smoothed<double> mgc_two_groups(const Groups& groups, MatX* local) const;
  MgcResult<double> mgc_generic(const VecX& labels) const;

  StatisticKind kind_;
  MgcOptions mgc_;
  MatX centered_;
  double variance_ = 0.0;  // squared norm of centered_
  VecX row_sums_;
  RankMatrix ranks_;
  RankMatrix ranks_t_;  // ranks_ transposed, for row-contiguous access
  VecX rank_variance_;  // cumulative sum of centered_^2 by rank
};

/// Row-wise ranks of |e_i - e_j| as in neighbor_ranks, in O(N^2) when e has
/// at most two distinct values.
RankMatrix label_ranks(const VecX& labels);

struct PermutationOptions {
  int threads = 0;  // 0: resolve_threads default
  MgcOptions mgc;
};

/// Observed statistic plus B replicates with the labels shuffled by
/// Fisher-Yates; replicate b draws from seed.child(b).
TestResult permutation_test(StatisticKind kind, const MatX& z, const VecX& labels, int permutations,
                            const RngSeed& seed, const PermutationOptions& options = {});

/// Several statistics evaluated on the same permutations.
std::vector<TestResult> permutation_test(std::span<const StatisticKind> kinds, const MatX& z, const VecX& labels,
                                         int permutations, const RngSeed& seed,
                                         const PermutationOptions& options = {});

}  // namespace latent
