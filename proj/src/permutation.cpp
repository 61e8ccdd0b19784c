#include "latent/permutation.hpp"

#include <numeric>

#include "latent/parallel.hpp"

namespace latent {

std::string to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::dcorr_unbiased: return "dcorr";
    case StatisticKind::dcorr_biased: return "dcorr-biased";
    case StatisticKind::mgc: return "mgc";
  }
  return "unknown";
}

StatisticKind parse_statistic(const std::string& name) {
  if (name == "dcorr" || name == "dcorr-u" || name == "dcorr-unbiased") return StatisticKind::dcorr_unbiased;
  if (name == "dcorr-biased") return StatisticKind::dcorr_biased;
  if (name == "mgc") return StatisticKind::mgc;
  throw InvalidArgument("unknown statistic \"" + name + "\" (expected dcorr, dcorr-biased or mgc)");
}

double permutation_pvalue(double observed, std::span<const double> null_values) {
  std::size_t count = 0;
  for (const double v : null_values) count += v >= observed ? 1 : 0;
  return (1.0 + static_cast<double>(count)) / (static_cast<double>(null_values.size()) + 1.0);
}

RankMatrix label_ranks(const VecX& labels) {
  const Index n = labels.size();
  const double first = n > 0 ? labels(0) : 0.0;
  Index other_at = -1;
  for (Index i = 0; i < n; ++i) {
    if (labels(i) == first) continue;
    if (other_at >= 0 && labels(i) != labels(other_at)) return neighbor_ranks(pairwise_distances(labels));
    if (other_at < 0) other_at = i;
  }
  RankMatrix ranks(n, n);
  for (Index i = 0; i < n; ++i) {
    std::int32_t r = 1;
    ranks(i, i) = 0;
    for (Index j = 0; j < n; ++j) {
      if (j != i && labels(j) == labels(i)) ranks(i, j) = r++;
    }
    for (Index j = 0; j < n; ++j) {
      if (labels(j) != labels(i)) ranks(i, j) = r++;
    }
  }
  return ranks;
}

struct PreparedStatistic::Groups {
  std::vector<std::uint8_t> group;  // 0 for the first label value, 1 for the other
  Index count[2] = {0, 0};
};

namespace {

// Group indicator when the labels take exactly two values. Statistics built
// on |e_i - e_j| are invariant to the gap between the values.
bool two_groups(const VecX& labels, std::vector<std::uint8_t>& group, Index count[2]) {
  const Index n = labels.size();
  group.assign(static_cast<std::size_t>(n), 0);
  count[0] = count[1] = 0;
  if (n == 0) return false;
  const double first = labels(0);
  bool have_other = false;
  double other = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double v = labels(i);
    if (v == first) {
      ++count[0];
      continue;
    }
    if (!have_other) {
      have_other = true;
      other = v;
    } else if (v != other) {
      return false;
    }
    group[static_cast<std::size_t>(i)] = 1;
    ++count[1];
  }
  return have_other;
}

// Entries of the centered label-distance matrix: within group 0, within
// group 1, across. The diagonal is 0 under U-centering and the within-group
// value under double centering.
struct BlockValues {
  double same[2];
  double cross;
  double variance;  // squared Frobenius norm
};

BlockValues block_values(const Index count[2], bool unbiased) {
  const double n0 = static_cast<double>(count[0]);
  const double n1 = static_cast<double>(count[1]);
  const double n = n0 + n1;
  const double row_div = unbiased ? n - 2 : n;
  const double grand_div = unbiased ? (n - 1) * (n - 2) : n * n;
  const double r0 = n1 / row_div;
  const double r1 = n0 / row_div;
  const double grand = 2 * n0 * n1 / grand_div;
  BlockValues b;
  b.same[0] = grand - 2 * r0;
  b.same[1] = grand - 2 * r1;
  b.cross = 1 - r0 - r1 + grand;
  const double pairs0 = unbiased ? n0 * (n0 - 1) : n0 * n0;
  const double pairs1 = unbiased ? n1 * (n1 - 1) : n1 * n1;
  b.variance = b.same[0] * b.same[0] * pairs0 + b.same[1] * b.same[1] * pairs1 + 2 * b.cross * b.cross * n0 * n1;
  return b;
}

}  // namespace

PreparedStatistic::PreparedStatistic(StatisticKind kind, const MatX& z, const MgcOptions& mgc)
    : kind_(kind), mgc_(mgc) {
  if (z.rows() < 4) throw InvalidArgument("independence statistic: need N >= 4");
  const MatX distances = pairwise_distances(z);
  centered_ = kind == StatisticKind::dcorr_biased ? double_center(distances) : u_center(distances);
  variance_ = centered_.squaredNorm();
  if (!(variance_ > 0.0)) {
    throw DegenerateInput("independence statistic undefined: Z has zero distance variance");
  }
  row_sums_ = centered_.rowwise().sum();
  if (kind == StatisticKind::mgc) {
    ranks_ = mgc.ranking == NeighborRanking::raw_distance ? neighbor_ranks(distances) : neighbor_ranks(centered_);
    ranks_t_ = ranks_.transpose();
    const Index n = size();
    rank_variance_ = VecX::Zero(n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) rank_variance_(ranks_(i, j)) += centered_(i, j) * centered_(i, j);
    }
    for (Index k = 1; k < n; ++k) rank_variance_(k) += rank_variance_(k - 1);
  }
}

double PreparedStatistic::dcorr_two_groups(const Groups& groups) const {
  const auto b = block_values(groups.count, kind_ != StatisticKind::dcorr_biased);
  // Block sums of the Z-side matrix from the smaller group's entries and
  // the row sums: S_ss, S_so = R_s - S_ss, S_oo = R_o - S_so.
  const std::uint8_t s = groups.count[1] <= groups.count[0] ? 1 : 0;
  thread_local std::vector<Index> members;
  members.clear();
  double rows_s = 0.0, rows_o = 0.0;
  for (Index i = 0; i < size(); ++i) {
    if (groups.group[static_cast<std::size_t>(i)] == s) {
      members.push_back(i);
      rows_s += row_sums_(i);
    } else {
      rows_o += row_sums_(i);
    }
  }
  double within = 0.0;
  for (const Index j : members) {
    for (const Index i : members) within += centered_(i, j);
  }
  const double across = rows_s - within;
  const double other = rows_o - across;
  const double cov = b.same[s] * within + b.same[1 - s] * other + 2 * b.cross * across;
  return cov / std::sqrt(variance_ * b.variance);
}

detail::Smoothed<double> PreparedStatistic::mgc_two_groups(const Groups& groups, MatX* local) const {
  const Index n = size();
  const auto b = block_values(groups.count, true);
  thread_local std::vector<double> grid;
  thread_local std::vector<double> label_variance;
  grid.assign(static_cast<std::size_t>(n * n), 0.0);
  label_variance.assign(static_cast<std::size_t>(n), 0.0);

  // Label ranks of row i: i itself, then its own group in index order, then
  // the other group in index order. Cell (rank in Z, rank in labels).
  for (Index i = 0; i < n; ++i) {
    const auto g = groups.group[static_cast<std::size_t>(i)];
    const Index own = groups.count[g];
    Index same_seen = 0, other_seen = 0;
    const double* a = centered_.col(i).data();
    const std::int32_t* ra = ranks_t_.col(i).data();
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      Index rank;
      double value;
      if (groups.group[static_cast<std::size_t>(j)] == g) {
        rank = 1 + same_seen++;
        value = b.same[g];
      } else {
        rank = own + other_seen++;
        value = b.cross;
      }
      grid[static_cast<std::size_t>(ra[j] + rank * n)] += a[j] * value;
      label_variance[static_cast<std::size_t>(rank)] += value * value;
    }
  }
  for (Index l = 1; l < n; ++l) label_variance[l] += label_variance[l - 1];

  Eigen::Map<MatX> cov(grid.data(), n, n);
  for (Index l = 0; l < n; ++l) {
    for (Index k = 1; k < n; ++k) cov(k, l) += cov(k - 1, l);
  }
  for (Index l = 1; l < n; ++l) cov.col(l) += cov.col(l - 1);
  for (Index l = 0; l < n; ++l) {
    for (Index k = 0; k < n; ++k) {
      const double denom = rank_variance_(k) * label_variance[static_cast<std::size_t>(l)];
      cov(k, l) = denom > 0.0 ? cov(k, l) / std::sqrt(denom) : 0.0;
    }
  }
  if (local) *local = cov;
  return detail::smooth<double>(cov, mgc_.tau);
}

MgcResult<double> PreparedStatistic::mgc_generic(const VecX& labels) const {
  const MatX distances = pairwise_distances(labels);
  const MatX centered = u_center(distances);
  if (!(centered.squaredNorm() > 0.0)) {
    throw DegenerateInput("mgc undefined: labels have zero distance variance");
  }
  const RankMatrix ranks =
      mgc_.ranking == NeighborRanking::raw_distance ? label_ranks(labels) : neighbor_ranks(centered);
  return smooth_local_correlations(local_correlations(centered_, centered, ranks_, ranks), mgc_.tau);
}

double PreparedStatistic::evaluate_generic(const VecX& labels) const {
  if (labels.size() != size()) throw InvalidArgument("independence statistic: label count mismatch");
  if (kind_ == StatisticKind::mgc) return mgc_generic(labels).statistic;
  const MatX distances = pairwise_distances(labels);
  const MatX centered =
      kind_ == StatisticKind::dcorr_biased ? double_center(distances) : u_center(distances);
  return centered_correlation(centered_, centered);
}

double PreparedStatistic::evaluate(const VecX& labels) const {
  if (labels.size() != size()) throw InvalidArgument("independence statistic: label count mismatch");
  // The centered-ranking MGC variant ranks by centered label distances,
  // which the shortcut does not model.
  const bool shortcut = kind_ != StatisticKind::mgc || mgc_.ranking == NeighborRanking::raw_distance;
  thread_local Groups groups;
  if (!shortcut || !two_groups(labels, groups.group, groups.count)) return evaluate_generic(labels);
  if (kind_ == StatisticKind::mgc) return mgc_two_groups(groups, nullptr).statistic;
  return dcorr_two_groups(groups);
}

MgcResult<double> PreparedStatistic::evaluate_mgc(const VecX& labels) const {
  if (kind_ != StatisticKind::mgc) throw InvalidArgument("evaluate_mgc called on a non-MGC statistic");
  if (labels.size() != size()) throw InvalidArgument("independence statistic: label count mismatch");
  thread_local Groups groups;
  if (mgc_.ranking != NeighborRanking::raw_distance || !two_groups(labels, groups.group, groups.count)) {
    return mgc_generic(labels);
  }
  MgcResult<double> out;
  const auto smoothed = mgc_two_groups(groups, &out.local);
  out.statistic = smoothed.statistic;
  out.global = smoothed.global;
  out.optimal_scale = smoothed.scale;
  return out;
}

std::vector<TestResult> permutation_test(std::span<const StatisticKind> kinds, const MatX& z, const VecX& labels,
                                         int permutations, const RngSeed& seed,
                                         const PermutationOptions& options) {
  if (permutations < 1) throw InvalidArgument("permutation_test: need at least one permutation");
  if (z.rows() != labels.size()) throw InvalidArgument("permutation_test: Z and labels differ in length");

  std::vector<PreparedStatistic> prepared;
  std::vector<TestResult> results;
  for (const auto kind : kinds) {
    prepared.emplace_back(kind, z, options.mgc);
    TestResult r;
    r.kind = kind;
    r.permutations = permutations;
    r.seed = seed;
    if (kind == StatisticKind::mgc) {
      const auto observed = prepared.back().evaluate_mgc(labels);
      r.statistic = observed.statistic;
      r.optimal_scale = observed.optimal_scale;
    } else {
      r.statistic = prepared.back().evaluate(labels);
    }
    r.null_values.resize(static_cast<std::size_t>(permutations));
    results.push_back(std::move(r));
  }

  const Index n = labels.size();
  parallel_for(static_cast<std::size_t>(permutations), options.threads, [&](std::size_t b) {
    auto engine = make_engine(seed.child(b));
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    fisher_yates(order, engine);
    VecX shuffled(n);
    for (Index i = 0; i < n; ++i) shuffled(i) = labels(order[static_cast<std::size_t>(i)]);
    for (std::size_t s = 0; s < prepared.size(); ++s) results[s].null_values[b] = prepared[s].evaluate(shuffled);
  });

  for (auto& r : results) r.p_value = permutation_pvalue(r.statistic, r.null_values);
  return results;
}

TestResult permutation_test(StatisticKind kind, const MatX& z, const VecX& labels, int permutations,
                            const RngSeed& seed, const PermutationOptions& options) {
  const StatisticKind kinds[] = {kind};
  return std::move(permutation_test(kinds, z, labels, permutations, seed, options).front());
}

}  // namespace latent
