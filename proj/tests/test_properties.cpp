// Randomized checks of the invariants each module promises.
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "latent/alignment.hpp"
#include "latent/embedding.hpp"
#include "latent/graph.hpp"
#include "latent/permutation.hpp"
#include "latent/simulation.hpp"
#include "oracles.hpp"

using namespace latent;

namespace {

LatentPositions uniform_positions(Index n, Index d, double lo, double hi, Engine& engine) {
  LatentPositions x(n, d);
  for (Index i = 0; i < x.size(); ++i) x(i) = lo + (hi - lo) * uniform01(engine);
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// graphs

TEST_CASE("sampled graphs validate and reproduce") {
  auto engine = make_engine({1, 0});
  for (int t = 0; t < 20; ++t) {
    const LatentPositions x = uniform_positions(15 + t, 2, -0.2, 1.0, engine);
    const RngSeed seed{static_cast<std::uint64_t>(t), 3};
    const auto a = sample_rdpg(x, seed);
    CHECK(validate_graph(a.matrix()).empty());
    CHECK(sample_rdpg(x, seed).matrix() == a.matrix());
  }
}

TEST_CASE("shrinking positions lowers the edge count") {
  auto engine = make_engine({2, 0});
  const LatentPositions x = uniform_positions(40, 2, 0.2, 0.7, engine);
  const LatentPositions shrunk = 0.7 * x;
  double full = 0, small = 0;
  for (int rep = 0; rep < 100; ++rep) {
    full += static_cast<double>(sample_rdpg(x, {5, static_cast<std::uint64_t>(rep)}).edge_count());
    small += static_cast<double>(sample_rdpg(shrunk, {6, static_cast<std::uint64_t>(rep)}).edge_count());
  }
  CHECK(small < full);
}

// ---------------------------------------------------------------------------
// embedding

TEST_CASE("ase reproduces the best rank-d approximation") {
  auto engine = make_engine({3, 0});
  int checked = 0;
  for (int t = 0; t < 80; ++t) {
    const Index n = 10 + (t * 7) % 41;
    const Index d = 1 + t % 3;
    const auto a = sample_rdpg(uniform_positions(n, d, 0.1, 0.6, engine), {7, static_cast<std::uint64_t>(t)});
    const auto embedding = ase(a, d);

    Eigen::JacobiSVD<MatX> svd(a.matrix(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    const MatX best = svd.matrixU().leftCols(d) * svd.singularValues().head(d).asDiagonal() *
                      svd.matrixV().leftCols(d).transpose();
    // X X^T is PSD, so it can only match when every retained eigenvalue is
    // positive; signed eigenvalues are recovered from the Rayleigh quotient.
    bool positive = true;
    for (Index k = 0; k < d; ++k) {
      const VecX u = svd.matrixU().col(k);
      positive = positive && u.dot(a.matrix() * u) > 0;
    }
    // Skip ties at the cut, where the best rank-d approximation is not unique.
    const bool gap = d == n || svd.singularValues()(d - 1) - svd.singularValues()(d) > 1e-6;
    if (!positive || !gap) continue;
    ++checked;
    CHECK((embedding.positions * embedding.positions.transpose() - best).norm() < 1e-8);
  }
  CHECK(checked >= 10);
}

TEST_CASE("select_dimension agrees with brute force") {
  auto engine = make_engine({4, 0});
  for (int t = 0; t < 100; ++t) {
    const std::size_t p = 2 + static_cast<std::size_t>(t % 29);
    std::vector<double> v(p);
    for (auto& x : v) x = t % 5 == 0 ? std::floor(4 * uniform01(engine)) : 10 * uniform01(engine);
    std::sort(v.begin(), v.end(), std::greater<>());
    const VecX values = Eigen::Map<const VecX>(v.data(), static_cast<Index>(p));
    CHECK(select_dimension(values).dimension == static_cast<Index>(oracle::profile_argmax(v)));
  }
}

TEST_CASE("clt covariance is rotation equivariant") {
  auto engine = make_engine({5, 0});
  for (int t = 0; t < 10; ++t) {
    const Index d = 1 + t % 3;
    const LatentPositions x = uniform_positions(30, d, 0.1, 0.5, engine);
    const MatX w = oracle::random_orthogonal(d, engine);
    const auto plain = estimate_clt_covariance(x);
    const auto rotated = estimate_clt_covariance(x * w);
    for (std::size_t i = 0; i < plain.size(); ++i) {
      CHECK((rotated[i] - w.transpose() * plain[i] * w).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

// ---------------------------------------------------------------------------
// alignment

TEST_CASE("median flip is idempotent and fixes its reference") {
  auto engine = make_engine({6, 0});
  for (int t = 0; t < 20; ++t) {
    const LatentPositions x = oracle::random_matrix(25, 3, engine);
    const LatentPositions y = oracle::random_matrix(25, 3, engine);
    const auto once = median_sign_flip(x, y).flipped;
    CHECK(median_sign_flip(x, once).flipped == once);
    CHECK(median_sign_flip(x, x).flipped == x);
  }
}

TEST_CASE("procrustes beats random rotations") {
  auto engine = make_engine({7, 0});
  for (int t = 0; t < 5; ++t) {
    const Index d = 2 + t % 3;
    const MatX x = oracle::random_matrix(20, d, engine);
    const MatX y = oracle::random_matrix(20, d, engine);
    const MatX w = orthogonal_procrustes(x, y);
    const double best = (x - y * w).norm();
    for (int k = 0; k < 100; ++k) CHECK(best <= (x - y * oracle::random_orthogonal(d, engine)).norm() + 1e-12);
  }
}

TEST_CASE("otp objective never increases along the alternation") {
  auto engine = make_engine({8, 0});
  for (int t = 0; t < 5; ++t) {
    const LatentPositions x = uniform_positions(40, 2, -0.5, 1.0, engine);
    const LatentPositions y = oracle::random_matrix(35, 2, engine);
    const MatX cost = transport_cost(x, y, MatX::Identity(2, 2));
    const double reg = 0.1 * median(Eigen::Map<const VecX>(cost.data(), cost.size()));
    for (int start = 0; start < 4; ++start) {
      MatX w0 = MatX::Identity(2, 2);
      if (start & 1) w0(0, 0) = -1;
      if (start & 2) w0(1, 1) = -1;
      const auto r = otp_align_from(x, y, w0, reg, OtpOptions{});
      REQUIRE(!r.objective_history.empty());
      for (std::size_t k = 1; k < r.objective_history.size(); ++k) {
        CHECK(r.objective_history[k] <= r.objective_history[k - 1] + 1e-12);
      }
    }
  }
}

TEST_CASE("otp is insensitive to the row order of y") {
  auto engine = make_engine({9, 0});
  for (int t = 0; t < 5; ++t) {
    const LatentPositions x = uniform_positions(30, 2, 0.0, 1.0, engine);
    const LatentPositions y = uniform_positions(30, 2, -1.0, 0.5, engine);
    std::vector<Index> order(30);
    std::iota(order.begin(), order.end(), Index{0});
    fisher_yates(order, engine);
    LatentPositions shuffled(30, 2);
    for (Index i = 0; i < 30; ++i) shuffled.row(i) = y.row(order[static_cast<std::size_t>(i)]);
    CHECK(std::abs(otp_align(x, y).objective - otp_align(x, shuffled).objective) < 1e-6);
  }
}

// ---------------------------------------------------------------------------
// test statistics

TEST_CASE("double centering zeroes row and column sums") {
  auto engine = make_engine({10, 0});
  for (int t = 0; t < 20; ++t) {
    const MatX c = double_center(pairwise_distances(oracle::random_matrix(5 + t, 3, engine)));
    CHECK(c.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    CHECK(c.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("statistics are invariant to rotations of z and to swapping labels") {
  auto engine = make_engine({11, 0});
  for (int t = 0; t < 10; ++t) {
    const Index n = 12 + 3 * t;
    const MatX z = oracle::random_matrix(n, 3, engine);
    const MatX rotated = z * oracle::random_orthogonal(3, engine);
    VecX labels(n);
    for (Index i = 0; i < n; ++i) labels(i) = i % 3 == 0 ? 1.0 : 0.0;
    const VecX swapped = (1.0 - labels.array()).matrix();
    const double d0 = dcorr(z, labels);
    CHECK(std::abs(dcorr(rotated, labels) - d0) < 1e-12);
    CHECK(std::abs(dcorr(z, swapped) - d0) < 1e-12);
    const double m0 = mgc(z, labels).statistic;
    CHECK(std::abs(mgc(rotated, labels).statistic - m0) < 1e-12);
    CHECK(std::abs(mgc(z, swapped).statistic - m0) < 1e-12);
  }
}

TEST_CASE("global mgc scale equals unbiased dcorr") {
  auto engine = make_engine({12, 0});
  for (int t = 0; t < 20; ++t) {
    const MatX z = oracle::random_matrix(8 + t, 2, engine);
    const MatX e = oracle::random_matrix(8 + t, 1, engine);
    CHECK(std::abs(mgc(z, e).global - dcorr(z, e)) < 1e-10);
  }
}

TEST_CASE("permutation p-values are super-uniform under independence") {
  const int replicates = 500;
  const std::array kinds{StatisticKind::dcorr_unbiased, StatisticKind::mgc};
  std::array<int, 2> small{};
  PermutationOptions options;
  options.threads = 1;
  for (int rep = 0; rep < replicates; ++rep) {
    const RngSeed seed = RngSeed{13, 0}.child(static_cast<std::uint64_t>(rep));
    auto engine = make_engine(seed.child(0));
    const MatX z = oracle::random_matrix(20, 2, engine);
    const MatX e = oracle::random_matrix(20, 1, engine);
    const auto results = permutation_test(kinds, z, VecX(e.col(0)), 100, seed.child(1), options);
    for (std::size_t k = 0; k < 2; ++k) small[k] += results[k].p_value <= 0.05;
  }
  const double se = std::sqrt(0.05 * 0.95 / replicates);
  for (const int s : small) CHECK(static_cast<double>(s) / replicates <= 0.05 + 3 * se);
}

// ---------------------------------------------------------------------------
// harness

TEST_CASE("rates at a looser level are never lower") {
  UnivariateConfig config;
  config.scenario = UnivariateScenario::nonlinear_beta;
  config.sizes = {25};
  config.replicates = 30;
  config.permutations = 40;
  config.seed = {14, 0};
  for (const auto& curve : run_univariate_power(config)) {
    CHECK(curve.rate_at(0, 0.10) >= curve.rate_at(0, 0.05));
    CHECK(curve.rate_at(0, 1.0) == 1.0);
  }
}
