#include "latent/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latent/parallel.hpp"

namespace latent {

std::string to_string(AlignmentMethod method) {
  return method == AlignmentMethod::otp ? "otp" : "median";
}

AlignmentMethod parse_alignment(const std::string& name) {
  if (name == "otp") return AlignmentMethod::otp;
  if (name == "median" || name == "median-flip") return AlignmentMethod::median_flip;
  throw InvalidArgument("unknown alignment \"" + name + "\" (expected otp or median)");
}

LatentPositions align(const LatentPositions& x, const LatentPositions& y, AlignmentMethod method,
                      const OtpOptions& otp) {
  if (method == AlignmentMethod::median_flip) return median_sign_flip(x, y).flipped;
  return apply_rotation(y, otp_align_with_retry(x, y, otp).rotation);
}

AlignmentResult otp_align_with_retry(const LatentPositions& x, const LatentPositions& y, const OtpOptions& otp,
                                     int retries) {
  // Very sparse graphs embed many vertices at the origin, and Sinkhorn then
  // crawls at the default regularization. Doubling reg usually fixes it.
  OtpOptions options = otp;
  for (int attempt = 0;; ++attempt) {
    try {
      return otp_align(x, y, options);
    } catch (const ConvergenceError&) {
      if (attempt >= retries) throw;
      if (options.reg) {
        *options.reg *= 2;
      } else {
        options.reg_scale *= 2;
      }
    }
  }
}

std::pair<double, double> wilson_interval(int successes, int trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double center = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes >= trials ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

double PowerCurve::rate_at(std::size_t size_index, double level) const {
  const auto& ps = p_values.at(size_index);
  if (ps.empty()) return 0.0;
  const auto hits = std::count_if(ps.begin(), ps.end(), [&](double p) { return p <= level; });
  return static_cast<double>(hits) / static_cast<double>(ps.size());
}

namespace {

// Seeds within one replicate.
enum Stream : std::uint64_t { first_latent, second_latent, first_graph, second_graph, permutations_stream };

struct Replicate {
  std::vector<double> p_values;  // per statistic
  bool degenerate = false;
};

// One permutation test per statistic on a shared permutation stream. An
// undefined statistic (e.g. an empty graph) counts as p = 1.
Replicate test_replicate(std::span<const StatisticKind> kinds, const LatentPositions& x, const LatentPositions& y,
                         int permutations, const RngSeed& seed) {
  Replicate out;
  const auto sample = ksample_transform(x, y);
  PermutationOptions options;
  options.threads = 1;
  try {
    for (const auto& r : permutation_test(kinds, sample.z, sample.labels, permutations, seed, options)) {
      out.p_values.push_back(r.p_value);
    }
  } catch (const DegenerateInput&) {
    out.p_values.assign(kinds.size(), 1.0);
    out.degenerate = true;
  }
  return out;
}

PowerCurve empty_curve(const std::string& experiment, StatisticKind kind, const std::string& alignment,
                       const std::vector<Index>& sizes, int replicates, int permutations, double alpha, double rho,
                       const RngSeed& seed) {
  PowerCurve c;
  c.experiment = experiment;
  c.statistic = to_string(kind);
  c.alignment = alignment;
  c.rho = rho;
  c.alpha = alpha;
  c.replicates = replicates;
  c.permutations = permutations;
  c.seed = seed;
  c.sizes = sizes;
  return c;
}

void summarize(PowerCurve& c, std::vector<double> p_values, int degenerate) {
  int hits = 0;
  for (const double p : p_values) hits += p <= c.alpha ? 1 : 0;
  const auto [lo, hi] = wilson_interval(hits, static_cast<int>(p_values.size()));
  c.rejections.push_back(hits);
  c.rate.push_back(p_values.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(p_values.size()));
  c.ci_lo.push_back(lo);
  c.ci_hi.push_back(hi);
  c.degenerate.push_back(degenerate);
  c.p_values.push_back(std::move(p_values));
}

void check_replicates(int replicates, int permutations, const std::vector<Index>& sizes) {
  if (replicates < 1) throw InvalidArgument("power study: need at least one replicate");
  if (permutations < 1) throw InvalidArgument("power study: need at least one permutation");
  if (sizes.empty()) throw InvalidArgument("power study: empty size grid");
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(UnivariateScenario scenario) {
  switch (scenario) {
    case UnivariateScenario::null_same: return "null";
    case UnivariateScenario::linear_shift: return "linear";
    case UnivariateScenario::nonlinear_beta: return "nonlinear";
  }
  return "unknown";
}

UnivariateScenario parse_scenario(const std::string& name) {
  if (name == "null") return UnivariateScenario::null_same;
  if (name == "linear" || name == "linear-shift") return UnivariateScenario::linear_shift;
  if (name == "nonlinear" || name == "nonlinear-beta") return UnivariateScenario::nonlinear_beta;
  throw InvalidArgument("unknown scenario \"" + name + "\" (expected null, linear or nonlinear)");
}

VecX draw_univariate(UnivariateScenario scenario, bool second, Index n, Engine& engine) {
  VecX out(n);
  for (Index i = 0; i < n; ++i) {
    if (!second || scenario == UnivariateScenario::null_same) {
      out(i) = 0.2 + 0.5 * uniform01(engine);
    } else if (scenario == UnivariateScenario::linear_shift) {
      out(i) = 0.3 + 0.5 * uniform01(engine);
    } else {
      out(i) = 0.5 * beta_variate(engine, 0.2, 0.2) + 0.2;
    }
  }
  return out;
}

std::vector<PowerCurve> run_univariate_power(const UnivariateConfig& config) {
  check_replicates(config.replicates, config.permutations, config.sizes);
  const std::size_t reps = static_cast<std::size_t>(config.replicates);
  const std::string experiment = "univariate-" + to_string(config.scenario);

  std::vector<PowerCurve> curves;
  for (const auto kind : config.statistics) {
    curves.push_back(empty_curve(experiment, kind, "median", config.sizes, config.replicates, config.permutations,
                                 config.alpha, 0.0, config.seed));
  }

  for (std::size_t s = 0; s < config.sizes.size(); ++s) {
    const Index n = config.sizes[s];
    std::vector<Replicate> results(reps);
    parallel_for(reps, config.threads, [&](std::size_t rep) {
      const RngSeed seed = config.seed.child(s).child(rep);
      auto ex = make_engine(seed.child(first_latent));
      auto ey = make_engine(seed.child(second_latent));
      const LatentPositions x = draw_univariate(config.scenario, false, n, ex);
      const LatentPositions y = draw_univariate(config.scenario, true, n, ey);
      const auto a = sample_rdpg(x, seed.child(first_graph));
      const auto b = sample_rdpg(y, seed.child(second_graph));
      const auto xhat = ase(a, 1).positions;
      const auto yhat = median_sign_flip(xhat, ase(b, 1).positions).flipped;
      results[rep] = test_replicate(config.statistics, xhat, yhat, config.permutations,
                                    seed.child(permutations_stream));
    });
    for (std::size_t k = 0; k < curves.size(); ++k) {
      std::vector<double> ps;
      int degenerate = 0;
      for (const auto& r : results) {
        ps.push_back(r.p_values[k]);
        degenerate += r.degenerate ? 1 : 0;
      }
      summarize(curves[k], std::move(ps), degenerate);
    }
  }
  return curves;
}

// ---------------------------------------------------------------------------

std::vector<MatX> covariance_factors(const LatentPositions& xhat) {
  std::vector<MatX> factors;
  for (const auto& s : estimate_clt_covariance(xhat)) factors.push_back(psd_factor(s));
  return factors;
}

VecX uniform_on_sphere(Index d, double radius, Engine& engine) {
  VecX g(d);
  double norm = 0.0;
  do {
    for (Index k = 0; k < d; ++k) g(k) = standard_normal(engine);
    norm = g.norm();
  } while (!(norm > 0.0));
  return radius * g / norm;
}

SyntheticPair generate_synthetic_pair(const LatentPositions& xhat, const std::vector<MatX>& factors, Index m,
                                      double rho, double radius, const RngSeed& seed) {
  const Index n = xhat.rows();
  const Index d = xhat.cols();
  if (m < 1) throw InvalidArgument("generate_synthetic_pair: need m >= 1");
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidArgument("generate_synthetic_pair: need 0 <= rho <= 1");
  if (!(radius >= 0.0)) throw InvalidArgument("generate_synthetic_pair: need r >= 0");
  if (static_cast<Index>(factors.size()) != n) {
    throw InvalidArgument("generate_synthetic_pair: one covariance factor per source row required");
  }

  auto slots = make_engine(seed.child(0));
  auto subset = make_engine(seed.child(1));
  auto offsets = make_engine(seed.child(2));
  auto draws_y = make_engine(seed.child(3));
  auto draws_z = make_engine(seed.child(4));

  std::vector<Index> sampled(static_cast<std::size_t>(m));
  for (auto& k : sampled) k = static_cast<Index>(uniform_below(slots, static_cast<std::uint64_t>(n)));

  const auto changed = static_cast<Index>(std::llround(rho * static_cast<double>(m)));
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  fisher_yates(order, subset);
  std::vector<Index> perturbed(order.begin(), order.begin() + changed);
  std::sort(perturbed.begin(), perturbed.end());

  LatentPositions eps = LatentPositions::Zero(m, d);
  for (const Index i : perturbed) eps.row(i) = uniform_on_sphere(d, radius, offsets).transpose();

  LatentPositions y(m, d), z(m, d);
  for (Index i = 0; i < m; ++i) {
    const Index k = sampled[static_cast<std::size_t>(i)];
    const VecX mean = xhat.row(k).transpose();
    const MatX& factor = factors[static_cast<std::size_t>(k)];
    y.row(i) = draw_gaussian(mean, factor, draws_y).transpose();
    z.row(i) = draw_gaussian(mean + eps.row(i).transpose(), factor, draws_z).transpose();
  }

  return SyntheticPair{sample_rdpg(y, seed.child(5)), sample_rdpg(z, seed.child(6)), std::move(sampled),
                       std::move(perturbed), std::move(y), std::move(z), std::move(eps)};
}

SyntheticPair generate_synthetic_pair(const LatentPositions& xhat, Index m, double rho, double radius,
                                      const RngSeed& seed) {
  return generate_synthetic_pair(xhat, covariance_factors(xhat), m, rho, radius, seed);
}

std::vector<PowerCurve> run_synthetic_power(const SyntheticConfig& config) {
  check_replicates(config.replicates, config.permutations, config.sizes);
  if (config.source.rows() < 1 || config.source.cols() < 1) {
    throw InvalidArgument("run_synthetic_power: empty source positions");
  }
  for (const Index m : config.sizes) {
    if (m < config.dimension) throw InvalidArgument("run_synthetic_power: need m >= d");
  }
  const auto factors = covariance_factors(config.source);
  const std::size_t reps = static_cast<std::size_t>(config.replicates);
  const std::size_t n_stats = config.statistics.size();
  const std::string experiment = "synthetic-" + config.source_name;

  std::vector<PowerCurve> curves;
  for (const auto method : config.alignments) {
    for (const auto kind : config.statistics) {
      curves.push_back(empty_curve(experiment, kind, to_string(method), config.sizes, config.replicates,
                                   config.permutations, config.alpha, config.rho, config.seed));
    }
  }

  for (std::size_t s = 0; s < config.sizes.size(); ++s) {
    const Index m = config.sizes[s];
    std::vector<std::vector<Replicate>> results(reps);
    parallel_for(reps, config.threads, [&](std::size_t rep) {
      const RngSeed seed = config.seed.child(s).child(rep);
      const auto pair = generate_synthetic_pair(config.source, factors, m, config.rho, config.radius, seed.child(0));
      const auto xhat = ase(pair.a, config.dimension).positions;
      const auto yhat = ase(pair.b, config.dimension).positions;
      for (const auto method : config.alignments) {
        const auto aligned = align(xhat, yhat, method, config.otp);
        results[rep].push_back(
            test_replicate(config.statistics, xhat, aligned, config.permutations, seed.child(permutations_stream)));
      }
    });
    for (std::size_t a = 0; a < config.alignments.size(); ++a) {
      for (std::size_t k = 0; k < n_stats; ++k) {
        std::vector<double> ps;
        int degenerate = 0;
        for (const auto& r : results) {
          ps.push_back(r[a].p_values[k]);
          degenerate += r[a].degenerate ? 1 : 0;
        }
        summarize(curves[a * n_stats + k], std::move(ps), degenerate);
      }
    }
  }
  return curves;
}

// ---------------------------------------------------------------------------

namespace {

Index automatic_dimension(const EmbeddingResult& full, int max_elbows) {
  return select_dimension(full.all_singular_values, max_elbows).dimension;
}

}  // namespace

GraphTestReport two_sample_graph_test(const AdjacencyMatrix& a, const AdjacencyMatrix& b,
                                      const GraphTestConfig& config) {
  GraphTestReport report;
  if (config.dimension) {
    report.dimension = *config.dimension;
  } else {
    const auto da = automatic_dimension(ase(a, 1), config.max_elbows);
    const auto db = automatic_dimension(ase(b, 1), config.max_elbows);
    report.dimension = std::max(da, db);
  }
  const Index d = report.dimension;
  if (d < 1 || d > std::min(a.size(), b.size())) {
    throw InvalidArgument("embedding dimension " + std::to_string(d) + " out of range for graphs with " +
                          std::to_string(a.size()) + " and " + std::to_string(b.size()) + " vertices");
  }
  report.embedding_a = ase(a, d);
  report.embedding_b = ase(b, d);

  LatentPositions xa = report.embedding_a.positions;
  LatentPositions xb = report.embedding_b.positions;
  if (config.correct_variance && a.size() != b.size()) {
    const RngSeed noise = config.seed.child(1);
    if (a.size() > b.size()) {
      xa = variance_correct(xa, b.size(), noise);
    } else {
      xb = variance_correct(xb, a.size(), noise);
    }
    report.variance_corrected = true;
  }

  if (config.alignment == AlignmentMethod::otp) {
    report.alignment = otp_align_with_retry(xa, xb, config.otp);
    report.aligned_b = apply_rotation(xb, report.alignment->rotation);
  } else {
    auto flip = median_sign_flip(xa, xb);
    report.aligned_b = std::move(flip.flipped);
    report.flips = std::move(flip.signs);
  }

  const auto sample = ksample_transform(xa, report.aligned_b);
  PermutationOptions options;
  options.threads = config.threads;
  report.test = permutation_test(config.statistic, sample.z, sample.labels, config.permutations,
                                 config.seed.child(0), options);
  report.reject = report.test.p_value <= config.alpha;
  return report;
}

const HemisphereRow& HemisphereTable::row(StatisticKind statistic, AlignmentMethod alignment) const {
  for (const auto& r : rows) {
    if (r.statistic == statistic && r.alignment == alignment) return r;
  }
  throw InvalidArgument("hemisphere table has no row " + to_string(statistic) + "+" + to_string(alignment));
}

HemisphereTable hemisphere_test(const AdjacencyMatrix& left, const AdjacencyMatrix& right,
                                const HemisphereConfig& config) {
  HemisphereTable table;
  table.dimensions = config.dimensions;
  table.permutations = config.permutations;
  table.seed = config.seed;
  for (const auto method : config.alignments) {
    for (const auto kind : config.statistics) table.rows.push_back(HemisphereRow{kind, method, {}, {}});
  }

  PermutationOptions options;
  options.threads = config.threads;
  for (std::size_t t = 0; t < config.dimensions.size(); ++t) {
    const Index d = config.dimensions[t];
    LatentPositions xl = ase(left, d).positions;
    LatentPositions xr = ase(right, d).positions;
    if (config.correct_variance && left.size() != right.size()) {
      const RngSeed noise = config.seed.child(t).child(1);
      if (left.size() > right.size()) {
        xl = variance_correct(xl, right.size(), noise);
      } else {
        xr = variance_correct(xr, left.size(), noise);
      }
    }
    std::size_t r = 0;
    for (const auto method : config.alignments) {
      const auto aligned = align(xl, xr, method, config.otp);
      const auto sample = ksample_transform(xl, aligned);
      const auto results = permutation_test(config.statistics, sample.z, sample.labels, config.permutations,
                                            config.seed.child(t).child(0), options);
      for (const auto& result : results) {
        table.rows[r].p_values.push_back(result.p_value);
        table.rows[r].statistics.push_back(result.statistic);
        ++r;
      }
    }
  }
  return table;
}

}  // namespace latent
