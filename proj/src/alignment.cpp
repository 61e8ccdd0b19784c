#include "latent/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace latent {

double median(const VecX& values) {
  if (values.size() == 0) throw InvalidArgument("median of an empty column");
  std::vector<double> v(values.data(), values.data() + values.size());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

SignFlip median_sign_flip(const LatentPositions& x, const LatentPositions& y) {
  if (x.cols() != y.cols()) {
    throw InvalidArgument("median_sign_flip: dimension mismatch (" + std::to_string(x.cols()) + " vs " +
                          std::to_string(y.cols()) + ")");
  }
  SignFlip out{y, VecX::Ones(y.cols())};
  for (Index c = 0; c < x.cols(); ++c) {
    const bool x_positive = median(x.col(c)) >= 0.0;
    const bool y_positive = median(y.col(c)) >= 0.0;
    if (x_positive != y_positive) {
      out.signs(c) = -1.0;
      out.flipped.col(c) *= -1.0;
    }
  }
  return out;
}

namespace {

// Above this spread of C / reg the Gibbs kernel exp(-C / reg) loses
// entries to underflow.
constexpr double kKernelRange = 500.0;

double log_sum_exp(const Eigen::Ref<const VecX>& v) {
  const double peak = v.maxCoeff();
  if (!std::isfinite(peak)) return peak;
  return peak + std::log((v.array() - peak).exp().sum());
}

TransportPlan sinkhorn_kernel(const MatX& cost, double reg, double tol, int max_iter) {
  const Index n = cost.rows();
  const Index m = cost.cols();
  const double a = 1.0 / static_cast<double>(n);
  const double b = 1.0 / static_cast<double>(m);
  const MatX kernel = (-(cost.array() - cost.minCoeff()) / reg).exp().matrix();
  VecX u = VecX::Constant(n, a);
  VecX v = VecX::Ones(m);
  double error = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iter; ++it) {
    const VecX ktu = kernel.transpose() * u;
    error = (v.cwiseProduct(ktu).array() - b).abs().maxCoeff();
    if (it > 0 && error < tol) break;
    v = (b / ktu.array()).matrix();
    u = (a / (kernel * v).array()).matrix();
  }
  if (!(error < tol)) {
    throw ConvergenceError("sinkhorn: marginal error " + std::to_string(error) + " after " +
                               std::to_string(max_iter) + " iterations; increase reg",
                           error);
  }
  return {u.asDiagonal() * kernel * v.asDiagonal(), it, error};
}

// Potentials f, g are in cost units: plan_ij = exp((f_i + g_j - C_ij) / reg).
// They are updated in place so a caller can warm-start a smaller reg.
TransportPlan sinkhorn_log(const MatX& cost, double reg, double tol, int max_iter, VecX& f, VecX& g) {
  const Index n = cost.rows();
  const Index m = cost.cols();
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  const double b = 1.0 / static_cast<double>(m);
  const MatX scaled = -cost / reg;
  VecX column_lse(m);
  double error = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iter; ++it) {
    const VecX fs = f / reg;
    for (Index j = 0; j < m; ++j) column_lse(j) = log_sum_exp(scaled.col(j) + fs);
    error = ((g / reg + column_lse).array().exp() - b).abs().maxCoeff();
    if (it > 0 && error < tol) break;
    g = reg * (log_b - column_lse.array());
    const MatX shifted = scaled.rowwise() + (g / reg).transpose();
    for (Index i = 0; i < n; ++i) f(i) = reg * (log_a - log_sum_exp(shifted.row(i).transpose()));
  }
  if (!(error < tol)) {
    throw ConvergenceError("sinkhorn: marginal error " + std::to_string(error) + " after " +
                               std::to_string(max_iter) + " iterations; increase reg",
                           error);
  }
  MatX plan = (((scaled.colwise() + f / reg).rowwise() + (g / reg).transpose())).array().exp().matrix();
  return {std::move(plan), it, error};
}

double median_entry(const MatX& m) {
  const VecX flat = Eigen::Map<const VecX>(m.data(), m.size());
  return median(flat);
}

}  // namespace

TransportPlan sinkhorn_plan(const MatX& cost, double reg, double tol, int max_iter) {
  if (cost.size() == 0) throw InvalidArgument("sinkhorn: empty cost matrix");
  if (!cost.allFinite()) throw InvalidArgument("sinkhorn: cost matrix must be finite");
  if (!(reg > 0.0)) throw InvalidArgument("sinkhorn: reg must be positive");
  if (max_iter < 1) throw InvalidArgument("sinkhorn: max_iter must be positive");
  if ((cost.maxCoeff() - cost.minCoeff()) / reg <= kKernelRange) {
    return sinkhorn_kernel(cost, reg, tol, max_iter);
  }
  VecX f = VecX::Zero(cost.rows());
  VecX g = VecX::Zero(cost.cols());
  return sinkhorn_log(cost, reg, tol, max_iter, f, g);
}

TransportPlan exact_transport(const MatX& cost) {
  const Index n = cost.rows();
  const Index m = cost.cols();
  if (n == 0 || m == 0) throw InvalidArgument("exact_transport: empty cost matrix");
  if (!cost.allFinite()) throw InvalidArgument("exact_transport: cost matrix must be finite");

  // Integer masses: every row supplies m/g units, every column takes n/g.
  const auto g = std::gcd(n, m);
  Eigen::Matrix<long long, Eigen::Dynamic, 1> supply =
      Eigen::Matrix<long long, Eigen::Dynamic, 1>::Constant(n, m / g);
  Eigen::Matrix<long long, Eigen::Dynamic, 1> demand =
      Eigen::Matrix<long long, Eigen::Dynamic, 1>::Constant(m, n / g);
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> flow =
      Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, m);

  // Successive shortest paths from all rows with supply left. Node k < n is
  // row k, node n + j is column j. Reduced costs stay nonnegative under the
  // potentials, so each search is a dense Dijkstra.
  const Index nodes = n + m;
  const double inf = std::numeric_limits<double>::infinity();
  VecX potential = VecX::Zero(nodes);
  VecX dist(nodes);
  std::vector<Index> parent(static_cast<std::size_t>(nodes));
  std::vector<char> done(static_cast<std::size_t>(nodes));
  int augmentations = 0;
  long long remaining = supply.sum();
  while (remaining > 0) {
    dist.setConstant(inf);
    std::fill(done.begin(), done.end(), 0);
    for (Index i = 0; i < n; ++i) {
      if (supply(i) > 0) {
        dist(i) = 0.0;
        parent[static_cast<std::size_t>(i)] = -1;
      }
    }
    Index target = -1;
    for (;;) {
      Index u = -1;
      for (Index v = 0; v < nodes; ++v) {
        if (!done[static_cast<std::size_t>(v)] && dist(v) < inf && (u < 0 || dist(v) < dist(u))) u = v;
      }
      if (u < 0) break;
      done[static_cast<std::size_t>(u)] = 1;
      if (u >= n && demand(u - n) > 0) {
        target = u;
        break;
      }
      if (u < n) {
        for (Index j = 0; j < m; ++j) {
          const Index v = n + j;
          if (done[static_cast<std::size_t>(v)]) continue;
          const double reduced = cost(u, j) + potential(u) - potential(v);
          if (dist(u) + reduced < dist(v)) {
            dist(v) = dist(u) + std::max(reduced, 0.0);
            parent[static_cast<std::size_t>(v)] = u;
          }
        }
      } else {
        const Index j = u - n;
        for (Index i = 0; i < n; ++i) {
          if (flow(i, j) == 0 || done[static_cast<std::size_t>(i)]) continue;
          const double reduced = -cost(i, j) + potential(u) - potential(i);
          if (dist(u) + reduced < dist(i)) {
            dist(i) = dist(u) + std::max(reduced, 0.0);
            parent[static_cast<std::size_t>(i)] = u;
          }
        }
      }
    }
    if (target < 0) throw Error("exact_transport: no augmenting path (internal error)");

    long long amount = demand(target - n);
    Index v = target;
    while (parent[static_cast<std::size_t>(v)] >= 0) {
      const Index u = parent[static_cast<std::size_t>(v)];
      if (u >= n) amount = std::min(amount, flow(v, u - n));  // backward arc
      v = u;
    }
    amount = std::min(amount, supply(v));
    supply(v) -= amount;
    demand(target - n) -= amount;
    remaining -= amount;
    v = target;
    while (parent[static_cast<std::size_t>(v)] >= 0) {
      const Index u = parent[static_cast<std::size_t>(v)];
      if (u < n) {
        flow(u, v - n) += amount;
      } else {
        flow(v, u - n) -= amount;
      }
      v = u;
    }
    const double cap = dist(target);
    for (Index k = 0; k < nodes; ++k) potential(k) += std::min(dist(k), cap);
    ++augmentations;
  }

  TransportPlan out;
  const double total = static_cast<double>(n) * static_cast<double>(m / g);
  out.plan = flow.cast<double>() / total;
  out.iterations = augmentations;
  const double row_error = (out.plan.rowwise().sum().array() - 1.0 / static_cast<double>(n)).abs().maxCoeff();
  const double col_error = (out.plan.colwise().sum().array() - 1.0 / static_cast<double>(m)).abs().maxCoeff();
  out.marginal_error = std::max(row_error, col_error);
  return out;
}

MatX transport_cost(const LatentPositions& x, const LatentPositions& y, const MatX& rotation) {
  const MatX rotated = apply_rotation(y, rotation);
  const VecX x_norms = x.rowwise().squaredNorm();
  const VecX y_norms = rotated.rowwise().squaredNorm();
  MatX cost = -2.0 * x * rotated.transpose();
  cost.colwise() += x_norms;
  cost.rowwise() += y_norms.transpose();
  return cost.cwiseMax(0.0);
}

LatentPositions apply_rotation(const LatentPositions& y, const MatX& rotation) {
  return y * rotation.transpose();
}

AlignmentResult otp_align_from(const LatentPositions& x, const LatentPositions& y, const MatX& start, double reg,
                               const OtpOptions& options) {
  AlignmentResult out;
  out.rotation = start;
  out.reg = reg;
  for (int t = 0; t < options.max_outer_iter; ++t) {
    MatX cost = transport_cost(x, y, out.rotation);
    auto plan = sinkhorn_plan(cost, reg, options.sinkhorn_tol, options.sinkhorn_max_iter);
    const MatX next = polar_factor(x.transpose() * plan.plan * y);
    cost = transport_cost(x, y, next);
    const double objective = plan.plan.cwiseProduct(cost).sum();
    // The entropic plan can trade a little transport cost for entropy once
    // W has settled; treat a rise in <plan, C_W> as convergence.
    if (t > 0 && objective > out.objective) break;
    out.objective = objective;
    out.objective_history.push_back(objective);
    const double step = (next - out.rotation).norm();
    out.rotation = next;
    out.plan = std::move(plan.plan);
    out.iterations = t + 1;
    if (step < options.tol) break;
  }
  return out;
}

AlignmentResult otp_align(const LatentPositions& x, const LatentPositions& y, const OtpOptions& options) {
  const Index d = x.cols();
  if (y.cols() != d) {
    throw InvalidArgument("otp_align: dimension mismatch (" + std::to_string(d) + " vs " +
                          std::to_string(y.cols()) + ")");
  }
  if (x.rows() < d || y.rows() < d) throw InvalidArgument("otp_align: need at least d rows in each embedding");
  if (d > 20) throw InvalidArgument("otp_align: 2^d initializations are impractical for d > 20");

  const MatX identity = MatX::Identity(d, d);
  double reg = options.reg.value_or(0.0);
  if (!options.reg) {
    reg = options.reg_scale * median_entry(transport_cost(x, y, identity));
    if (!(reg > 0.0)) reg = options.reg_scale;
  }

  AlignmentResult best;
  bool have_best = false;
  const int starts = 1 << d;
  for (int id = 0; id < starts; ++id) {
    MatX start = identity;
    for (Index k = 0; k < d; ++k) {
      if (id & (1 << k)) start(k, k) = -1.0;
    }
    AlignmentResult candidate;
    try {
      candidate = otp_align_from(x, y, start, reg, options);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(std::string(e.what()) + " (initialization " + std::to_string(id) + ")", e.residual());
    }
    candidate.initialization = id;
    if (!have_best || candidate.objective < best.objective - 1e-12) {
      best = std::move(candidate);
      have_best = true;
    }
  }
  best.entropic_objective = best.objective;
  for (int t = 0; t < options.exact_refinement_iter; ++t) {
    const auto plan = exact_transport(transport_cost(x, y, best.rotation));
    const MatX next = polar_factor(x.transpose() * plan.plan * y);
    const double objective = plan.plan.cwiseProduct(transport_cost(x, y, next)).sum();
    if (objective > best.objective) break;  // rounding only; both steps are exact minimizers
    best.objective = objective;
    best.objective_history.push_back(objective);
    const double step = (next - best.rotation).norm();
    best.rotation = next;
    best.plan = plan.plan;
    ++best.refinement_iterations;
    if (step < options.tol) break;
  }
  return best;
}

}  // namespace latent
