#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "latent/rng.hpp"
#include "latent/types.hpp"

namespace latent {

/// Problems found by validate_graph, one human-readable item each.
using ValidationReport = std::vector<std::string>;

/// Checks a raw matrix against the adjacency invariants: square, finite,
/// symmetric, hollow, binary. An empty report means the matrix is valid.
template <typename Derived>
ValidationReport validate_graph(const Eigen::MatrixBase<Derived>& a) {
  ValidationReport report;
  if (a.rows() != a.cols()) {
    report.emplace_back("not square");
    return report;
  }
  if (!a.allFinite()) report.emplace_back("not finite");
  bool symmetric = true, hollow = true, binary = true;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      const auto v = a(i, j);
      if (v != a(j, i)) symmetric = false;
      if (i == j && v != 0) hollow = false;
      if (v != 0 && v != 1) binary = false;
    }
  }
  if (!symmetric) report.emplace_back("not symmetric");
  if (!hollow) report.emplace_back("not hollow");
  if (!binary) report.emplace_back("not binary");
  return report;
}

/// Undirected, unweighted graph stored densely. Always satisfies the
/// invariants checked by validate_graph.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;

  /// Throws InvalidArgument listing every violated invariant.
  explicit AdjacencyMatrix(MatX entries, std::string source = {});

  Index size() const { return entries_.rows(); }
  const MatX& matrix() const { return entries_; }
  double operator()(Index i, Index j) const { return entries_(i, j); }
  Index edge_count() const;
  double density() const;
  const std::string& source() const { return source_; }

 private:
  MatX entries_;
  std::string source_;
};

enum class GraphFormat { edge_list, dense_csv };

struct LoadOptions {
  GraphFormat format = GraphFormat::dense_csv;
  int index_base = 0;
  bool header = false;
  /// Edge lists only: vertex count; inferred from the largest index if unset.
  std::optional<Index> vertices;
};

struct LoadedGraph {
  AdjacencyMatrix graph;
  Index dropped_self_loops = 0;
};

/// Reads an edge list (whitespace-separated pairs, optional ignored third
/// column, `#` comments) or a dense comma-separated matrix. Edge lists are
/// symmetrized; self-loops are dropped and counted in either format.
LoadedGraph load_graph(const std::filesystem::path& path, const LoadOptions& options = {});

GraphFormat parse_graph_format(const std::string& name);

/// Independent edges A_ij ~ Bernoulli(clamp(x_i . x_j, 0, 1)) for i > j,
/// mirrored to j > i; the diagonal stays zero.
AdjacencyMatrix sample_rdpg(const LatentPositions& x, const RngSeed& seed);

}  // namespace latent
