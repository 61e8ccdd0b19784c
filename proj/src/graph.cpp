#include "latent/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

namespace latent {

namespace {

std::string join(const ValidationReport& report) {
  std::string out;
  for (const auto& item : report) {
    if (!out.empty()) out += ", ";
    out += item;
  }
  return out;
}

std::string location(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

bool parse_double(std::string_view token, double& value) {
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) token.remove_prefix(1);
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
  if (token.empty()) return false;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc() && ptr == end;
}

bool parse_long(const std::string& token, long long& value) {
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc() && ptr == end;
}

LoadedGraph load_dense(std::ifstream& in, const std::filesystem::path& path, const LoadOptions& options) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  if (options.header) {
    std::getline(in, line);
    ++line_no;
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      double value;
      if (!parse_double(rest.substr(0, comma), value)) {
        throw ParseError(location(path, line_no) + "expected a number in \"" +
                         std::string(rest.substr(0, comma)) + "\"");
      }
      if (value != 0.0 && value != 1.0) {
        throw ParseError(location(path, line_no) + "non-binary entry " + std::to_string(value));
      }
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Index>(rows.size());
  if (n == 0) throw ParseError(path.string() + ": no rows");
  MatX entries(n, n);
  for (Index i = 0; i < n; ++i) {
    if (static_cast<Index>(rows[i].size()) != n) {
      throw ParseError(path.string() + ": row " + std::to_string(i) + " has " +
                       std::to_string(rows[i].size()) + " columns, expected " + std::to_string(n));
    }
    for (Index j = 0; j < n; ++j) entries(i, j) = rows[i][j];
  }
  LoadedGraph out;
  for (Index i = 0; i < n; ++i) {
    if (entries(i, i) != 0.0) {
      entries(i, i) = 0.0;
      ++out.dropped_self_loops;
    }
  }
  out.graph = AdjacencyMatrix(std::move(entries), path.string());
  return out;
}

LoadedGraph load_edge_list(std::ifstream& in, const std::filesystem::path& path, const LoadOptions& options) {
  std::vector<std::pair<long long, long long>> edges;
  std::string line;
  std::size_t line_no = 0;
  if (options.header) {
    std::getline(in, line);
    ++line_no;
  }
  long long largest = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string a, b;
    if (!(fields >> a)) continue;
    if (!(fields >> b)) throw ParseError(location(path, line_no) + "expected two vertex indices");
    long long i, j;
    if (!parse_long(a, i) || !parse_long(b, j)) {
      throw ParseError(location(path, line_no) + "vertex indices must be integers");
    }
    i -= options.index_base;
    j -= options.index_base;
    if (i < 0 || j < 0) throw ParseError(location(path, line_no) + "vertex index below index base");
    largest = std::max({largest, i, j});
    edges.emplace_back(i, j);
  }
  const Index n = options.vertices.value_or(static_cast<Index>(largest + 1));
  if (n <= 0) throw ParseError(path.string() + ": no vertices");
  if (largest >= n) {
    throw ParseError(path.string() + ": vertex index " + std::to_string(largest + options.index_base) +
                     " out of range for " + std::to_string(n) + " vertices");
  }
  LoadedGraph out;
  MatX entries = MatX::Zero(n, n);
  for (const auto& [i, j] : edges) {
    if (i == j) {
      ++out.dropped_self_loops;
      continue;
    }
    entries(i, j) = 1.0;
    entries(j, i) = 1.0;
  }
  out.graph = AdjacencyMatrix(std::move(entries), path.string());
  return out;
}

}  // namespace

AdjacencyMatrix::AdjacencyMatrix(MatX entries, std::string source)
    : entries_(std::move(entries)), source_(std::move(source)) {
  if (const auto report = validate_graph(entries_); !report.empty()) {
    throw InvalidArgument("invalid adjacency matrix: " + join(report));
  }
}

Index AdjacencyMatrix::edge_count() const {
  return static_cast<Index>(entries_.sum() / 2.0);
}

double AdjacencyMatrix::density() const {
  const auto n = static_cast<double>(size());
  return n < 2 ? 0.0 : entries_.sum() / (n * (n - 1));
}

GraphFormat parse_graph_format(const std::string& name) {
  if (name == "edge-list" || name == "edgelist") return GraphFormat::edge_list;
  if (name == "dense-csv" || name == "csv") return GraphFormat::dense_csv;
  throw InvalidArgument("unknown graph format \"" + name + "\"");
}

LoadedGraph load_graph(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": file not found or unreadable");
  return options.format == GraphFormat::edge_list ? load_edge_list(in, path, options)
                                                  : load_dense(in, path, options);
}

AdjacencyMatrix sample_rdpg(const LatentPositions& x, const RngSeed& seed) {
  const Index n = x.rows();
  const MatX gram = x * x.transpose();
  auto engine = make_engine(seed);
  MatX entries = MatX::Zero(n, n);
  for (Index i = 1; i < n; ++i) {
    for (Index j = 0; j < i; ++j) {
      const double p = std::clamp(gram(i, j), 0.0, 1.0);
      if (uniform01(engine) < p) {
        entries(i, j) = 1.0;
        entries(j, i) = 1.0;
      }
    }
  }
  return AdjacencyMatrix(std::move(entries));
}

}  // namespace latent
