#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"
#include "latent/graph.hpp"

using namespace latent;

namespace {

bool contains(const ValidationReport& report, const std::string& item) {
  return std::find(report.begin(), report.end(), item) != report.end();
}

}  // namespace

TEST_CASE("validate_graph reports each violated invariant") {
  CHECK(validate_graph(MatX::Zero(3, 3)).empty());

  MatX loop = MatX::Zero(3, 3);
  loop(0, 0) = 1;
  CHECK(contains(validate_graph(loop), "not hollow"));

  MatX directed = MatX::Zero(3, 3);
  directed(0, 1) = 1;
  CHECK(contains(validate_graph(directed), "not symmetric"));

  MatX weighted = MatX::Zero(3, 3);
  weighted(0, 1) = weighted(1, 0) = 0.5;
  const auto report = validate_graph(weighted);
  CHECK(report.size() == 1);
  CHECK(contains(report, "not binary"));

  CHECK(contains(validate_graph(MatX::Zero(2, 3)), "not square"));
}

TEST_CASE("AdjacencyMatrix rejects invalid entries") {
  MatX loop = MatX::Zero(2, 2);
  loop(1, 1) = 1;
  CHECK_THROWS_AS(AdjacencyMatrix{loop}, InvalidArgument);

  MatX path = MatX::Zero(3, 3);
  path(0, 1) = path(1, 0) = path(1, 2) = path(2, 1) = 1;
  const AdjacencyMatrix a(path, "path");
  CHECK(a.size() == 3);
  CHECK(a.edge_count() == 2);
  CHECK(a.density() == doctest::Approx(2.0 / 3.0));
  CHECK(a.source() == "path");
}

TEST_CASE("edge list input is symmetrized with the vertex count inferred") {
  const auto path = testing::scratch_file("path.txt", "0 1\n1 2\n");
  LoadOptions options;
  options.format = GraphFormat::edge_list;
  const auto loaded = load_graph(path, options);
  const auto& a = loaded.graph;
  REQUIRE(a.size() == 3);
  CHECK(a(0, 1) == 1);
  CHECK(a(1, 0) == 1);
  CHECK(a(1, 2) == 1);
  CHECK(a(2, 1) == 1);
  CHECK(a.edge_count() == 2);
  CHECK(loaded.dropped_self_loops == 0);
}

TEST_CASE("edge list options: index base, comments, third column, self-loops") {
  const auto path = testing::scratch_file("one_based.txt", "# a comment\n1 2 0.7\n2 2\n3 1  # trailing\n");
  LoadOptions options;
  options.format = GraphFormat::edge_list;
  options.index_base = 1;
  const auto loaded = load_graph(path, options);
  CHECK(loaded.graph.size() == 3);
  CHECK(loaded.graph.edge_count() == 2);
  CHECK(loaded.dropped_self_loops == 1);
  CHECK(validate_graph(loaded.graph.matrix()).empty());
}

TEST_CASE("edge list errors") {
  LoadOptions options;
  options.format = GraphFormat::edge_list;
  CHECK_THROWS_AS(load_graph(testing::scratch_file("bad.txt", "0 x\n"), options), ParseError);
  CHECK_THROWS_AS(load_graph(testing::scratch_file("single.txt", "0\n"), options), ParseError);

  options.vertices = 2;
  CHECK_THROWS_AS(load_graph(testing::scratch_file("range.txt", "0 5\n"), options), ParseError);

  options.vertices.reset();
  options.index_base = 1;
  CHECK_THROWS_AS(load_graph(testing::scratch_file("base.txt", "0 1\n"), options), ParseError);
}

TEST_CASE("dense csv input") {
  const auto ok = testing::scratch_file("dense.csv", "0,1,0\n1,0,1\n0,1,0\n");
  const auto a = load_graph(ok).graph;
  CHECK(a.size() == 3);
  CHECK(a.edge_count() == 2);

  const auto with_header = testing::scratch_file("header.csv", "a,b\n0,1\n1,0\n");
  LoadOptions options;
  options.header = true;
  CHECK(load_graph(with_header, options).graph.edge_count() == 1);
  CHECK_THROWS_AS(load_graph(with_header), ParseError);

  const auto loops = testing::scratch_file("loops.csv", "1,1\n1,0\n");
  const auto loaded = load_graph(loops);
  CHECK(loaded.dropped_self_loops == 1);
  CHECK(loaded.graph(0, 0) == 0);

  CHECK_THROWS_AS(load_graph(testing::scratch_file("weighted.csv", "0,2\n2,0\n")), ParseError);
  CHECK_THROWS_AS(load_graph(testing::scratch_file("ragged.csv", "0,1\n1\n")), ParseError);
  CHECK_THROWS_AS(load_graph(testing::scratch_file("asym.csv", "0,1\n0,0\n")), InvalidArgument);
}

TEST_CASE("missing file") {
  try {
    load_graph("/nonexistent/graph.csv");
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("file not found") != std::string::npos);
  }
}

TEST_CASE("format names") {
  CHECK(parse_graph_format("edge-list") == GraphFormat::edge_list);
  CHECK(parse_graph_format("dense-csv") == GraphFormat::dense_csv);
  CHECK_THROWS_AS(parse_graph_format("graphml"), InvalidArgument);
}

TEST_CASE("connectome files load with the documented sizes") {
  const auto left = load_graph(LATENT_DATA_DIR "/left_mushroom_body.csv");
  const auto right = load_graph(LATENT_DATA_DIR "/right_mushroom_body.csv");
  CHECK(left.graph.size() == 163);
  // 158 in the original release; this copy of the data has 163 (see data/README.md).
  CHECK(right.graph.size() == 163);
  CHECK(left.graph.edge_count() == 1193);
  CHECK(right.graph.edge_count() == 1260);
}

TEST_CASE("sample_rdpg clipping extremes") {
  const LatentPositions big = LatentPositions::Constant(6, 2, 1.0);
  const auto complete = sample_rdpg(big, {1, 0});
  CHECK(complete.edge_count() == 15);

  const auto empty = sample_rdpg(LatentPositions::Zero(6, 2), {1, 0});
  CHECK(empty.edge_count() == 0);

  LatentPositions negative(2, 1);
  negative << 1.0, -1.0;
  CHECK(sample_rdpg(negative, {2, 0}).edge_count() == 0);
}

TEST_CASE("sample_rdpg edge density for uniform latent positions") {
  // E[x_i x_j] = E[x]^2 = 0.45^2 for independent x ~ Unif(0.2, 0.7).
  double total = 0;
  const int reps = 10;
  for (int r = 0; r < reps; ++r) {
    auto engine = make_engine({77, static_cast<std::uint64_t>(r)});
    LatentPositions x(1000, 1);
    for (Index i = 0; i < 1000; ++i) x(i, 0) = 0.2 + 0.5 * uniform01(engine);
    total += sample_rdpg(x, {78, static_cast<std::uint64_t>(r)}).density();
  }
  CHECK(std::abs(total / reps - 0.2025) < 0.01);
}

TEST_CASE("sample_rdpg is reproducible per seed") {
  auto engine = make_engine({5, 5});
  LatentPositions x(40, 2);
  for (Index i = 0; i < x.size(); ++i) x(i) = 0.1 + 0.5 * uniform01(engine);
  const auto a = sample_rdpg(x, {9, 1});
  const auto b = sample_rdpg(x, {9, 1});
  const auto c = sample_rdpg(x, {9, 2});
  CHECK(a.matrix() == b.matrix());
  CHECK(a.matrix() != c.matrix());
}
