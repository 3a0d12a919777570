#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "fedgraph/errors.hpp"
#include "fedgraph/graph.hpp"
#include "fedgraph/graph_io.hpp"
#include "test_support.hpp"

using namespace fedgraph;
using namespace fgtest;

namespace {

double brute_homophily(const Graph& g) {
  std::size_t same = 0;
  const auto edges = g.edge_list();
  for (const auto& e : edges) same += g.labels()[e.u] == g.labels()[e.v];
  return static_cast<double>(same) / static_cast<double>(edges.size());
}

Graph permuted(const Graph& g, const std::vector<NodeId>& perm) {
  std::vector<Edge> edges;
  for (const auto& e : g.edge_list()) edges.push_back({perm[e.u], perm[e.v]});
  std::vector<std::int32_t> labels(g.labels().size());
  Matrix x(g.num_nodes(), g.feature_dim());
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    labels[perm[u]] = g.labels()[u];
    x.row(perm[u]) = g.features().row(u);
  }
  return build_graph(edges, std::move(x), std::move(labels), true, g.num_classes());
}

}  // namespace

TEST(BuildGraph, EmptyGraphHasZeroOffsets) {
  const auto g = graph_of(3, {});
  EXPECT_EQ(g.num_edges(), 0u);
  EXPECT_EQ(g.row_offsets(), (std::vector<std::int64_t>{0, 0, 0, 0}));
}

TEST(BuildGraph, UndirectedEdgeIsSymmetrized) {
  const auto g = graph_of(2, {{0, 1}});
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 0));
  EXPECT_EQ(g.num_entries(), 2u);
  EXPECT_EQ(g.num_edges(), 1u);
}

TEST(BuildGraph, DuplicatesCollapse) {
  const auto g = graph_of(2, {{0, 1}, {0, 1}, {1, 0}});
  EXPECT_EQ(g.num_entries(), 2u);
}

TEST(BuildGraph, SelfLoopsStripped) {
  const auto g = graph_of(2, {{0, 0}, {0, 1}, {1, 1}});
  EXPECT_EQ(g.num_entries(), 2u);
  EXPECT_FALSE(g.has_edge(0, 0));
}

TEST(BuildGraph, DirectedKeepsOrientation) {
  const auto g = graph_of(3, {{0, 1}, {2, 1}}, {}, 2, false);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_FALSE(g.has_edge(1, 0));
  EXPECT_EQ(g.num_edges(), 2u);
}

TEST(BuildGraph, OutOfRangeEndpointIsInputError) {
  EXPECT_THROW(graph_of(2, {{0, 2}}), InputError);
  EXPECT_THROW(graph_of(2, {{-1, 0}}), InputError);
}

TEST(BuildGraph, RaggedFeaturesIsInputError) {
  const std::vector<Edge> edges{{0, 1}};
  const std::vector<std::vector<double>> rows{{1.0, 2.0}, {3.0}};
  EXPECT_THROW(build_graph(edges, rows, {0, 1}, true), InputError);
}

TEST(BuildGraph, LabelCountMismatchIsInputError) {
  const std::vector<Edge> edges{{0, 1}};
  EXPECT_THROW(build_graph(edges, Matrix::Zero(2, 1), {0}, true), InputError);
}

TEST(BuildGraph, RandomGraphsValidate) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto n = std::uniform_int_distribution<int>(1, 40)(rng);
    std::vector<Edge> edges;
    std::uniform_int_distribution<NodeId> node(0, n - 1);
    for (int i = 0; i < 3 * n; ++i) edges.push_back({node(rng), node(rng)});
    const auto g = graph_of(n, edges, {}, 2, t % 2 == 0);
    EXPECT_NO_THROW(g.validate());
    for (NodeId u = 0; u < n; ++u) {
      const auto nb = g.neighbors(u);
      EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
      EXPECT_EQ(std::adjacent_find(nb.begin(), nb.end()), nb.end());
      EXPECT_EQ(std::find(nb.begin(), nb.end(), u), nb.end());
    }
    // Every input pair survives unless it was a self-loop.
    for (const auto& e : edges) {
      if (e.u != e.v) EXPECT_TRUE(g.has_edge(e.u, e.v));
    }
  }
}

TEST(EdgeHomophily, Examples) {
  EXPECT_DOUBLE_EQ(edge_homophily(triangle()), 1.0);
  EXPECT_DOUBLE_EQ(edge_homophily(graph_of(3, {{0, 1}, {1, 2}}, {0, 1, 0})), 0.0);
  EXPECT_DOUBLE_EQ(edge_homophily(four_cycle()), 0.5);
}

TEST(EdgeHomophily, ZeroEdgesIsError) { EXPECT_THROW(edge_homophily(graph_of(3, {})), InputError); }

TEST(EdgeHomophily, MatchesBruteForceAndIsPermutationInvariant) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 40; ++t) {
    const auto g = random_graph(rng, 30, 0.15, 3);
    if (g.num_edges() == 0) continue;
    EXPECT_NEAR(edge_homophily(g), brute_homophily(g), 1e-15);
    std::vector<NodeId> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_NEAR(edge_homophily(permuted(g, perm)), edge_homophily(g), 1e-15);
  }
}

TEST(NeighborLabelDistribution, Examples) {
  const auto t = neighbor_label_distribution(triangle());
  ASSERT_EQ(t.rows(), 1);
  EXPECT_DOUBLE_EQ(t(0, 0), 1.0);

  const auto star = neighbor_label_distribution(graph_of(4, {{0, 1}, {0, 2}, {0, 3}}, {0, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(star(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(star(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(star(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(star(1, 1), 0.0);

  const auto c = neighbor_label_distribution(four_cycle());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(c(i, j), 0.5);
}

TEST(NeighborLabelDistribution, ZeroRowForIsolatedClass) {
  const auto d = neighbor_label_distribution(graph_of(3, {{0, 1}}, {0, 0, 1}));
  EXPECT_DOUBLE_EQ(d(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(d(1, 1), 0.0);
}

TEST(NeighborLabelDistribution, RowsSumToOneAndMatchCounts) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 40; ++t) {
    const auto g = random_graph(rng, 25, 0.2, 4);
    const auto d = neighbor_label_distribution(g);
    Matrix counts = Matrix::Zero(4, 4);
    for (NodeId u = 0; u < g.num_nodes(); ++u)
      for (NodeId v : g.neighbors(u)) counts(g.labels()[u], g.labels()[v]) += 1.0;
    for (int i = 0; i < 4; ++i) {
      const double s = counts.row(i).sum();
      if (s == 0.0) {
        EXPECT_EQ(d.row(i).sum(), 0.0);
        continue;
      }
      EXPECT_NEAR(d.row(i).sum(), 1.0, 1e-9);
      for (int j = 0; j < 4; ++j) EXPECT_NEAR(d(i, j), counts(i, j) / s, 1e-15);
    }
  }
}

TEST(FlipEdgeNoise, ZeroProbabilityIsIdentity) {
  std::mt19937_64 rng(4);
  const auto g = random_graph(rng, 30, 0.2, 3);
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_TRUE(flip_edge_noise(g, 0.0, s) == g);
}

TEST(FlipEdgeNoise, FullProbabilityOnTriangle) {
  const auto r = flip_edge_noise_detailed(graph_of(5, {{0, 1}, {1, 2}, {0, 2}}), 1.0, 9);
  EXPECT_EQ(r.kept, 0u);
  EXPECT_EQ(r.removed, 3u);
  EXPECT_EQ(r.inserted, 3u);
  EXPECT_FALSE(r.graph.has_edge(0, 1));
  EXPECT_FALSE(r.graph.has_edge(1, 2));
  EXPECT_FALSE(r.graph.has_edge(0, 2));
  EXPECT_EQ(r.graph.num_edges(), 3u);
}

TEST(FlipEdgeNoise, SurvivorsConcentrate) {
  // 10,000 random edges on 2,000 nodes; survivors ~ Binomial(10000, 0.9).
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<NodeId> node(0, 1999);
  std::set<std::pair<NodeId, NodeId>> seen;
  std::vector<Edge> edges;
  while (edges.size() < 10000) {
    NodeId u = node(rng), v = node(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (seen.insert({u, v}).second) edges.push_back({u, v});
  }
  const auto g = graph_of(2000, edges);
  ASSERT_EQ(g.num_edges(), 10000u);
  const auto r = flip_edge_noise_detailed(g, 0.1, 17);
  std::size_t survivors = 0;
  for (const auto& e : edges) survivors += r.graph.has_edge(e.u, e.v);
  EXPECT_EQ(survivors, r.kept);
  EXPECT_LE(std::abs(static_cast<double>(survivors) - 9000.0), 90.0);
  EXPECT_EQ(r.graph.num_edges(), 10000u);
  EXPECT_NO_THROW(r.graph.validate());
}

TEST(FlipEdgeNoise, DeterministicGivenSeed) {
  std::mt19937_64 rng(6);
  const auto g = random_graph(rng, 40, 0.2, 3);
  EXPECT_TRUE(flip_edge_noise(g, 0.3, 8) == flip_edge_noise(g, 0.3, 8));
}

TEST(InducedSubgraph, Examples) {
  const auto all = induced_subgraph(triangle(), std::vector<NodeId>{0, 1, 2});
  EXPECT_TRUE(all.graph == triangle());
  EXPECT_EQ(all.original_ids, (std::vector<NodeId>{0, 1, 2}));

  const auto pair = induced_subgraph(triangle(), std::vector<NodeId>{0, 1});
  EXPECT_EQ(pair.graph.num_nodes(), 2);
  EXPECT_EQ(pair.graph.num_edges(), 1u);

  const auto apart = induced_subgraph(four_cycle(), std::vector<NodeId>{0, 2});
  EXPECT_EQ(apart.graph.num_nodes(), 2);
  EXPECT_EQ(apart.graph.num_edges(), 0u);
}

TEST(InducedSubgraph, EmptySetIsError) {
  EXPECT_THROW(induced_subgraph(triangle(), std::vector<NodeId>{}), InputError);
}

TEST(InducedSubgraph, SlicesFeaturesAndLabels) {
  const auto g = four_cycle({0, 1, 1, 0});
  const auto s = induced_subgraph(g, std::vector<NodeId>{3, 1});
  ASSERT_EQ(s.original_ids, (std::vector<NodeId>{1, 3}));
  for (NodeId i = 0; i < 2; ++i) {
    EXPECT_EQ(s.graph.labels()[i], g.labels()[s.original_ids[i]]);
    EXPECT_EQ(s.graph.features().row(i), g.features().row(s.original_ids[i]));
  }
}

TEST(InducedSubgraph, ComponentUnionPreservesHomophily) {
  // Two disjoint random blocks; taking one block keeps only its edges.
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_graph(rng, 15, 0.3, 2);
    std::vector<Edge> edges = a.edge_list();
    for (const auto& e : a.edge_list()) edges.push_back({e.u + 15, e.v + 15});
    std::vector<std::int32_t> labels = a.labels();
    labels.insert(labels.end(), a.labels().begin(), a.labels().end());
    const auto g = graph_of(30, edges, labels);
    if (a.num_edges() == 0) continue;
    std::vector<NodeId> half(15);
    std::iota(half.begin(), half.end(), 0);
    EXPECT_DOUBLE_EQ(edge_homophily(induced_subgraph(g, half).graph), edge_homophily(g));
  }
}

TEST(FiveGroupSplit, DisjointAndSized) {
  for (std::int32_t n : {5, 12, 101, 1000}) {
    const auto s = five_group_split(n, 3);
    std::size_t total = 0;
    for (std::int32_t i = 0; i < n; ++i) {
      const int c = s.train[i] + s.val[i] + s.test[i];
      EXPECT_EQ(c, 1);
      total += c;
    }
    EXPECT_EQ(total, static_cast<std::size_t>(n));
    EXPECT_NEAR(static_cast<double>(NodeSplit::count(s.test)), n / 5.0, 1.0);
    EXPECT_NEAR(static_cast<double>(NodeSplit::count(s.val)), n / 5.0, 1.0);
  }
}

TEST(GraphIo, PathFromEdgeFile) {
  const auto dir = temp_dir("io");
  std::ofstream(dir / "e.tsv") << "0 1\n1 2";
  std::ofstream(dir / "f.csv") << "1,2\n3,4\n5,6\n";
  std::ofstream(dir / "l.csv") << "0\n1\n0\n";
  const auto g = load_graph_files(dir / "e.tsv", dir / "f.csv", dir / "l.csv");
  EXPECT_EQ(g.num_nodes(), 3);
  EXPECT_EQ(g.labels(), (std::vector<std::int32_t>{0, 1, 0}));
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(2, 1));
  EXPECT_EQ(g.features()(2, 1), 6.0);
  std::filesystem::remove_all(dir);
}

TEST(GraphIo, CommentsAndTabsAccepted) {
  const auto dir = temp_dir("io");
  std::ofstream(dir / "e.tsv") << "# header\n0\t1\n\n# done\n";
  std::ofstream(dir / "f.csv") << "1\n2\n";
  std::ofstream(dir / "l.csv") << "0\n0\n";
  EXPECT_EQ(load_graph_files(dir / "e.tsv", dir / "f.csv", dir / "l.csv").num_edges(), 1u);
  std::filesystem::remove_all(dir);
}

TEST(GraphIo, RowCountMismatchIsError) {
  const auto dir = temp_dir("io");
  std::ofstream(dir / "e.tsv") << "0\t1\n";
  std::ofstream(dir / "f.csv") << "1\n2\n3\n";
  std::ofstream(dir / "l.csv") << "0\n0\n";
  EXPECT_THROW(load_graph_files(dir / "e.tsv", dir / "f.csv", dir / "l.csv"), InputError);
  std::filesystem::remove_all(dir);
}

TEST(GraphIo, MalformedLineNamesFileAndLine) {
  const auto dir = temp_dir("io");
  std::ofstream(dir / "e.tsv") << "0\t1\n1\tx\n";
  std::ofstream(dir / "f.csv") << "1\n2\n";
  std::ofstream(dir / "l.csv") << "0\n0\n";
  try {
    load_graph_files(dir / "e.tsv", dir / "f.csv", dir / "l.csv");
    FAIL() << "expected an InputError";
  } catch (const InputError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("e.tsv"), std::string::npos) << what;
    EXPECT_NE(what.find("2"), std::string::npos) << what;
  }
  std::filesystem::remove_all(dir);
}

TEST(GraphIo, BundleRoundTripIsIdentical) {
  std::mt19937_64 rng(8);
  const auto dir = temp_dir("bundle");
  for (int t = 0; t < 5; ++t) {
    const auto g = random_graph(rng, 20, 0.2, 3, 4);
    save_graph_bundle(g, dir / std::to_string(t));
    EXPECT_TRUE(load_graph_bundle(dir / std::to_string(t)) == g);
  }
  std::filesystem::remove_all(dir);
}

TEST(GraphIo, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> d(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = d(rng);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}
