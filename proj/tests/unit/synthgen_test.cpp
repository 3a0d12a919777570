#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "fedgraph/errors.hpp"
#include "fedgraph/synthgen.hpp"

using namespace fedgraph;

namespace {

GeneratorConfig config(std::int32_t n, std::int32_t c, double h, std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.num_nodes = n;
  cfg.num_classes = c;
  cfg.target_homophily = h;
  cfg.seed = seed;
  return cfg;
}

std::vector<std::int32_t> class_counts(const Graph& g) {
  std::vector<std::int32_t> counts(static_cast<std::size_t>(g.num_classes()), 0);
  for (auto l : g.labels()) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

}  // namespace

TEST(GenerateGraph, PureMixingIsExact) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto one = config(400, 2, 1.0, s);
    EXPECT_EQ(edge_homophily(generate_graph(one)), 1.0);
    auto zero = config(400, 2, 0.0, s);
    EXPECT_EQ(edge_homophily(generate_graph(zero)), 0.0);
  }
}

TEST(GenerateGraph, HomophilyConcentrates) {
  double total = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const double h = edge_homophily(generate_graph(config(3000, 5, 0.2, s)));
    EXPECT_GE(h, 0.15);
    EXPECT_LE(h, 0.25);
    total += h;
  }
  EXPECT_NEAR(total / 20.0, 0.2, 0.01);
}

TEST(GenerateGraph, BalancedClassesAndDegree) {
  for (std::int32_t n : {1000, 1003}) {
    const auto g = generate_graph(config(n, 5, 0.3, 4));
    for (auto c : class_counts(g)) EXPECT_LE(std::abs(c - n / 5), 1);
    const double mean_degree = 2.0 * static_cast<double>(g.num_edges()) / n;
    EXPECT_NEAR(mean_degree, 10.0, 1.0);
    EXPECT_NO_THROW(g.validate());
    EXPECT_TRUE(g.undirected());
  }
}

TEST(GenerateGraph, EqualExpectedDegreeAcrossClasses) {
  // Pooled endpoint counts per class over 20 seeds against a uniform share;
  // chi-square critical value for 4 degrees of freedom at alpha 0.01.
  constexpr double kCritical = 13.277;
  std::vector<double> endpoints(5, 0.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto g = generate_graph(config(1000, 5, 0.2, 100 + s));
    for (NodeId u = 0; u < g.num_nodes(); ++u) endpoints[g.labels()[u]] += static_cast<double>(g.degree(u));
  }
  double total = 0.0;
  for (double e : endpoints) total += e;
  double chi2 = 0.0;
  for (double e : endpoints) chi2 += (e - total / 5) * (e - total / 5) / (total / 5);
  EXPECT_LT(chi2, kCritical);
}

TEST(GenerateGraph, DeterministicGivenSeed) {
  EXPECT_TRUE(generate_graph(config(300, 3, 0.4, 9)) == generate_graph(config(300, 3, 0.4, 9)));
  EXPECT_FALSE(generate_graph(config(300, 3, 0.4, 9)) == generate_graph(config(300, 3, 0.4, 10)));
}

TEST(GenerateGraph, InfeasibleDegreeIsError) {
  auto cfg = config(10, 2, 0.5, 0);
  cfg.mean_degree = 10.0;
  EXPECT_THROW(generate_graph(cfg), InputError);
}

TEST(GenerateGraph, BadMixingIsError) {
  auto cfg = config(100, 2, 0.5, 0);
  cfg.class_mixing = Matrix{{0.5, 0.6}, {0.5, 0.5}};
  EXPECT_THROW(generate_graph(cfg), InputError);
  cfg.class_mixing = Matrix{{0.5, 0.5}};
  EXPECT_THROW(generate_graph(cfg), InputError);
}

TEST(GenerateGraph, CustomMixingIsRealized) {
  auto cfg = config(3000, 3, 0.0, 5);
  cfg.class_mixing = Matrix{{0.1, 0.6, 0.3}, {0.6, 0.2, 0.2}, {0.3, 0.2, 0.5}};
  const auto d = neighbor_label_distribution(generate_graph(cfg));
  // Undirected storage mixes both directions; the mixing above is symmetric
  // with equal class sizes, so the realized distribution matches it.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(d(i, j), cfg.class_mixing(i, j), 0.03);
}

TEST(GenerateGraph, FeatureSeparationOrdersNearestMeanAccuracy) {
  double last = 0.0;
  for (double sep : {0.5, 1.0, 2.0}) {
    auto cfg = config(3000, 5, 0.2, 6);
    cfg.feature_separation = sep;
    const auto g = generate_graph(cfg);
    const Matrix means = class_means(5, cfg.feature_dim, sep);
    std::int32_t correct = 0;
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      Eigen::Index best = 0;
      (means.rowwise() - g.features().row(u)).rowwise().squaredNorm().minCoeff(&best);
      correct += best == g.labels()[u];
    }
    const double acc = static_cast<double>(correct) / g.num_nodes();
    EXPECT_GT(acc, last) << "separation " << sep;
    last = acc;
  }
}

TEST(ClassMeans, PairwiseDistanceEqualsSeparation) {
  const Matrix m = class_means(4, 8, 1.5);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) EXPECT_NEAR((m.row(i) - m.row(j)).norm(), 1.5, 1e-12);
}

TEST(ConflictingClients, ZeroStrengthMatchesIndependentGraphs) {
  const auto cfg = config(500, 4, 0.3, 7);
  const auto mixes = conflicting_mixing_matrices(cfg, 3, 0.0);
  const auto graphs = generate_conflicting_clients(cfg, 3, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(mixes[i], default_mixing(4, 0.3));
    auto own = cfg;
    own.seed = mix_seed(cfg.seed, i);
    own.class_mixing = mixes[i];
    EXPECT_TRUE(graphs[i] == generate_graph(own));
  }
}

TEST(ConflictingClients, ZeroStrengthAgreesWithinSamplingNoise) {
  const auto graphs = generate_conflicting_clients(config(3000, 5, 0.2, 8), 3, 0.0);
  const auto d0 = neighbor_label_distribution(graphs[0]);
  for (std::size_t i = 1; i < graphs.size(); ++i) EXPECT_LT((neighbor_label_distribution(graphs[i]) - d0).norm(), 0.1);
}

TEST(ConflictingClients, FullStrengthRotation) {
  auto cfg = config(3000, 3, 0.0, 9);
  const auto mixes = conflicting_mixing_matrices(cfg, 2, 1.0);
  EXPECT_DOUBLE_EQ(mixes[0](0, 1), 1.0);
  EXPECT_DOUBLE_EQ(mixes[1](0, 2), 1.0);
  // Realized class-0 neighbours: the drawn 0->1 edges plus the 2->0 edges
  // drawn from class 2, since every edge is stored in both directions.
  const auto graphs = generate_conflicting_clients(cfg, 2, 1.0);
  const auto d0 = neighbor_label_distribution(graphs[0]);
  EXPECT_EQ(d0(0, 0), 0.0);
  EXPECT_NEAR(d0(0, 1), 0.5, 0.03);
}

TEST(ConflictingClients, RealizedDistributionsDivergeForFiveClasses) {
  const auto graphs = generate_conflicting_clients(config(1000, 5, 0.2, 11), 2, 1.0);
  const auto d0 = neighbor_label_distribution(graphs[0]);
  const auto d1 = neighbor_label_distribution(graphs[1]);
  EXPECT_GT((d0 - d1).norm(), 1.0);
  for (int c = 0; c < 5; ++c) {
    EXPECT_NEAR(d0(c, (c + 1) % 5), 0.4, 0.05);
    EXPECT_NEAR(d1(c, (c + 2) % 5), 0.4, 0.05);
  }
}

TEST(ConflictingClients, MixingRowsStochasticAndDiagonalKept) {
  for (double s : {0.0, 0.3, 0.7, 1.0}) {
    const auto cfg = config(100, 5, 0.2, 0);
    for (const auto& m : conflicting_mixing_matrices(cfg, 4, s)) {
      for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(m.row(i).sum(), 1.0, 1e-12);
        EXPECT_DOUBLE_EQ(m(i, i), 0.2);
        EXPECT_GE(m.row(i).minCoeff(), 0.0);
      }
    }
  }
}

TEST(ConflictingClients, IdenticalClassCounts) {
  for (double s : {0.0, 0.5, 1.0}) {
    const auto graphs = generate_conflicting_clients(config(1001, 5, 0.2, 10), 2, s);
    EXPECT_EQ(class_counts(graphs[0]), class_counts(graphs[1]));
  }
}

TEST(ConflictingClients, NeedsTwoClientsAndClasses) {
  EXPECT_THROW(generate_conflicting_clients(config(100, 3, 0.2, 0), 1, 1.0), InputError);
  EXPECT_THROW(generate_conflicting_clients(config(100, 1, 0.2, 0), 2, 1.0), InputError);
}
