#pragma once

#include <cstdint>
#include <vector>

#include "fedgraph/graph.hpp"

namespace fedgraph {

struct GeneratorConfig {
  std::int32_t num_nodes = 1000;
  std::int32_t num_classes = 5;
  double target_homophily = 0.2;
  double mean_degree = 10.0;
  std::int32_t feature_dim = 16;
  /// Optional C x C row-stochastic matrix; empty means the homophily default.
  Matrix class_mixing;
  /// Distance between any two class means; noise has unit variance per dimension.
  double feature_separation = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// h on the diagonal and (1-h)/(C-1) elsewhere.
Matrix default_mixing(std::int32_t num_classes, double homophily);

/// Mean of class c: (separation / sqrt 2) * e_c, so every pair of means is
/// `separation` apart.
Matrix class_means(std::int32_t num_classes, std::int32_t feature_dim, double separation);

/// Planted-partition generator with equal expected degree for every class.
///
/// Classes are balanced (floor(N/C) nodes each, remainder spread over the
/// first classes, then shuffled). round(N * mean_degree / 2) undirected edges
/// are drawn: a uniform source node, a target class from the source's mixing
/// row and a uniform target node of that class; self-loops and duplicates are
/// rejected and redrawn.
Graph generate_graph(const GeneratorConfig& cfg);

/// Per-client mixing matrices: client i moves the off-diagonal mass of class
/// c onto class (c + 1 + i mod (C-1)) mod C and interpolates with the shared
/// mixing matrix by `conflict_strength`.
std::vector<Matrix> conflicting_mixing_matrices(const GeneratorConfig& cfg, std::int32_t num_clients,
                                                double conflict_strength);

/// One graph per client; client i uses mixing matrix i and seed mix_seed(cfg.seed, i).
std::vector<Graph> generate_conflicting_clients(const GeneratorConfig& cfg, std::int32_t num_clients,
                                                double conflict_strength);

}  // namespace fedgraph
