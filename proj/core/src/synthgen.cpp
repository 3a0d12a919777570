#include "fedgraph/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "fedgraph/errors.hpp"

namespace fedgraph {

void GeneratorConfig::validate() const {
  if (num_nodes < 1) throw InputError("generator: num_nodes must be positive");
  if (num_classes < 1 || num_classes > num_nodes)
    throw InputError("generator: num_classes must lie in [1, num_nodes]");
  if (!(target_homophily >= 0.0 && target_homophily <= 1.0))
    throw InputError("generator: homophily must lie in [0, 1]");
  if (!(mean_degree >= 1.0)) throw InputError("generator: mean_degree must be at least 1");
  if (mean_degree >= num_nodes) {
    std::ostringstream msg;
    msg << "generator: mean_degree " << mean_degree << " is infeasible for " << num_nodes << " nodes";
    throw InputError(msg.str());
  }
  if (feature_dim < num_classes)
    throw InputError("generator: feature_dim must be at least num_classes");
  if (!(feature_separation >= 0.0)) throw InputError("generator: feature_separation must be >= 0");
  if (class_mixing.size() != 0) {
    if (class_mixing.rows() != num_classes || class_mixing.cols() != num_classes)
      throw InputError("generator: class_mixing must be C x C");
    for (Eigen::Index i = 0; i < class_mixing.rows(); ++i) {
      if ((class_mixing.row(i).array() < 0.0).any())
        throw InputError("generator: class_mixing has a negative entry");
      if (std::abs(class_mixing.row(i).sum() - 1.0) > 1e-9)
        throw InputError("generator: class_mixing row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

Matrix default_mixing(std::int32_t num_classes, double homophily) {
  if (num_classes == 1) return Matrix::Ones(1, 1);
  Matrix m = Matrix::Constant(num_classes, num_classes, (1.0 - homophily) / (num_classes - 1));
  m.diagonal().setConstant(homophily);
  return m;
}

Matrix class_means(std::int32_t num_classes, std::int32_t feature_dim, double separation) {
  Matrix means = Matrix::Zero(num_classes, feature_dim);
  for (std::int32_t c = 0; c < num_classes; ++c) means(c, c) = separation / std::sqrt(2.0);
  return means;
}

Graph generate_graph(const GeneratorConfig& cfg) {
  cfg.validate();
  const auto n = cfg.num_nodes;
  const auto c = cfg.num_classes;
  const Matrix mixing =
      cfg.class_mixing.size() != 0 ? cfg.class_mixing : default_mixing(c, cfg.target_homophily);
  Rng rng(cfg.seed);

  std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % c;
  std::shuffle(labels.begin(), labels.end(), rng);
  std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(c));
  for (NodeId i = 0; i < n; ++i) members[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);

  std::vector<std::discrete_distribution<std::int32_t>> row_dist;
  row_dist.reserve(static_cast<std::size_t>(c));
  for (std::int32_t i = 0; i < c; ++i) {
    std::vector<double> w(mixing.row(i).data(), mixing.row(i).data() + c);
    row_dist.emplace_back(w.begin(), w.end());
  }

  const auto target_edges =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.mean_degree / 2.0));
  std::uniform_int_distribution<NodeId> pick_node(0, n - 1);
  std::unordered_set<std::uint64_t> seen;
  std::vector<Edge> edges;
  edges.reserve(target_edges);
  const std::size_t max_attempts = 200 * target_edges + 1000;
  std::size_t attempts = 0;
  while (edges.size() < target_edges) {
    if (++attempts > max_attempts)
      throw InputError("generator: could not place the requested edges; degree or mixing infeasible");
    const NodeId u = pick_node(rng);
    const auto cls = row_dist[static_cast<std::size_t>(labels[static_cast<std::size_t>(u)])](rng);
    const auto& pool = members[static_cast<std::size_t>(cls)];
    const NodeId v = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    if (u == v) continue;
    const auto a = static_cast<std::uint64_t>(std::min(u, v));
    const auto b = static_cast<std::uint64_t>(std::max(u, v));
    if (!seen.insert((a << 32) | b).second) continue;
    edges.push_back({u, v});
  }

  const Matrix means = class_means(c, cfg.feature_dim, cfg.feature_separation);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix features(n, cfg.feature_dim);
  for (NodeId i = 0; i < n; ++i) {
    for (std::int32_t j = 0; j < cfg.feature_dim; ++j) {
      features(i, j) = means(labels[static_cast<std::size_t>(i)], j) + noise(rng);
    }
  }
  return build_graph(edges, std::move(features), std::move(labels), true, c);
}

std::vector<Matrix> conflicting_mixing_matrices(const GeneratorConfig& cfg, std::int32_t num_clients,
                                                double conflict_strength) {
  cfg.validate();
  if (num_clients < 2) throw InputError("generator: need at least 2 clients");
  if (cfg.num_classes < 2) throw InputError("generator: need at least 2 classes for conflicting clients");
  if (!(conflict_strength >= 0.0 && conflict_strength <= 1.0))
    throw InputError("generator: conflict_strength must lie in [0, 1]");
  const auto c = cfg.num_classes;
  const Matrix base =
      cfg.class_mixing.size() != 0 ? cfg.class_mixing : default_mixing(c, cfg.target_homophily);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(num_clients));
  for (std::int32_t i = 0; i < num_clients; ++i) {
    const auto shift = 1 + i % (c - 1);
    Matrix rotated = Matrix::Zero(c, c);
    for (std::int32_t r = 0; r < c; ++r) {
      rotated(r, r) = base(r, r);
      rotated(r, (r + shift) % c) += 1.0 - base(r, r);
    }
    out.push_back((1.0 - conflict_strength) * base + conflict_strength * rotated);
  }
  return out;
}

std::vector<Graph> generate_conflicting_clients(const GeneratorConfig& cfg, std::int32_t num_clients,
                                                double conflict_strength) {
  const auto mixings = conflicting_mixing_matrices(cfg, num_clients, conflict_strength);
  std::vector<Graph> out;
  out.reserve(mixings.size());
  for (std::size_t i = 0; i < mixings.size(); ++i) {
    GeneratorConfig client = cfg;
    client.class_mixing = mixings[i];
    client.seed = mix_seed(cfg.seed, i);
    out.push_back(generate_graph(client));
  }
  return out;
}

}  // namespace fedgraph
