#include "fedgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <unordered_set>

#include "fedgraph/errors.hpp"

namespace fedgraph {

namespace {

std::uint64_t pair_key(NodeId u, NodeId v) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
         static_cast<std::uint32_t>(v);
}

}  // namespace

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (!undirected_ || u < v) out.push_back({u, v});
    }
  }
  return out;
}

void Graph::validate() const {
  const auto n = static_cast<std::size_t>(num_nodes());
  if (row_offsets_.size() != n + 1) throw InputError("graph: row_offsets must have N+1 entries");
  if (row_offsets_.front() != 0) throw InputError("graph: row_offsets[0] must be 0");
  if (static_cast<std::size_t>(row_offsets_.back()) != col_indices_.size())
    throw InputError("graph: row_offsets[N] must equal the number of stored entries");
  if (static_cast<std::size_t>(features_.rows()) != n)
    throw InputError("graph: feature rows must equal node count");
  for (std::size_t u = 0; u < n; ++u) {
    if (row_offsets_[u] > row_offsets_[u + 1]) throw InputError("graph: row_offsets not monotone");
    auto nb = neighbors(static_cast<NodeId>(u));
    for (std::size_t i = 0; i < nb.size(); ++i) {
      if (nb[i] < 0 || static_cast<std::size_t>(nb[i]) >= n)
        throw InputError("graph: column index out of range");
      if (static_cast<std::size_t>(nb[i]) == u) throw InputError("graph: self-loop stored");
      if (i > 0 && nb[i - 1] >= nb[i]) throw InputError("graph: neighbor list not strictly sorted");
    }
  }
  for (auto y : labels_) {
    if (y < 0 || y >= num_classes_) throw InputError("graph: label outside [0, C)");
  }
  if (undirected_) {
    for (NodeId u = 0; u < num_nodes(); ++u) {
      for (NodeId v : neighbors(u)) {
        if (!has_edge(v, u)) throw InputError("graph: undirected graph is not symmetric");
      }
    }
  }
}

bool operator==(const Graph& a, const Graph& b) {
  return a.undirected_ == b.undirected_ && a.num_classes_ == b.num_classes_ &&
         a.row_offsets_ == b.row_offsets_ && a.col_indices_ == b.col_indices_ &&
         a.labels_ == b.labels_ && a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() && a.features_ == b.features_;
}

Graph build_graph(std::span<const Edge> edges, Matrix features, std::vector<std::int32_t> labels,
                  bool undirected, std::int32_t num_classes) {
  const auto n = static_cast<std::int64_t>(labels.size());
  if (features.rows() != n) {
    std::ostringstream msg;
    msg << "build_graph: features have " << features.rows() << " rows but there are " << n
        << " labels";
    throw InputError(msg.str());
  }
  std::int32_t max_label = -1;
  for (auto y : labels) {
    if (y < 0) throw InputError("build_graph: negative label");
    max_label = std::max(max_label, y);
  }
  if (num_classes <= 0) num_classes = max_label + 1;
  if (max_label >= num_classes) throw InputError("build_graph: label exceeds num_classes");

  std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(n));
  for (const auto& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) {
      std::ostringstream msg;
      msg << "build_graph: edge (" << e.u << ", " << e.v << ") has an endpoint outside [0, " << n
          << ")";
      throw InputError(msg.str());
    }
    if (e.u == e.v) continue;
    adj[static_cast<std::size_t>(e.u)].push_back(e.v);
    if (undirected) adj[static_cast<std::size_t>(e.v)].push_back(e.u);
  }

  Graph g;
  g.row_offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t u = 0; u < adj.size(); ++u) {
    auto& row = adj[u];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    g.row_offsets_[u + 1] = g.row_offsets_[u] + static_cast<std::int64_t>(row.size());
  }
  g.col_indices_.reserve(static_cast<std::size_t>(g.row_offsets_.back()));
  for (const auto& row : adj) g.col_indices_.insert(g.col_indices_.end(), row.begin(), row.end());
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  g.num_classes_ = num_classes;
  g.undirected_ = undirected;
  return g;
}

Graph build_graph(std::span<const Edge> edges, const std::vector<std::vector<double>>& feature_rows,
                  std::vector<std::int32_t> labels, bool undirected, std::int32_t num_classes) {
  const std::size_t d = feature_rows.empty() ? 0 : feature_rows.front().size();
  Matrix features(static_cast<Eigen::Index>(feature_rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < feature_rows.size(); ++i) {
    if (feature_rows[i].size() != d) {
      std::ostringstream msg;
      msg << "build_graph: feature row " << i << " has " << feature_rows[i].size()
          << " values, expected " << d;
      throw InputError(msg.str());
    }
    for (std::size_t j = 0; j < d; ++j)
      features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = feature_rows[i][j];
  }
  return build_graph(edges, std::move(features), std::move(labels), undirected, num_classes);
}

Graph with_labels(const Graph& g, std::vector<std::int32_t> labels, std::int32_t num_classes) {
  auto edges = g.edge_list();
  return build_graph(edges, g.features(), std::move(labels), g.undirected(),
                     num_classes > 0 ? num_classes : g.num_classes());
}

double edge_homophily(const Graph& g) {
  std::size_t same = 0;
  std::size_t total = 0;
  const auto& y = g.labels();
  for (const auto& e : g.edge_list()) {
    ++total;
    if (y[static_cast<std::size_t>(e.u)] == y[static_cast<std::size_t>(e.v)]) ++same;
  }
  if (total == 0) throw InputError("edge_homophily: ratio undefined for a graph with no edges");
  return static_cast<double>(same) / static_cast<double>(total);
}

Matrix neighbor_label_distribution(const Graph& g) {
  const auto c = g.num_classes();
  Matrix counts = Matrix::Zero(c, c);
  const auto& y = g.labels();
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const auto yu = y[static_cast<std::size_t>(u)];
    for (NodeId v : g.neighbors(u)) counts(yu, y[static_cast<std::size_t>(v)]) += 1.0;
  }
  for (Eigen::Index i = 0; i < c; ++i) {
    const double s = counts.row(i).sum();
    if (s > 0) counts.row(i) /= s;
  }
  return counts;
}

EdgeFlipResult flip_edge_noise_detailed(const Graph& g, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("flip_edge_noise: p must lie in [0, 1]");
  EdgeFlipResult result;
  if (p == 0.0) {
    result.graph = g;
    result.kept = g.num_edges();
    return result;
  }
  Rng rng(seed);
  std::bernoulli_distribution drop(p);
  const auto original = g.edge_list();
  std::vector<Edge> kept;
  kept.reserve(original.size());
  // Replacements are drawn from pairs that were not edges before, so a
  // removed edge is never put back.
  std::unordered_set<std::uint64_t> present;
  for (const auto& e : original) {
    present.insert(pair_key(e.u, e.v));
    if (drop(rng)) ++result.removed;
    else kept.push_back(e);
  }
  result.kept = kept.size();

  const auto n = static_cast<std::uint64_t>(g.num_nodes());
  const std::uint64_t capacity = g.undirected() ? n * (n - 1) / 2 : n * (n - 1);
  std::uniform_int_distribution<NodeId> pick(0, g.num_nodes() - 1);
  for (std::size_t i = 0; i < result.removed && present.size() < capacity; ++i) {
    for (;;) {
      NodeId u = pick(rng);
      NodeId v = pick(rng);
      if (u == v) continue;
      if (g.undirected() && u > v) std::swap(u, v);
      if (present.insert(pair_key(u, v)).second) {
        kept.push_back({u, v});
        ++result.inserted;
        break;
      }
    }
  }
  result.graph = build_graph(kept, g.features(), g.labels(), g.undirected(), g.num_classes());
  return result;
}

Graph flip_edge_noise(const Graph& g, double p, std::uint64_t seed) {
  return flip_edge_noise_detailed(g, p, seed).graph;
}

std::size_t NodeSplit::count(const Mask& m) {
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

NodeSplit five_group_split(std::int32_t n, std::uint64_t seed) {
  if (n < 5) throw InputError("five_group_split: need at least 5 nodes, got " + std::to_string(n));
  std::vector<NodeId> order(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  NodeSplit split;
  split.train.assign(order.size(), 0);
  split.val.assign(order.size(), 0);
  split.test.assign(order.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto node = static_cast<std::size_t>(order[i]);
    // group sizes differ by at most one
    const std::size_t group = i * 5 / order.size();
    if (group < 3) split.train[node] = 1;
    else if (group == 3) split.val[node] = 1;
    else split.test[node] = 1;
  }
  return split;
}

Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes) {
  if (nodes.empty()) throw InputError("induced_subgraph: empty node set");
  std::vector<NodeId> ids(nodes.begin(), nodes.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.front() < 0 || ids.back() >= g.num_nodes())
    throw InputError("induced_subgraph: node id out of range");

  std::vector<NodeId> remap(static_cast<std::size_t>(g.num_nodes()), -1);
  for (std::size_t i = 0; i < ids.size(); ++i) remap[static_cast<std::size_t>(ids[i])] = static_cast<NodeId>(i);

  std::vector<Edge> edges;
  for (const auto& e : g.edge_list()) {
    const auto a = remap[static_cast<std::size_t>(e.u)];
    const auto b = remap[static_cast<std::size_t>(e.v)];
    if (a >= 0 && b >= 0) edges.push_back({a, b});
  }
  Matrix features(static_cast<Eigen::Index>(ids.size()), g.feature_dim());
  std::vector<std::int32_t> labels(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    features.row(static_cast<Eigen::Index>(i)) = g.features().row(ids[i]);
    labels[i] = g.labels()[static_cast<std::size_t>(ids[i])];
  }
  Subgraph sub;
  sub.graph = build_graph(edges, std::move(features), std::move(labels), g.undirected(), g.num_classes());
  sub.original_ids = std::move(ids);
  return sub;
}

}  // namespace fedgraph
