#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fedgraph/matrix.hpp"

namespace fedgraph {

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Immutable node-attributed graph in compressed row form.
///
/// Undirected graphs store both directed entries; num_edges() reports the
/// undirected count. Neighbor lists are sorted and never contain the node
/// itself.
class Graph {
 public:
  Graph() = default;

  std::int32_t num_nodes() const noexcept { return static_cast<std::int32_t>(labels_.size()); }
  std::int32_t num_classes() const noexcept { return num_classes_; }
  Eigen::Index feature_dim() const noexcept { return features_.cols(); }
  bool undirected() const noexcept { return undirected_; }

  /// Stored (directed) entries.
  std::size_t num_entries() const noexcept { return col_indices_.size(); }
  /// Edge count; undirected edges are counted once.
  std::size_t num_edges() const noexcept {
    return undirected_ ? col_indices_.size() / 2 : col_indices_.size();
  }

  std::span<const NodeId> neighbors(NodeId u) const {
    const auto b = static_cast<std::size_t>(row_offsets_[static_cast<std::size_t>(u)]);
    const auto e = static_cast<std::size_t>(row_offsets_[static_cast<std::size_t>(u) + 1]);
    return {col_indices_.data() + b, e - b};
  }
  std::size_t degree(NodeId u) const { return neighbors(u).size(); }
  bool has_edge(NodeId u, NodeId v) const;

  const std::vector<std::int64_t>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<NodeId>& col_indices() const noexcept { return col_indices_; }
  const Matrix& features() const noexcept { return features_; }
  const std::vector<std::int32_t>& labels() const noexcept { return labels_; }

  /// Edges in canonical order. For undirected graphs only u < v is listed.
  std::vector<Edge> edge_list() const;

  /// Throws InputError if any structural invariant is broken.
  void validate() const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  friend Graph build_graph(std::span<const Edge>, Matrix, std::vector<std::int32_t>, bool,
                           std::int32_t);

  std::vector<std::int64_t> row_offsets_{0};
  std::vector<NodeId> col_indices_;
  Matrix features_;
  std::vector<std::int32_t> labels_;
  std::int32_t num_classes_ = 0;
  bool undirected_ = true;
};

/// Canonical graph construction: sorts and deduplicates neighbor lists,
/// strips self-loops and symmetrizes when `undirected`.
///
/// `num_classes` <= 0 means "max label + 1".
Graph build_graph(std::span<const Edge> edges, Matrix features, std::vector<std::int32_t> labels,
                  bool undirected, std::int32_t num_classes = 0);

/// Same as above for row-wise feature input; ragged rows are an InputError.
Graph build_graph(std::span<const Edge> edges, const std::vector<std::vector<double>>& feature_rows,
                  std::vector<std::int32_t> labels, bool undirected, std::int32_t num_classes = 0);

/// Copy of `g` with the same topology and new labels.
Graph with_labels(const Graph& g, std::vector<std::int32_t> labels, std::int32_t num_classes = 0);

/// Fraction of edges whose endpoints share a label (undirected edges counted once).
double edge_homophily(const Graph& g);

/// C x C matrix; row i is the label distribution of neighbors of class-i nodes,
/// counted over stored (directed) entries. Rows of classes without out-edges are zero.
Matrix neighbor_label_distribution(const Graph& g);

struct EdgeFlipResult {
  Graph graph;
  std::size_t kept = 0;
  std::size_t removed = 0;
  std::size_t inserted = 0;
};

/// Removes each edge with probability p and inserts one uniformly random
/// non-edge of `g` per removal (fewer when `g` has too few non-edges).
/// Deterministic given `seed`.
EdgeFlipResult flip_edge_noise_detailed(const Graph& g, double p, std::uint64_t seed);
Graph flip_edge_noise(const Graph& g, double p, std::uint64_t seed);

using Mask = std::vector<std::uint8_t>;

/// Disjoint train / validation / test node masks.
struct NodeSplit {
  Mask train;
  Mask val;
  Mask test;

  static std::size_t count(const Mask& m);
};

/// Shuffles the n nodes with `seed`, deals them into five near-equal groups
/// and uses groups 0-2 for training, 3 for validation and 4 for test.
/// Requires n >= 5.
NodeSplit five_group_split(std::int32_t n, std::uint64_t seed);

struct Subgraph {
  Graph graph;
  /// original_ids[new_id] == old id.
  std::vector<NodeId> original_ids;
};

/// Subgraph over `nodes` (deduplicated, relabelled in ascending id order).
/// Edges leaving the node set are dropped.
Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes);

}  // namespace fedgraph
