#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fedgraph/graph.hpp"

namespace fedgraph {

/// Node -> client map for the non-overlapping federated setting.
struct PartitionAssignment {
  std::vector<std::int32_t> client_of;
  std::int32_t num_clients = 0;

  std::vector<std::int32_t> sizes() const;
  std::vector<NodeId> members(std::int32_t client) const;
  /// Throws InputError unless every node maps into [0, num_clients) and no client is empty.
  void validate() const;
};

/// Newman-Girvan modularity (resolution 1) of `pa` on the unweighted graph.
double modularity(const Graph& g, const PartitionAssignment& pa);

/// Number of undirected edges whose endpoints lie in different parts.
std::size_t cut_size(const Graph& g, const PartitionAssignment& pa);

/// Multi-level Louvain modularity maximization. One community per client;
/// the node visiting order of every local-moving pass is shuffled with `seed`.
PartitionAssignment louvain(const Graph& g, std::uint64_t seed);

/// Merges every community smaller than `min_size` (as a whole) into a
/// uniformly chosen community of at least `min_size` nodes. Surviving
/// communities are renumbered in ascending order of their original id.
PartitionAssignment merge_small_communities(const Graph& g, const PartitionAssignment& pa,
                                            std::int32_t min_size, std::uint64_t seed);

/// Balanced m-way partition used in place of METIS: seeded multi-source BFS
/// growth to equal sizes, then greedy boundary moves that strictly reduce the
/// cut while keeping |size_i - N/m| <= max(1, floor(0.05 * N/m)).
PartitionAssignment balanced_partition(const Graph& g, std::int32_t m, std::uint64_t seed);

/// Allowed deviation from N/m for balanced_partition.
std::int32_t balance_tolerance(std::int32_t n, std::int32_t m);

struct ClientDataset {
  Graph graph;
  NodeSplit split;
  /// original node id of each local node
  std::vector<NodeId> original_ids;
};

/// Induced subgraph per client plus a seeded 3/1/1 five-group node split.
std::vector<ClientDataset> make_federated_dataset(const Graph& g, const PartitionAssignment& pa,
                                                  std::uint64_t seed);

/// Same split procedure for clients that already own a graph each.
std::vector<ClientDataset> split_clients(std::vector<Graph> graphs, std::uint64_t seed);

/// CSV with header "node_id,client_id".
void save_partition_csv(const PartitionAssignment& pa, const std::filesystem::path& path);
PartitionAssignment load_partition_csv(const std::filesystem::path& path);

}  // namespace fedgraph
