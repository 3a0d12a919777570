#include "fedgraph/partition.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "fedgraph/errors.hpp"

namespace fedgraph {

std::vector<std::int32_t> PartitionAssignment::sizes() const {
  std::vector<std::int32_t> out(static_cast<std::size_t>(std::max(num_clients, 0)), 0);
  for (auto c : client_of) {
    if (c >= 0 && c < num_clients) ++out[static_cast<std::size_t>(c)];
  }
  return out;
}

std::vector<NodeId> PartitionAssignment::members(std::int32_t client) const {
  std::vector<NodeId> out;
  for (std::size_t u = 0; u < client_of.size(); ++u) {
    if (client_of[u] == client) out.push_back(static_cast<NodeId>(u));
  }
  return out;
}

void PartitionAssignment::validate() const {
  if (num_clients <= 0) throw InputError("partition: num_clients must be positive");
  for (auto c : client_of) {
    if (c < 0 || c >= num_clients) throw InputError("partition: client id out of range");
  }
  for (auto s : sizes()) {
    if (s == 0) throw InputError("partition: empty client");
  }
}

double modularity(const Graph& g, const PartitionAssignment& pa) {
  const double two_m = static_cast<double>(g.num_entries());
  if (two_m == 0) return 0.0;
  std::vector<double> internal(static_cast<std::size_t>(pa.num_clients), 0.0);
  std::vector<double> total(static_cast<std::size_t>(pa.num_clients), 0.0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const auto cu = static_cast<std::size_t>(pa.client_of[static_cast<std::size_t>(u)]);
    total[cu] += static_cast<double>(g.degree(u));
    for (NodeId v : g.neighbors(u)) {
      if (pa.client_of[static_cast<std::size_t>(v)] == static_cast<std::int32_t>(cu)) internal[cu] += 1.0;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < internal.size(); ++c) {
    q += internal[c] / two_m - (total[c] / two_m) * (total[c] / two_m);
  }
  return q;
}

std::size_t cut_size(const Graph& g, const PartitionAssignment& pa) {
  std::size_t cut = 0;
  for (const auto& e : g.edge_list()) {
    if (pa.client_of[static_cast<std::size_t>(e.u)] != pa.client_of[static_cast<std::size_t>(e.v)]) ++cut;
  }
  return cut;
}

namespace {

// Community graph used between Louvain levels. self_weight[c] is the sum of
// A_ij over ordered pairs inside c, so degree[c] = self_weight[c] + sum of
// external links.
struct WeightedGraph {
  std::vector<std::vector<std::pair<std::int32_t, double>>> adj;
  std::vector<double> self_weight;
  std::vector<double> degree;
  double two_m = 0.0;

  std::size_t size() const { return adj.size(); }
};

WeightedGraph from_graph(const Graph& g) {
  WeightedGraph wg;
  const auto n = static_cast<std::size_t>(g.num_nodes());
  wg.adj.resize(n);
  wg.self_weight.assign(n, 0.0);
  wg.degree.assign(n, 0.0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) wg.adj[static_cast<std::size_t>(u)].emplace_back(v, 1.0);
    wg.degree[static_cast<std::size_t>(u)] = static_cast<double>(g.degree(u));
  }
  wg.two_m = static_cast<double>(g.num_entries());
  return wg;
}

double level_modularity(const WeightedGraph& wg, const std::vector<std::int32_t>& comm) {
  std::map<std::int32_t, std::pair<double, double>> acc;  // internal, total
  for (std::size_t u = 0; u < wg.size(); ++u) {
    auto& [in, tot] = acc[comm[u]];
    in += wg.self_weight[u];
    tot += wg.degree[u];
    for (auto [v, w] : wg.adj[u]) {
      if (comm[static_cast<std::size_t>(v)] == comm[u]) in += w;
    }
  }
  double q = 0.0;
  for (const auto& [c, p] : acc) {
    q += p.first / wg.two_m - (p.second / wg.two_m) * (p.second / wg.two_m);
  }
  return q;
}

// One local-moving phase. Returns true if any node changed community.
bool local_moving(const WeightedGraph& wg, std::vector<std::int32_t>& comm, Rng& rng) {
  const auto n = wg.size();
  std::vector<double> tot(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) tot[static_cast<std::size_t>(comm[u])] += wg.degree[u];

  std::vector<std::int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> link(n, 0.0);
  std::vector<std::int32_t> touched;
  bool any_move = false;
  constexpr double kMinGain = 1e-12;
  constexpr double kMinImprovement = 1e-7;

  double q = level_modularity(wg, comm);
  for (;;) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t moves = 0;
    for (auto u32 : order) {
      const auto u = static_cast<std::size_t>(u32);
      const auto own = comm[u];
      const double ku = wg.degree[u];
      for (auto [v, w] : wg.adj[u]) {
        const auto cv = comm[static_cast<std::size_t>(v)];
        if (link[static_cast<std::size_t>(cv)] == 0.0) touched.push_back(cv);
        link[static_cast<std::size_t>(cv)] += w;
      }
      tot[static_cast<std::size_t>(own)] -= ku;
      auto best = own;
      double best_gain = link[static_cast<std::size_t>(own)] - tot[static_cast<std::size_t>(own)] * ku / wg.two_m;
      for (auto c : touched) {
        const double gain = link[static_cast<std::size_t>(c)] - tot[static_cast<std::size_t>(c)] * ku / wg.two_m;
        if (gain > best_gain + kMinGain) {
          best_gain = gain;
          best = c;
        }
      }
      tot[static_cast<std::size_t>(best)] += ku;
      if (best != own) {
        comm[u] = best;
        ++moves;
      }
      for (auto c : touched) link[static_cast<std::size_t>(c)] = 0.0;
      touched.clear();
    }
    if (moves == 0) break;
    any_move = true;
    const double next = level_modularity(wg, comm);
    const double gain = next - q;
    q = next;
    if (gain < kMinImprovement) break;
  }
  return any_move;
}

// Relabels communities to 0..k-1 in order of first appearance.
std::int32_t renumber(std::vector<std::int32_t>& comm) {
  std::vector<std::int32_t> map(comm.size(), -1);
  std::int32_t next = 0;
  for (auto& c : comm) {
    auto& m = map[static_cast<std::size_t>(c)];
    if (m < 0) m = next++;
    c = m;
  }
  return next;
}

WeightedGraph coarsen(const WeightedGraph& wg, const std::vector<std::int32_t>& comm, std::int32_t k) {
  WeightedGraph out;
  const auto kk = static_cast<std::size_t>(k);
  out.adj.resize(kk);
  out.self_weight.assign(kk, 0.0);
  out.degree.assign(kk, 0.0);
  out.two_m = wg.two_m;
  std::vector<std::map<std::int32_t, double>> links(kk);
  for (std::size_t u = 0; u < wg.size(); ++u) {
    const auto cu = static_cast<std::size_t>(comm[u]);
    out.self_weight[cu] += wg.self_weight[u];
    out.degree[cu] += wg.degree[u];
    for (auto [v, w] : wg.adj[u]) {
      const auto cv = comm[static_cast<std::size_t>(v)];
      if (static_cast<std::size_t>(cv) == cu) out.self_weight[cu] += w;
      else links[cu][cv] += w;
    }
  }
  for (std::size_t c = 0; c < kk; ++c) {
    out.adj[c].assign(links[c].begin(), links[c].end());
  }
  return out;
}

}  // namespace

PartitionAssignment louvain(const Graph& g, std::uint64_t seed) {
  if (!g.undirected()) throw InputError("louvain: graph must be undirected");
  if (g.num_edges() == 0) throw InputError("louvain: graph has no edges");
  Rng rng(seed);
  WeightedGraph level = from_graph(g);
  std::vector<std::int32_t> node_comm(static_cast<std::size_t>(g.num_nodes()));
  std::iota(node_comm.begin(), node_comm.end(), 0);

  for (;;) {
    std::vector<std::int32_t> comm(level.size());
    std::iota(comm.begin(), comm.end(), 0);
    const bool moved = local_moving(level, comm, rng);
    if (!moved) break;
    const auto k = renumber(comm);
    for (auto& c : node_comm) c = comm[static_cast<std::size_t>(c)];
    if (static_cast<std::size_t>(k) == level.size()) break;
    level = coarsen(level, comm, k);
  }
  PartitionAssignment pa;
  pa.num_clients = renumber(node_comm);
  pa.client_of = std::move(node_comm);
  return pa;
}

PartitionAssignment merge_small_communities(const Graph& g, const PartitionAssignment& pa,
                                            std::int32_t min_size, std::uint64_t seed) {
  if (pa.client_of.size() != static_cast<std::size_t>(g.num_nodes()))
    throw InputError("merge_small_communities: assignment size does not match graph");
  pa.validate();
  const auto sizes = pa.sizes();
  std::vector<std::int32_t> remap(sizes.size(), -1);
  std::int32_t large = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] >= min_size) remap[c] = large++;
  }
  if (large == 0) {
    std::ostringstream msg;
    msg << "merge_small_communities: no community has at least " << min_size
        << " nodes (largest has " << *std::max_element(sizes.begin(), sizes.end())
        << "); use a smaller min_size";
    throw InputError(msg.str());
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::int32_t> pick(0, large - 1);
  for (auto& r : remap) {
    if (r < 0) r = pick(rng);
  }
  PartitionAssignment out;
  out.num_clients = large;
  out.client_of.reserve(pa.client_of.size());
  for (auto c : pa.client_of) out.client_of.push_back(remap[static_cast<std::size_t>(c)]);
  return out;
}

std::int32_t balance_tolerance(std::int32_t n, std::int32_t m) {
  // floor(0.05 * n / m), but at least one node: integer sizes cannot hit a
  // fractional n / m exactly.
  return std::max<std::int32_t>(1, static_cast<std::int32_t>(static_cast<std::int64_t>(n) / (20LL * m)));
}

PartitionAssignment balanced_partition(const Graph& g, std::int32_t m, std::uint64_t seed) {
  const auto n = g.num_nodes();
  if (m <= 0) throw InputError("balanced_partition: number of parts must be positive");
  if (m > n) {
    throw InputError("balanced_partition: cannot split " + std::to_string(n) + " nodes into " +
                     std::to_string(m) + " parts");
  }
  const auto un = static_cast<std::size_t>(n);
  Rng rng(seed);
  PartitionAssignment pa;
  pa.num_clients = m;
  pa.client_of.assign(un, -1);

  std::vector<std::int32_t> target(static_cast<std::size_t>(m), n / m);
  for (std::int32_t i = 0; i < n % m; ++i) ++target[static_cast<std::size_t>(i)];

  // Farthest-point seeding on hop distance; unreachable nodes count as farthest.
  constexpr auto kInf = std::numeric_limits<std::int32_t>::max();
  std::vector<std::int32_t> dist(un, kInf);
  std::vector<NodeId> seeds;
  auto relax_from = [&](NodeId s) {
    std::deque<NodeId> q{s};
    dist[static_cast<std::size_t>(s)] = 0;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop_front();
      for (NodeId v : g.neighbors(u)) {
        if (dist[static_cast<std::size_t>(v)] > dist[static_cast<std::size_t>(u)] + 1) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          q.push_back(v);
        }
      }
    }
  };
  seeds.push_back(std::uniform_int_distribution<NodeId>(0, n - 1)(rng));
  relax_from(seeds.back());
  while (static_cast<std::int32_t>(seeds.size()) < m) {
    std::int32_t far = -1;
    std::vector<NodeId> candidates;
    for (NodeId u = 0; u < n; ++u) {
      const auto d = dist[static_cast<std::size_t>(u)];
      if (d == 0) continue;
      if (d > far) {
        far = d;
        candidates.clear();
      }
      if (d == far) candidates.push_back(u);
    }
    const auto s = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
    seeds.push_back(s);
    relax_from(s);
  }

  // Round-robin BFS growth to exact target sizes.
  std::vector<NodeId> fallback(un);
  std::iota(fallback.begin(), fallback.end(), 0);
  std::shuffle(fallback.begin(), fallback.end(), rng);
  std::size_t fallback_pos = 0;
  std::vector<std::deque<NodeId>> frontier(static_cast<std::size_t>(m));
  std::vector<std::int32_t> size(static_cast<std::size_t>(m), 0);
  auto claim = [&](std::int32_t part, NodeId u) {
    pa.client_of[static_cast<std::size_t>(u)] = part;
    ++size[static_cast<std::size_t>(part)];
    for (NodeId v : g.neighbors(u)) {
      if (pa.client_of[static_cast<std::size_t>(v)] < 0) frontier[static_cast<std::size_t>(part)].push_back(v);
    }
  };
  for (std::int32_t p = 0; p < m; ++p) claim(p, seeds[static_cast<std::size_t>(p)]);
  std::int32_t assigned = m;
  while (assigned < n) {
    for (std::int32_t p = 0; p < m && assigned < n; ++p) {
      const auto up = static_cast<std::size_t>(p);
      if (size[up] >= target[up]) continue;
      NodeId next = -1;
      while (!frontier[up].empty()) {
        const auto cand = frontier[up].front();
        frontier[up].pop_front();
        if (pa.client_of[static_cast<std::size_t>(cand)] < 0) {
          next = cand;
          break;
        }
      }
      if (next < 0) {
        while (pa.client_of[static_cast<std::size_t>(fallback[fallback_pos])] >= 0) ++fallback_pos;
        next = fallback[fallback_pos];
      }
      claim(p, next);
      ++assigned;
    }
  }

  // Greedy boundary refinement: only strictly cut-reducing, balance-preserving moves.
  const std::int32_t tol = balance_tolerance(n, m);
  const std::int64_t lo_num = static_cast<std::int64_t>(n) - static_cast<std::int64_t>(tol) * m;
  const auto lo = std::max<std::int32_t>(1, static_cast<std::int32_t>((lo_num + m - 1) / m));
  const auto hi = static_cast<std::int32_t>((static_cast<std::int64_t>(n) + static_cast<std::int64_t>(tol) * m) / m);
  std::vector<NodeId> order(un);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::int32_t> conn(static_cast<std::size_t>(m), 0);
  for (int pass = 0; pass < 50; ++pass) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t moves = 0;
    for (auto u : order) {
      const auto a = pa.client_of[static_cast<std::size_t>(u)];
      for (NodeId v : g.neighbors(u)) ++conn[static_cast<std::size_t>(pa.client_of[static_cast<std::size_t>(v)])];
      std::int32_t best = a;
      std::int32_t best_gain = 0;
      for (NodeId v : g.neighbors(u)) {
        const auto b = pa.client_of[static_cast<std::size_t>(v)];
        const auto gain = conn[static_cast<std::size_t>(b)] - conn[static_cast<std::size_t>(a)];
        if (b != a && gain > best_gain && size[static_cast<std::size_t>(b)] + 1 <= hi) {
          best = b;
          best_gain = gain;
        }
      }
      for (NodeId v : g.neighbors(u)) conn[static_cast<std::size_t>(pa.client_of[static_cast<std::size_t>(v)])] = 0;
      if (best != a && size[static_cast<std::size_t>(a)] - 1 >= lo) {
        pa.client_of[static_cast<std::size_t>(u)] = best;
        --size[static_cast<std::size_t>(a)];
        ++size[static_cast<std::size_t>(best)];
        ++moves;
      }
    }
    if (moves == 0) break;
  }
  return pa;
}

std::vector<ClientDataset> make_federated_dataset(const Graph& g, const PartitionAssignment& pa,
                                                  std::uint64_t seed) {
  if (pa.client_of.size() != static_cast<std::size_t>(g.num_nodes()))
    throw InputError("make_federated_dataset: assignment size does not match graph");
  pa.validate();
  std::vector<ClientDataset> out;
  out.reserve(static_cast<std::size_t>(pa.num_clients));
  for (std::int32_t c = 0; c < pa.num_clients; ++c) {
    const auto nodes = pa.members(c);
    if (nodes.size() < 5) {
      throw InputError("make_federated_dataset: client " + std::to_string(c) + " has " +
                       std::to_string(nodes.size()) + " nodes; at least 5 are needed for the split");
    }
    auto sub = induced_subgraph(g, nodes);
    ClientDataset ds;
    ds.split = five_group_split(sub.graph.num_nodes(), mix_seed(seed, static_cast<std::uint64_t>(c)));
    ds.graph = std::move(sub.graph);
    ds.original_ids = std::move(sub.original_ids);
    out.push_back(std::move(ds));
  }
  return out;
}

std::vector<ClientDataset> split_clients(std::vector<Graph> graphs, std::uint64_t seed) {
  std::vector<ClientDataset> out;
  out.reserve(graphs.size());
  for (std::size_t c = 0; c < graphs.size(); ++c) {
    ClientDataset ds;
    ds.split = five_group_split(graphs[c].num_nodes(), mix_seed(seed, c));
    ds.original_ids.resize(static_cast<std::size_t>(graphs[c].num_nodes()));
    std::iota(ds.original_ids.begin(), ds.original_ids.end(), 0);
    ds.graph = std::move(graphs[c]);
    out.push_back(std::move(ds));
  }
  return out;
}

void save_partition_csv(const PartitionAssignment& pa, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << "node_id,client_id\n";
  for (std::size_t u = 0; u < pa.client_of.size(); ++u) out << u << ',' << pa.client_of[u] << '\n';
}

PartitionAssignment load_partition_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<std::int64_t, std::int32_t>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.rfind("node_id", 0) == 0) continue;
    std::istringstream ss(line);
    std::int64_t node = 0;
    std::int32_t client = 0;
    char comma = 0;
    if (!(ss >> node >> comma >> client) || comma != ',' || node < 0)
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    rows.emplace_back(node, client);
  }
  PartitionAssignment pa;
  pa.client_of.assign(rows.size(), -1);
  for (auto [node, client] : rows) {
    if (static_cast<std::size_t>(node) >= rows.size())
      throw InputError(path.string() + ": node ids must be 0..N-1");
    pa.client_of[static_cast<std::size_t>(node)] = client;
    pa.num_clients = std::max(pa.num_clients, client + 1);
  }
  pa.validate();
  return pa;
}

}  // namespace fedgraph
