#include "fedgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "fedgraph/errors.hpp"

namespace fedgraph {

double accuracy(const Matrix& logits, std::span<const std::int32_t> labels, std::span<const std::uint8_t> mask) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size() || labels.size() != mask.size())
    throw ShapeError("accuracy: logits, labels and mask disagree in length");
  std::size_t total = 0;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    ++total;
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    if (best == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  if (total == 0) throw InputError("accuracy: empty mask");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double binary_auc(std::span<const double> scores, std::span<const std::int32_t> labels,
                  std::span<const std::uint8_t> mask) {
  if (scores.size() != labels.size() || labels.size() != mask.size())
    throw ShapeError("binary_auc: scores, labels and mask disagree in length");
  std::vector<std::pair<double, std::int32_t>> items;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!mask[i]) continue;
    if (labels[i] != 0 && labels[i] != 1) throw InputError("binary_auc: labels must be 0 or 1");
    items.emplace_back(scores[i], labels[i]);
  }
  std::sort(items.begin(), items.end());
  double pos = 0;
  double neg = 0;
  double rank_sum = 0;  // sum of average ranks of positives
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].first == items[i].first) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (items[t].second == 1) {
        pos += 1;
        rank_sum += avg_rank;
      } else {
        neg += 1;
      }
    }
    i = j;
  }
  if (pos == 0 || neg == 0) throw InputError("binary_auc: AUC undefined unless both classes are present");
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

namespace {

double row_cos(const Matrix& m, NodeId u, NodeId v) {
  const double nu = m.row(u).norm();
  const double nv = m.row(v).norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return m.row(u).dot(m.row(v)) / (nu * nv);
}

}  // namespace

LinkAttackResult link_inference_attack(const Matrix& embeddings, const Graph& g, std::size_t num_pairs,
                                       std::uint64_t seed) {
  if (embeddings.rows() != g.num_nodes()) throw ShapeError("link_inference_attack: one embedding row per node required");
  if (num_pairs == 0) throw InputError("link_inference_attack: num_pairs must be positive");
  auto edges = g.edge_list();
  if (edges.size() < num_pairs)
    throw InputError("link_inference_attack: graph has " + std::to_string(edges.size()) + " edges, fewer than " +
                     std::to_string(num_pairs) + " requested pairs");
  const auto n = static_cast<std::uint64_t>(g.num_nodes());
  const std::uint64_t all_pairs = n * (n - 1) / 2;
  if (all_pairs - edges.size() < num_pairs)
    throw InputError("link_inference_attack: not enough non-edges to sample");

  Rng rng(seed);
  std::shuffle(edges.begin(), edges.end(), rng);
  edges.resize(num_pairs);

  std::vector<Edge> non_edges;
  std::unordered_set<std::uint64_t> seen;
  std::uniform_int_distribution<NodeId> pick(0, g.num_nodes() - 1);
  while (non_edges.size() < num_pairs) {
    NodeId u = pick(rng);
    NodeId v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (g.has_edge(u, v) || g.has_edge(v, u)) continue;
    if (!seen.insert((static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v)).second) continue;
    non_edges.push_back({u, v});
  }

  std::vector<double> pos;
  std::vector<double> neg;
  for (const auto& e : edges) pos.push_back(row_cos(embeddings, e.u, e.v));
  for (const auto& e : non_edges) neg.push_back(row_cos(embeddings, e.u, e.v));
  std::vector<double> all(pos);
  all.insert(all.end(), neg.begin(), neg.end());
  std::sort(all.begin(), all.end());
  const std::size_t m = all.size();
  const double threshold = (all[m / 2 - 1] + all[m / 2]) / 2.0;

  LinkAttackResult r;
  r.num_pairs = num_pairs;
  r.threshold = threshold;
  const auto tp = std::count_if(pos.begin(), pos.end(), [&](double s) { return s > threshold; });
  const auto tn = std::count_if(neg.begin(), neg.end(), [&](double s) { return !(s > threshold); });
  r.true_positive_rate = static_cast<double>(tp) / static_cast<double>(num_pairs);
  r.true_negative_rate = static_cast<double>(tn) / static_cast<double>(num_pairs);
  r.balanced_accuracy = (r.true_positive_rate + r.true_negative_rate) / 2.0;
  return r;
}

Matrix client_divergence(std::span<const Matrix> distributions) {
  const auto m = static_cast<Eigen::Index>(distributions.size());
  Matrix out = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& a = distributions[static_cast<std::size_t>(i)];
    if (a.rows() != a.cols() || a.rows() != distributions.front().rows())
      throw InputError("client_divergence: all distributions must be C x C with the same C");
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d = (a - distributions[static_cast<std::size_t>(j)]).norm();
      out(i, j) = d;
      out(j, i) = d;
    }
  }
  return out;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InputError("mean: no values");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace fedgraph
