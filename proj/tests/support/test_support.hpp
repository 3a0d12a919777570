#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "fedgraph/graph.hpp"

namespace fgtest {

using fedgraph::Edge;
using fedgraph::Graph;
using fedgraph::Matrix;

inline Graph graph_of(std::int32_t n, const std::vector<Edge>& edges, std::vector<std::int32_t> labels = {},
                      std::int32_t d = 2, bool undirected = true) {
  if (labels.empty()) labels.assign(static_cast<std::size_t>(n), 0);
  Matrix x(n, d);
  for (std::int32_t i = 0; i < n; ++i)
    for (std::int32_t j = 0; j < d; ++j) x(i, j) = 0.1 * i - 0.05 * j;
  return fedgraph::build_graph(edges, std::move(x), std::move(labels), undirected);
}

inline Graph triangle(std::vector<std::int32_t> labels = {0, 0, 0}) {
  return graph_of(3, {{0, 1}, {1, 2}, {0, 2}}, std::move(labels));
}

inline Graph four_cycle(std::vector<std::int32_t> labels = {0, 0, 1, 1}) {
  return graph_of(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, std::move(labels));
}

/// Erdos-Renyi style random graph with gaussian features and uniform labels.
inline Graph random_graph(std::mt19937_64& rng, std::int32_t n, double p, std::int32_t classes, std::int32_t d = 3) {
  std::bernoulli_distribution edge(p);
  std::uniform_int_distribution<std::int32_t> label(0, classes - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::int32_t u = 0; u < n; ++u)
    for (std::int32_t v = u + 1; v < n; ++v)
      if (edge(rng)) edges.push_back({u, v});
  std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = label(rng);
  for (std::int32_t c = 0; c < classes && c < n; ++c) labels[static_cast<std::size_t>(c)] = c;
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = noise(rng);
  return fedgraph::build_graph(edges, std::move(x), std::move(labels), true, classes);
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> noise(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = noise(rng);
  return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  std::random_device rd;
  auto dir = std::filesystem::temp_directory_path() /
             ("fedgraph-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fgtest
