#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fedgraph/graph.hpp"

namespace fedgraph {

/// Parses the three text files of a graph. Malformed lines raise an InputError
/// naming the file and the 1-based line number.
///
/// Edge file: one "u v" pair per line (tab or spaces), 0-based, '#' comments.
/// Features: CSV, row i is node i. Labels: one integer class id per line.
Graph load_graph_files(const std::filesystem::path& edge_path,
                       const std::filesystem::path& feature_path,
                       const std::filesystem::path& label_path, bool undirected = true,
                       std::int32_t num_classes = 0);

void save_graph_files(const Graph& g, const std::filesystem::path& edge_path,
                      const std::filesystem::path& feature_path,
                      const std::filesystem::path& label_path);

/// A bundle directory holds edges.tsv, features.csv, labels.csv and meta.json.
void save_graph_bundle(const Graph& g, const std::filesystem::path& dir);
Graph load_graph_bundle(const std::filesystem::path& dir);

/// Client bundles "client_<i>" under `dir`, in index order.
std::vector<Graph> load_client_bundles(const std::filesystem::path& dir);

/// Shortest text form that parses back to the identical double.
std::string format_double(double x);

}  // namespace fedgraph
