#include "fedgraph/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fedgraph/errors.hpp"

namespace fedgraph {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail_at(const fs::path& file, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << file.string() << ":" << line << ": " << what;
  throw InputError(msg.str());
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  token = trim(token);
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::vector<Edge> read_edges(const fs::path& path) {
  auto in = open_in(path);
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto split = view.find_first_of(" \t");
    if (split == std::string_view::npos) fail_at(path, lineno, "expected two node ids");
    Edge e;
    if (!parse_number(view.substr(0, split), e.u) || !parse_number(view.substr(split), e.v))
      fail_at(path, lineno, "malformed edge '" + std::string(view) + "'");
    if (e.u < 0 || e.v < 0) fail_at(path, lineno, "negative node id");
    edges.push_back(e);
  }
  return edges;
}

std::vector<std::vector<double>> read_features(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    for (;;) {
      const auto comma = view.find(',', start);
      const auto token = view.substr(start, comma == std::string_view::npos ? view.npos : comma - start);
      double x = 0;
      if (!parse_number(token, x)) fail_at(path, lineno, "malformed value '" + std::string(token) + "'");
      row.push_back(x);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail_at(path, lineno, "row has " + std::to_string(row.size()) + " values, expected " +
                                std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::int32_t> read_labels(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::int32_t> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    std::int32_t y = 0;
    if (!parse_number(view, y) || y < 0) fail_at(path, lineno, "malformed label '" + std::string(view) + "'");
    labels.push_back(y);
  }
  return labels;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

Graph load_graph_files(const fs::path& edge_path, const fs::path& feature_path,
                       const fs::path& label_path, bool undirected, std::int32_t num_classes) {
  auto edges = read_edges(edge_path);
  auto rows = read_features(feature_path);
  auto labels = read_labels(label_path);
  if (rows.size() != labels.size()) {
    std::ostringstream msg;
    msg << feature_path.string() << " has " << rows.size() << " rows but " << label_path.string()
        << " has " << labels.size() << " labels";
    throw InputError(msg.str());
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto n = static_cast<NodeId>(labels.size());
    if (edges[i].u >= n || edges[i].v >= n)
      throw InputError(edge_path.string() + ": edge endpoint exceeds node count " + std::to_string(n));
  }
  return build_graph(edges, rows, std::move(labels), undirected, num_classes);
}

void save_graph_files(const Graph& g, const fs::path& edge_path, const fs::path& feature_path,
                      const fs::path& label_path) {
  {
    auto out = open_out(edge_path);
    for (const auto& e : g.edge_list()) out << e.u << '\t' << e.v << '\n';
  }
  {
    auto out = open_out(feature_path);
    const auto& x = g.features();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (j) out << ',';
        out << format_double(x(i, j));
      }
      out << '\n';
    }
  }
  {
    auto out = open_out(label_path);
    for (auto y : g.labels()) out << y << '\n';
  }
}

void save_graph_bundle(const Graph& g, const fs::path& dir) {
  fs::create_directories(dir);
  save_graph_files(g, dir / "edges.tsv", dir / "features.csv", dir / "labels.csv");
  nlohmann::json meta = {
      {"num_nodes", g.num_nodes()},
      {"num_classes", g.num_classes()},
      {"undirected", g.undirected()},
      {"feature_dim", g.feature_dim()},
  };
  auto out = open_out(dir / "meta.json");
  out << meta.dump(2) << '\n';
}

Graph load_graph_bundle(const fs::path& dir) {
  nlohmann::json meta;
  try {
    auto in = open_in(dir / "meta.json");
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw InputError((dir / "meta.json").string() + ": " + e.what());
  }
  const bool undirected = meta.value("undirected", true);
  const auto num_classes = meta.value("num_classes", 0);
  Graph g = load_graph_files(dir / "edges.tsv", dir / "features.csv", dir / "labels.csv", undirected,
                             num_classes);
  if (meta.contains("num_nodes") && meta["num_nodes"].get<std::int64_t>() != g.num_nodes())
    throw InputError((dir / "meta.json").string() + ": num_nodes disagrees with features.csv");
  return g;
}

std::vector<Graph> load_client_bundles(const fs::path& dir) {
  std::vector<Graph> out;
  for (std::size_t i = 0;; ++i) {
    const auto sub = dir / ("client_" + std::to_string(i));
    if (!fs::exists(sub / "meta.json")) break;
    out.push_back(load_graph_bundle(sub));
  }
  if (out.empty()) throw InputError(dir.string() + ": no client_<i> bundles found");
  return out;
}

}  // namespace fedgraph
