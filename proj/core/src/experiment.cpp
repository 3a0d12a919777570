#include "fedgraph/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "fedgraph/errors.hpp"
#include "fedgraph/graph_io.hpp"
#include "fedgraph/metrics.hpp"

namespace fedgraph {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  double v = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw InputError("config: '" + key + "' expects a number, got '" + text + "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  Int v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw InputError("config: '" + key + "' expects an integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw InputError("config: '" + key + "' expects true or false, got '" + text + "'");
}

std::string render_matrix(const Matrix& m) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out << "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
  }
  return out.str();
}

Matrix parse_matrix(const std::string& key, const std::string& text) {
  if (trim(text).empty()) return {};
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::istringstream rs(row);
    std::vector<double> vals;
    std::string tok;
    while (rs >> tok) vals.push_back(parse_real(key, tok));
    rows.push_back(std::move(vals));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw InputError("config: '" + key + "' has ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

std::string render_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(seeds[i]);
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!trim(tok).empty()) out.push_back(parse_int<std::uint64_t>("seeds", tok));
  }
  return out;
}

bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (source != "generated" && source != "files")
    throw InputError("config: data.source must be generated or files");
  if (source == "files" && data_path.empty()) throw InputError("config: data.path is required for files");
  if (!(edge_noise >= 0.0 && edge_noise <= 1.0)) throw InputError("config: data.edge_noise must lie in [0, 1]");
  if (partition != "none" && partition != "louvain" && partition != "balanced")
    throw InputError("config: partition.method must be none, louvain or balanced");
  if (source == "generated") {
    generator.validate();
    if (partition == "none" && gen_clients < 1) throw InputError("config: generator.clients must be positive");
  }
  if (!(conflict_strength >= 0.0 && conflict_strength <= 1.0))
    throw InputError("config: generator.conflict must lie in [0, 1]");
  hp.validate();
  if (rounds < 0) throw InputError("config: run.rounds must be >= 0");
  if (local_epochs < 1) throw InputError("config: run.local_epochs must be >= 1");
  if (repeats < 1) throw InputError("config: run.repeats must be >= 1");
  if (!seeds.empty() && static_cast<std::int32_t>(seeds.size()) != repeats)
    throw InputError("config: run.seeds must list exactly run.repeats seeds");
  if (!(participation > 0.0 && participation <= 1.0)) throw InputError("config: run.participation must lie in (0, 1]");
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  const auto& g = a.generator;
  const auto& h = b.generator;
  return a.source == b.source && a.data_path == b.data_path && a.edge_noise == b.edge_noise &&
         g.num_nodes == h.num_nodes && g.num_classes == h.num_classes && g.target_homophily == h.target_homophily &&
         g.mean_degree == h.mean_degree && g.feature_dim == h.feature_dim &&
         same_matrix(g.class_mixing, h.class_mixing) && g.feature_separation == h.feature_separation &&
         g.seed == h.seed && a.gen_clients == b.gen_clients && a.conflict_strength == b.conflict_strength &&
         a.partition == b.partition && a.partition_clients == b.partition_clients && a.min_size == b.min_size &&
         a.hp == b.hp && a.method == b.method && a.scope == b.scope && a.rounds == b.rounds &&
         a.local_epochs == b.local_epochs && a.participation == b.participation && a.metric == b.metric &&
         a.repeats == b.repeats && a.seed == b.seed && a.seeds == b.seeds;
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto b = [](bool v) { return v ? "true" : "false"; };
  o << "[data]\n"
    << "source = " << c.source << "\n"
    << "path = " << c.data_path << "\n"
    << "edge_noise = " << format_double(c.edge_noise) << "\n\n";
  o << "[generator]\n"
    << "nodes = " << c.generator.num_nodes << "\n"
    << "classes = " << c.generator.num_classes << "\n"
    << "homophily = " << format_double(c.generator.target_homophily) << "\n"
    << "degree = " << format_double(c.generator.mean_degree) << "\n"
    << "feature_dim = " << c.generator.feature_dim << "\n"
    << "separation = " << format_double(c.generator.feature_separation) << "\n"
    << "class_mixing = " << render_matrix(c.generator.class_mixing) << "\n"
    << "base_seed = " << c.generator.seed << "\n"
    << "clients = " << c.gen_clients << "\n"
    << "conflict = " << format_double(c.conflict_strength) << "\n\n";
  o << "[partition]\n"
    << "method = " << c.partition << "\n"
    << "clients = " << c.partition_clients << "\n"
    << "min_size = " << c.min_size << "\n\n";
  o << "[model]\n"
    << "alpha = " << format_double(c.hp.alpha) << "\n"
    << "lambda = " << format_double(c.hp.lambda_smooth) << "\n"
    << "mu = " << format_double(c.hp.mu_smooth) << "\n"
    << "k = " << c.hp.k_neighbors << "\n"
    << "heads = " << c.hp.num_heads << "\n"
    << "layers = " << c.hp.num_layers << "\n"
    << "hidden_dim = " << c.hp.hidden_dim << "\n"
    << "learning_rate = " << format_double(c.hp.learning_rate) << "\n"
    << "sparsifier = " << to_string(c.hp.sparsifier) << "\n"
    << "binary_latent = " << b(c.hp.binary_latent) << "\n"
    << "metric = " << to_string(c.hp.metric) << "\n"
    << "share_f0 = " << b(c.hp.share_f0) << "\n"
    << "architecture = " << to_string(c.hp.architecture) << "\n\n";
  o << "[run]\n"
    << "method = " << to_string(c.method) << "\n"
    << "scope = " << to_string(c.scope) << "\n"
    << "rounds = " << c.rounds << "\n"
    << "local_epochs = " << c.local_epochs << "\n"
    << "participation = " << format_double(c.participation) << "\n"
    << "metric = " << to_string(c.metric) << "\n"
    << "repeats = " << c.repeats << "\n"
    << "seed = " << c.seed << "\n"
    << "seeds = " << render_seeds(c.seeds) << "\n";
  return o.str();
}

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw InputError("config: key '" + section + "' outside of a section");
    for (const auto& [key, node] : body) {
      const std::string v = trim(node.data());
      const std::string id = section + "." + key;
      if (section == "data") {
        if (key == "source") c.source = v;
        else if (key == "path") c.data_path = v;
        else if (key == "edge_noise") c.edge_noise = parse_real(id, v);
        else throw InputError("config: unknown key " + id);
      } else if (section == "generator") {
        auto& g = c.generator;
        if (key == "nodes") g.num_nodes = parse_int<std::int32_t>(id, v);
        else if (key == "classes") g.num_classes = parse_int<std::int32_t>(id, v);
        else if (key == "homophily") g.target_homophily = parse_real(id, v);
        else if (key == "degree") g.mean_degree = parse_real(id, v);
        else if (key == "feature_dim") g.feature_dim = parse_int<std::int32_t>(id, v);
        else if (key == "separation") g.feature_separation = parse_real(id, v);
        else if (key == "class_mixing") g.class_mixing = parse_matrix(id, v);
        else if (key == "base_seed") g.seed = parse_int<std::uint64_t>(id, v);
        else if (key == "clients") c.gen_clients = parse_int<std::int32_t>(id, v);
        else if (key == "conflict") c.conflict_strength = parse_real(id, v);
        else throw InputError("config: unknown key " + id);
      } else if (section == "partition") {
        if (key == "method") c.partition = v;
        else if (key == "clients") c.partition_clients = parse_int<std::int32_t>(id, v);
        else if (key == "min_size") c.min_size = parse_int<std::int32_t>(id, v);
        else throw InputError("config: unknown key " + id);
      } else if (section == "model") {
        auto& h = c.hp;
        if (key == "alpha") h.alpha = parse_real(id, v);
        else if (key == "lambda") h.lambda_smooth = parse_real(id, v);
        else if (key == "mu") h.mu_smooth = parse_real(id, v);
        else if (key == "k") h.k_neighbors = parse_int<std::int32_t>(id, v);
        else if (key == "heads") h.num_heads = parse_int<std::int32_t>(id, v);
        else if (key == "layers") h.num_layers = parse_int<std::int32_t>(id, v);
        else if (key == "hidden_dim") h.hidden_dim = parse_int<std::int32_t>(id, v);
        else if (key == "learning_rate") h.learning_rate = parse_real(id, v);
        else if (key == "sparsifier") h.sparsifier = parse_sparsifier(v);
        else if (key == "binary_latent") h.binary_latent = parse_bool(id, v);
        else if (key == "metric") h.metric = parse_metric(v);
        else if (key == "share_f0") h.share_f0 = parse_bool(id, v);
        else if (key == "architecture") h.architecture = parse_architecture(v);
        else throw InputError("config: unknown key " + id);
      } else if (section == "run") {
        if (key == "method") c.method = parse_method(v);
        else if (key == "scope") c.scope = parse_scope(v);
        else if (key == "rounds") c.rounds = parse_int<std::int32_t>(id, v);
        else if (key == "local_epochs") c.local_epochs = parse_int<std::int32_t>(id, v);
        else if (key == "participation") c.participation = parse_real(id, v);
        else if (key == "metric") c.metric = parse_eval_metric(v);
        else if (key == "repeats") c.repeats = parse_int<std::int32_t>(id, v);
        else if (key == "seed") c.seed = parse_int<std::uint64_t>(id, v);
        else if (key == "seeds") c.seeds = parse_seeds(v);
        else throw InputError("config: unknown key " + id);
      } else {
        throw InputError("config: unknown section [" + section + "]");
      }
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InputError("cannot open config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::uint64_t> repeat_seeds(const ExperimentConfig& cfg) {
  if (!cfg.seeds.empty()) return cfg.seeds;
  std::vector<std::uint64_t> out;
  for (std::int32_t r = 0; r < cfg.repeats; ++r) out.push_back(mix_seed(cfg.seed, static_cast<std::uint64_t>(r)));
  return out;
}

std::vector<ClientDataset> prepare_datasets(const ExperimentConfig& cfg, std::uint64_t seed) {
  std::vector<Graph> graphs;
  std::optional<Graph> whole;
  if (cfg.source == "generated") {
    auto gen = cfg.generator;
    gen.seed = mix_seed(gen.seed, seed);
    if (cfg.partition == "none") graphs = generate_conflicting_clients(gen, cfg.gen_clients, cfg.conflict_strength);
    else whole = generate_graph(gen);
  } else {
    const std::filesystem::path p(cfg.data_path);
    if (std::filesystem::exists(p / "meta.json")) whole = load_graph_bundle(p);
    else graphs = load_client_bundles(p);
  }

  std::vector<ClientDataset> data;
  if (whole) {
    PartitionAssignment pa;
    if (cfg.partition == "louvain") {
      pa = merge_small_communities(*whole, louvain(*whole, mix_seed(seed, 1)), cfg.min_size, mix_seed(seed, 2));
    } else if (cfg.partition == "balanced") {
      pa = balanced_partition(*whole, cfg.partition_clients, mix_seed(seed, 1));
    } else {
      pa.num_clients = 1;
      pa.client_of.assign(static_cast<std::size_t>(whole->num_nodes()), 0);
    }
    data = make_federated_dataset(*whole, pa, mix_seed(seed, 3));
  } else {
    data = split_clients(std::move(graphs), mix_seed(seed, 3));
  }
  if (cfg.edge_noise > 0.0) {
    for (std::size_t i = 0; i < data.size(); ++i)
      data[i].graph = flip_edge_noise(data[i].graph, cfg.edge_noise, mix_seed(seed, 0xF11D + i));
  }
  return data;
}

namespace {

template <typename F>
auto stage(const char* name, std::int32_t repeat, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("repeat ") + std::to_string(repeat) + ", stage " + name + ": " + e.what());
  }
}

}  // namespace

RepeatOutcome run_repeat(const ExperimentConfig& cfg, std::int32_t repeat, const std::filesystem::path& dir) {
  const auto seeds = repeat_seeds(cfg);
  if (repeat < 0 || repeat >= static_cast<std::int32_t>(seeds.size()))
    throw UsageError("run_repeat: repeat index out of range");
  RepeatOutcome out;
  out.repeat = repeat;
  out.seed = seeds[static_cast<std::size_t>(repeat)];
  auto data = stage("data", repeat, [&] { return prepare_datasets(cfg, out.seed); });
  RunOptions opts;
  opts.scope = cfg.scope;
  opts.rounds = cfg.rounds;
  opts.local_epochs = cfg.local_epochs;
  opts.seed = out.seed;
  opts.participation = cfg.participation;
  opts.metric = cfg.metric;
  out.run = stage("train", repeat, [&] { return train_method(cfg.method, data, cfg.hp, opts); });
  out.summary = summarize(out.run.rounds);
  if (!dir.empty()) {
    stage("write", repeat, [&] {
      std::filesystem::create_directories(dir);
      write_metrics_csv(dir / "metrics.csv", out.run.rounds);
      write_curves_csv(dir / "curves.csv", out.run.rounds);
      write_timing_csv(dir / "timing.csv", out.run.rounds);
      write_summary_json(dir / "summary.json", out.summary, cfg.method, method_scope(cfg.method, cfg.scope),
                         cfg.metric);
      write_checkpoints(dir / "checkpoints", out.run.clients, method_hyperparams(cfg.method, cfg.hp));
      return 0;
    });
  }
  return out;
}

std::filesystem::path make_run_dir(const std::filesystem::path& out_root, const std::string& prefix) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream name;
  name << prefix << '-' << std::put_time(&tm, "%Y%m%d-%H%M%S");
  auto dir = out_root / name.str();
  for (int i = 1; std::filesystem::exists(dir); ++i) dir = out_root / (name.str() + "-" + std::to_string(i));
  std::filesystem::create_directories(dir);
  return dir;
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_root) {
  cfg.validate();
  ExperimentSummary s;
  s.run_dir = make_run_dir(out_root, "run");
  {
    std::ofstream out(s.run_dir / "config.ini");
    out << render_config(cfg);
  }
  s.seeds = repeat_seeds(cfg);
  for (std::int32_t r = 0; r < cfg.repeats; ++r) {
    auto o = run_repeat(cfg, r, s.run_dir / ("repeat_" + std::to_string(r)));
    s.final_test.push_back(o.summary.final_test);
    s.best_val_test.push_back(o.summary.best_val_test);
  }
  s.mean_final_test = mean(s.final_test);
  s.std_final_test = sample_std(s.final_test);
  s.mean_best_val_test = mean(s.best_val_test);
  s.std_best_val_test = sample_std(s.best_val_test);

  nlohmann::json j = {
      {"method", to_string(cfg.method)},
      {"scope", to_string(method_scope(cfg.method, cfg.scope))},
      {"metric", to_string(cfg.metric)},
      {"repeats", cfg.repeats},
      {"seeds", s.seeds},
      {"final_test", s.final_test},
      {"best_val_test", s.best_val_test},
      {"mean_final_test", s.mean_final_test},
      {"std_final_test", s.std_final_test},
      {"mean_best_val_test", s.mean_best_val_test},
      {"std_best_val_test", s.std_best_val_test},
  };
  std::ofstream out(s.run_dir / "summary.json");
  out << j.dump(2) << '\n';
  return s;
}

const std::vector<std::string>& ablation_parameters() {
  static const std::vector<std::string> names{"alpha", "lambda", "mu", "k", "heads", "scope", "sparsifier"};
  return names;
}

ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& name, const std::string& value) {
  ExperimentConfig c = cfg;
  if (name == "alpha") c.hp.alpha = parse_real(name, value);
  else if (name == "lambda") c.hp.lambda_smooth = parse_real(name, value);
  else if (name == "mu") c.hp.mu_smooth = parse_real(name, value);
  else if (name == "k") c.hp.k_neighbors = parse_int<std::int32_t>(name, value);
  else if (name == "heads") c.hp.num_heads = parse_int<std::int32_t>(name, value);
  else if (name == "scope") c.scope = parse_scope(trim(value));
  else if (name == "sparsifier") c.hp.sparsifier = parse_sparsifier(trim(value));
  else {
    std::string valid;
    for (const auto& n : ablation_parameters()) valid += (valid.empty() ? "" : ", ") + n;
    throw UsageError("ablate: unknown parameter '" + name + "'; valid names: " + valid);
  }
  return c;
}

std::vector<AblationRow> ablate(const ExperimentConfig& cfg, const std::string& parameter,
                                const std::vector<std::string>& values, const std::filesystem::path& out_root) {
  if (std::find(ablation_parameters().begin(), ablation_parameters().end(), parameter) == ablation_parameters().end())
    with_parameter(cfg, parameter, "");  // throws the usage error with the valid names
  if (values.empty()) throw UsageError("ablate: empty value list for '" + parameter + "'");
  std::vector<ExperimentConfig> configs;
  for (const auto& v : values) {
    configs.push_back(with_parameter(cfg, parameter, v));
    configs.back().validate();
  }
  const auto dir = make_run_dir(out_root, "ablate-" + parameter);
  std::vector<AblationRow> rows;
  std::ofstream csv(dir / "ablation.csv");
  csv << "parameter,value,repeats,mean_final_test,std_final_test,mean_best_val_test,std_best_val_test,run_dir\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    AblationRow row{values[i], run_experiment(configs[i], dir)};
    csv << parameter << ',' << values[i] << ',' << configs[i].repeats << ',' << format_double(row.summary.mean_final_test)
        << ',' << format_double(row.summary.std_final_test) << ',' << format_double(row.summary.mean_best_val_test)
        << ',' << format_double(row.summary.std_best_val_test) << ','
        << std::filesystem::relative(row.summary.run_dir, dir).string() << '\n';
    csv.flush();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace fedgraph
