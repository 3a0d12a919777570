#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fedgraph/checkpoint.hpp"
#include "fedgraph/errors.hpp"
#include "fedgraph/experiment.hpp"
#include "fedgraph/federated.hpp"
#include "fedgraph/graph_io.hpp"
#include "fedgraph/metrics.hpp"
#include "fedgraph/partition.hpp"
#include "fedgraph/selftest.hpp"
#include "fedgraph/synthgen.hpp"

namespace fs = std::filesystem;
using namespace fedgraph;
using json = nlohmann::json;

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw InputError(file.string() + ": cannot open for writing");
  out << text;
  if (!out) throw InputError(file.string() + ": write failed");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

// ---- gen-data ---------------------------------------------------------------

struct GenArgs {
  GeneratorConfig gen;
  std::int32_t clients = 4;
  double conflict = 1.0;
  std::string out;
};

int cmd_gen_data(const GenArgs& a) {
  a.gen.validate();
  if (a.clients < 1) throw UsageError("gen-data: --clients must be positive");
  const fs::path out(a.out);
  fs::create_directories(out);
  std::vector<Graph> graphs;
  std::vector<Matrix> targets;
  if (a.clients == 1) {
    graphs.push_back(generate_graph(a.gen));
    targets.push_back(a.gen.class_mixing.size() ? a.gen.class_mixing
                                                : default_mixing(a.gen.num_classes, a.gen.target_homophily));
  } else {
    graphs = generate_conflicting_clients(a.gen, a.clients, a.conflict);
    targets = conflicting_mixing_matrices(a.gen, a.clients, a.conflict);
  }
  json manifest = {{"nodes", a.gen.num_nodes},
                   {"classes", a.gen.num_classes},
                   {"target_homophily", a.gen.target_homophily},
                   {"degree", a.gen.mean_degree},
                   {"feature_dim", a.gen.feature_dim},
                   {"separation", a.gen.feature_separation},
                   {"conflict", a.conflict},
                   {"seed", a.gen.seed},
                   {"clients", json::array()}};
  std::vector<Matrix> realized;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto name = "client_" + std::to_string(i);
    save_graph_bundle(graphs[i], out / name);
    realized.push_back(neighbor_label_distribution(graphs[i]));
    const double h = edge_homophily(graphs[i]);
    manifest["clients"].push_back({{"client", i},
                                   {"path", name},
                                   {"num_nodes", graphs[i].num_nodes()},
                                   {"num_edges", graphs[i].num_edges()},
                                   {"homophily", h},
                                   {"target_mixing", matrix_json(targets[i])},
                                   {"realized_mixing", matrix_json(realized.back())}});
    std::cerr << name << ": " << graphs[i].num_nodes() << " nodes, " << graphs[i].num_edges()
              << " edges, homophily " << format_double(h) << '\n';
  }
  manifest["divergence"] = matrix_json(client_divergence(realized));
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  std::cerr << "wrote " << graphs.size() << " bundles to " << out.string() << '\n';
  return 0;
}

// ---- partition --------------------------------------------------------------

struct PartitionArgs {
  std::string input;
  std::string method = "louvain";
  std::int32_t clients = 4;
  std::int32_t min_size = 50;
  std::uint64_t seed = 0;
  std::string out;
  std::string bundles;
};

int cmd_partition(const PartitionArgs& a) {
  const Graph g = load_graph_bundle(a.input);
  PartitionAssignment pa;
  if (a.method == "louvain") {
    pa = merge_small_communities(g, louvain(g, a.seed), a.min_size, mix_seed(a.seed, 1));
  } else if (a.method == "balanced") {
    pa = balanced_partition(g, a.clients, a.seed);
  } else {
    throw UsageError("partition: --method must be louvain or balanced");
  }
  save_partition_csv(pa, a.out);
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(pa.num_clients), 0);
  for (auto c : pa.client_of) ++sizes[static_cast<std::size_t>(c)];
  std::cerr << pa.num_clients << " clients, modularity " << format_double(modularity(g, pa)) << ", cut "
            << cut_size(g, pa) << ", sizes";
  for (auto s : sizes) std::cerr << ' ' << s;
  std::cerr << '\n';
  if (!a.bundles.empty()) {
    const auto data = make_federated_dataset(g, pa, mix_seed(a.seed, 3));
    for (std::size_t i = 0; i < data.size(); ++i)
      save_graph_bundle(data[i].graph, fs::path(a.bundles) / ("client_" + std::to_string(i)));
    std::cerr << "wrote " << data.size() << " client bundles to " << a.bundles << '\n';
  }
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::string method, scope, metric, sparsifier, partition;
  std::int32_t rounds = 0, k = 0, heads = 0, layers = 0, hidden = 0, local_epochs = 0, clients = 0;
  double alpha = 0, lambda = 0, mu = 0, lr = 0, participation = 0, edge_noise = 0;
  std::uint64_t seed = 0;
};

ExperimentConfig base_config(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : load_config(path);
}

int cmd_train(const TrainArgs& a, const CLI::App& sub) {
  auto cfg = base_config(a.config);
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  if (given("--data")) {
    cfg.source = "files";
    cfg.data_path = fs::absolute(a.data).string();
  }
  if (given("--method")) cfg.method = parse_method(a.method);
  if (given("--scope")) cfg.scope = parse_scope(a.scope);
  if (given("--metric")) cfg.metric = parse_eval_metric(a.metric);
  if (given("--sparsifier")) cfg.hp.sparsifier = parse_sparsifier(a.sparsifier);
  if (given("--partition")) cfg.partition = a.partition;
  if (given("--clients")) cfg.partition_clients = a.clients;
  if (given("--rounds")) cfg.rounds = a.rounds;
  if (given("--k")) cfg.hp.k_neighbors = a.k;
  if (given("--heads")) cfg.hp.num_heads = a.heads;
  if (given("--layers")) cfg.hp.num_layers = a.layers;
  if (given("--hidden")) cfg.hp.hidden_dim = a.hidden;
  if (given("--local-epochs")) cfg.local_epochs = a.local_epochs;
  if (given("--alpha")) cfg.hp.alpha = a.alpha;
  if (given("--lambda")) cfg.hp.lambda_smooth = a.lambda;
  if (given("--mu")) cfg.hp.mu_smooth = a.mu;
  if (given("--lr")) cfg.hp.learning_rate = a.lr;
  if (given("--participation")) cfg.participation = a.participation;
  if (given("--edge-noise")) cfg.edge_noise = a.edge_noise;
  if (given("--seed") || cfg.seeds.empty()) {
    cfg.seeds = {given("--seed") ? a.seed : repeat_seeds(cfg).front()};
  } else {
    cfg.seeds = {cfg.seeds.front()};
  }
  cfg.repeats = 1;
  cfg.validate();

  const fs::path out(a.out);
  fs::create_directories(out);
  write_text(out / "config.ini", render_config(cfg));
  std::cerr << "training " << to_string(cfg.method) << " (scope " << to_string(method_scope(cfg.method, cfg.scope))
            << ", " << cfg.rounds << " rounds, seed " << cfg.seeds.front() << ")\n";
  const auto o = run_repeat(cfg, 0, out);
  std::cerr << "final test " << format_double(o.summary.final_test) << ", best-val round " << o.summary.best_val_round
            << " test " << format_double(o.summary.best_val_test) << "\nwrote " << out.string() << '\n';
  return 0;
}

// ---- evaluate ---------------------------------------------------------------

struct EvalArgs {
  std::string checkpoints;
  std::string data;
  std::string out;
  std::string metric = "accuracy";
  bool lia = false;
  std::size_t lia_pairs = 200;
  std::optional<std::uint64_t> seed;
};

int cmd_evaluate(const EvalArgs& a) {
  const fs::path ckdir(a.checkpoints);
  // A run directory written by `train` echoes its config next to checkpoints/.
  const auto echoed = ckdir.parent_path() / "config.ini";
  ExperimentConfig cfg = fs::exists(echoed) ? load_config(echoed) : ExperimentConfig{};
  cfg.source = "files";
  cfg.data_path = a.data;
  const std::uint64_t seed = a.seed ? *a.seed : repeat_seeds(cfg).front();
  const auto data = prepare_datasets(cfg, seed);

  std::vector<ClientState> clients;
  std::optional<Hyperparams> hp;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto dir = ckdir / ("client_" + std::to_string(i));
    if (!fs::exists(dir)) throw InputError(dir.string() + ": missing checkpoint for client " + std::to_string(i));
    auto ck = load_checkpoint(dir);
    if (hp && !(*hp == ck.hp)) throw InputError("evaluate: clients were trained with different hyperparameters");
    hp = ck.hp;
    clients.push_back(make_client(static_cast<std::int32_t>(i), data[i].graph, data[i].split, std::move(ck.params),
                                  ck.hp, mix_seed(seed, 0x2000 + i)));
  }
  EvalOptions opts;
  opts.metric = parse_eval_metric(a.metric);
  opts.lia = a.lia;
  opts.lia_pairs = a.lia_pairs;
  opts.seed = seed;
  const auto rep = evaluate_clients(clients, *hp, opts);
  write_text(a.out, eval_report_json(rep) + "\n");
  std::cerr << clients.size() << " clients, mean test " << to_string(opts.metric) << ' '
            << format_double(rep.mean_test);
  if (rep.mean_lia) std::cerr << ", mean LIA balanced accuracy " << format_double(*rep.mean_lia);
  std::cerr << "\nwrote " << a.out << '\n';
  return 0;
}

// ---- experiment / ablate ----------------------------------------------------

int cmd_experiment(const std::string& config, const std::string& out) {
  const auto cfg = base_config(config);
  cfg.validate();
  const auto s = run_experiment(cfg, out);
  std::cerr << cfg.repeats << " repeats, final test " << format_double(s.mean_final_test) << " +- "
            << format_double(s.std_final_test) << "\nwrote " << s.run_dir.string() << '\n';
  return 0;
}

int cmd_ablate(const std::string& config, const std::string& param, const std::string& values,
               const std::string& out) {
  const auto cfg = base_config(config);
  const auto rows = ablate(cfg, param, split_list(values), out);
  for (const auto& r : rows)
    std::cerr << param << '=' << r.value << ": " << format_double(r.summary.mean_final_test) << " +- "
              << format_double(r.summary.std_final_test) << '\n';
  if (!rows.empty()) std::cerr << "wrote " << rows.front().summary.run_dir.parent_path().string() << "/ablation.csv\n";
  return 0;
}

// ---- selftest ---------------------------------------------------------------

int cmd_selftest(std::uint64_t seed, double tol, const std::string& out) {
  const auto cases = run_self_test(seed, tol);
  write_text(out, self_test_json(cases) + "\n");
  bool ok = true;
  for (const auto& c : cases) {
    std::cerr << (c.report.passed ? "PASS " : "FAIL ") << c.name << " max rel error "
              << format_double(c.report.max_rel_error()) << '\n';
    ok = ok && c.report.passed;
  }
  std::cerr << "wrote " << out << '\n';
  return ok ? 0 : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated graph learning with shared structure learners"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "Generate conflicting synthetic client graphs");
  g->add_option("--nodes", gen.gen.num_nodes, "Nodes per client")->capture_default_str();
  g->add_option("--classes", gen.gen.num_classes, "Number of classes")->capture_default_str();
  g->add_option("--homophily", gen.gen.target_homophily, "Target edge homophily")->capture_default_str();
  g->add_option("--degree", gen.gen.mean_degree, "Mean degree")->capture_default_str();
  g->add_option("--feature-dim", gen.gen.feature_dim, "Feature dimension")->capture_default_str();
  g->add_option("--separation", gen.gen.feature_separation, "Distance between class means")->capture_default_str();
  g->add_option("--clients", gen.clients, "Number of clients")->capture_default_str();
  g->add_option("--conflict", gen.conflict, "Conflict strength in [0, 1]")->capture_default_str();
  g->add_option("--seed", gen.gen.seed, "Seed")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();

  PartitionArgs part;
  auto* p = app.add_subcommand("partition", "Split one graph bundle into clients");
  p->add_option("--input", part.input, "Graph bundle directory")->required();
  p->add_option("--method", part.method, "louvain or balanced")
      ->check(CLI::IsMember({"louvain", "balanced"}))
      ->capture_default_str();
  p->add_option("--clients", part.clients, "Clients for balanced partitioning")->capture_default_str();
  p->add_option("--min-size", part.min_size, "Smallest Louvain community kept")->capture_default_str();
  p->add_option("--seed", part.seed, "Seed")->capture_default_str();
  p->add_option("--out", part.out, "Output CSV (node_id,client_id)")->required();
  p->add_option("--bundles", part.bundles, "Also write client_<i> bundles here");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one method and write metrics and checkpoints");
  t->add_option("--config", tr.config, "INI config to start from");
  t->add_option("--data", tr.data, "Client bundles directory or one graph bundle");
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--method", tr.method, "fedhero, fedavg or local")
      ->check(CLI::IsMember({"fedhero", "fedavg", "local"}));
  t->add_option("--scope", tr.scope, "global, all, task or none")
      ->check(CLI::IsMember({"global", "all", "task", "none"}));
  t->add_option("--metric", tr.metric, "accuracy or auc")->check(CLI::IsMember({"accuracy", "auc"}));
  t->add_option("--sparsifier", tr.sparsifier, "topk or bernoulli");
  t->add_option("--partition", tr.partition, "none, louvain or balanced (single bundle input)");
  t->add_option("--clients", tr.clients, "Clients for balanced partitioning");
  t->add_option("--rounds", tr.rounds, "Communication rounds");
  t->add_option("--local-epochs", tr.local_epochs, "Local steps per round");
  t->add_option("--alpha", tr.alpha, "Local-channel weight");
  t->add_option("--k", tr.k, "Latent neighbours per node");
  t->add_option("--heads", tr.heads, "Metric heads");
  t->add_option("--layers", tr.layers, "Convolution layers");
  t->add_option("--hidden", tr.hidden, "Hidden width");
  t->add_option("--lambda", tr.lambda, "Feature smoothness weight");
  t->add_option("--mu", tr.mu, "Latent weight mass penalty");
  t->add_option("--lr", tr.lr, "Adam learning rate");
  t->add_option("--participation", tr.participation, "Fraction of clients aggregated per round");
  t->add_option("--edge-noise", tr.edge_noise, "Edge flip probability applied to every client");
  t->add_option("--seed", tr.seed, "Seed");

  EvalArgs ev;
  auto* e = app.add_subcommand("evaluate", "Evaluate saved client checkpoints");
  e->add_option("--checkpoints", ev.checkpoints, "checkpoints/ directory of a run")->required();
  e->add_option("--data", ev.data, "Client bundles the run was trained on")->required();
  e->add_option("--out", ev.out, "Report JSON")->required();
  e->add_flag("--lia", ev.lia, "Run the link-inference attack on the readout");
  e->add_option("--lia-pairs", ev.lia_pairs, "Edges and non-edges sampled per client")->capture_default_str();
  e->add_option("--metric", ev.metric, "accuracy or auc")->check(CLI::IsMember({"accuracy", "auc"}));
  e->add_option("--seed", ev.seed, "Seed of the run (default: from the echoed config)");

  std::string exp_config, exp_out = "runs";
  auto* x = app.add_subcommand("experiment", "Run all repeats of a config");
  x->add_option("--config", exp_config, "INI config");
  x->add_option("--out", exp_out, "Root for the timestamped run directory")->capture_default_str();

  std::string ab_config, ab_param, ab_values, ab_out = "runs";
  auto* ab = app.add_subcommand("ablate", "Sweep one parameter");
  ab->add_option("--config", ab_config, "INI config");
  ab->add_option("--param", ab_param, "alpha, lambda, mu, k, heads, scope or sparsifier")->required();
  ab->add_option("--values", ab_values, "Comma-separated values")->required();
  ab->add_option("--out", ab_out, "Root for the ablation directory")->capture_default_str();

  std::uint64_t st_seed = 0;
  double st_tol = 1e-4;
  std::string st_out = "selftest.json";
  auto* s = app.add_subcommand("selftest", "Gradient check of the full model");
  s->add_option("--seed", st_seed, "Seed")->capture_default_str();
  s->add_option("--tol", st_tol, "Relative error tolerance")->capture_default_str();
  s->add_option("--out", st_out, "Report JSON")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err, std::cerr, std::cerr) == 0 ? 0 : kUsage;
  }

  try {
    if (*g) return cmd_gen_data(gen);
    if (*p) return cmd_partition(part);
    if (*t) return cmd_train(tr, *t);
    if (*e) return cmd_evaluate(ev);
    if (*x) return cmd_experiment(exp_config, exp_out);
    if (*ab) return cmd_ablate(ab_config, ab_param, ab_values, ab_out);
    if (*s) return cmd_selftest(st_seed, st_tol, st_out);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << '\n';
    return kUsage;
  } catch (const Error& err) {
    std::cerr << to_string(err.kind()) << " error: " << err.what() << '\n';
    return kRuntime;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
