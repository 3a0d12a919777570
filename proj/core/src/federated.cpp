#include "fedgraph/federated.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "fedgraph/checkpoint.hpp"
#include "fedgraph/errors.hpp"
#include "fedgraph/graph_io.hpp"
#include "fedgraph/metrics.hpp"

namespace fedgraph {

const char* to_string(AggregationScope s) noexcept {
  switch (s) {
    case AggregationScope::GlobalChannelOnly: return "global";
    case AggregationScope::All: return "all";
    case AggregationScope::TaskOnly: return "task";
    case AggregationScope::None: return "none";
  }
  return "?";
}

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::FedHERO: return "fedhero";
    case Method::FedAvg: return "fedavg";
    case Method::Local: return "local";
  }
  return "?";
}

const char* to_string(EvalMetric m) noexcept { return m == EvalMetric::Accuracy ? "accuracy" : "auc"; }

AggregationScope parse_scope(const std::string& s) {
  if (s == "global") return AggregationScope::GlobalChannelOnly;
  if (s == "all") return AggregationScope::All;
  if (s == "task") return AggregationScope::TaskOnly;
  if (s == "none") return AggregationScope::None;
  throw InputError("unknown scope '" + s + "' (expected global, all, task or none)");
}

Method parse_method(const std::string& s) {
  if (s == "fedhero") return Method::FedHERO;
  if (s == "fedavg") return Method::FedAvg;
  if (s == "local") return Method::Local;
  throw InputError("unknown method '" + s + "' (expected fedhero, fedavg or local)");
}

EvalMetric parse_eval_metric(const std::string& s) {
  if (s == "accuracy") return EvalMetric::Accuracy;
  if (s == "auc") return EvalMetric::Auc;
  throw InputError("unknown metric '" + s + "' (expected accuracy or auc)");
}

bool in_scope(const ParamBlock& block, AggregationScope scope) {
  switch (scope) {
    case AggregationScope::GlobalChannelOnly: return block.channel == Channel::Global;
    case AggregationScope::All: return true;
    case AggregationScope::TaskOnly: return block.name != "sl_gnn" && block.name != "sl_heads";
    case AggregationScope::None: return false;
  }
  return false;
}

std::vector<ParamBlock> aggregate(std::span<const ClientState* const> clients, AggregationScope scope) {
  if (clients.empty()) throw ProtocolError("aggregate: no clients");
  const auto& ref = clients.front()->params;
  double total = 0.0;
  for (const auto* c : clients) {
    if (!c->params.same_structure(ref))
      throw ProtocolError("aggregate: client " + std::to_string(c->client_id) +
                          " has parameter blocks that differ from client " +
                          std::to_string(clients.front()->client_id));
    total += static_cast<double>(c->num_nodes());
  }
  if (!(total > 0.0)) throw ProtocolError("aggregate: clients hold no nodes");
  std::vector<ParamBlock> out;
  for (std::size_t b = 0; b < ref.blocks.size(); ++b) {
    if (!in_scope(ref.blocks[b], scope)) continue;
    ParamBlock avg{ref.blocks[b].name, ref.blocks[b].channel,
                   Matrix::Zero(ref.blocks[b].value.rows(), ref.blocks[b].value.cols())};
    for (const auto* c : clients) avg.value += (static_cast<double>(c->num_nodes()) / total) * c->params.blocks[b].value;
    out.push_back(std::move(avg));
  }
  return out;
}

std::vector<ParamBlock> aggregate(std::span<const ClientState> clients, AggregationScope scope) {
  std::vector<const ClientState*> ptrs;
  for (const auto& c : clients) ptrs.push_back(&c);
  return aggregate(std::span<const ClientState* const>(ptrs), scope);
}

void broadcast(std::span<ClientState> clients, const std::vector<ParamBlock>& shared) {
  for (auto& c : clients) {
    for (const auto& s : shared) {
      auto& b = c.params.block(s.name);
      if (b.value.rows() != s.value.rows() || b.value.cols() != s.value.cols())
        throw ProtocolError("broadcast: block '" + s.name + "' has a different shape on client " +
                            std::to_string(c.client_id));
      b.value = s.value;
    }
  }
}

std::vector<ClientState> init_clients(const std::vector<ClientDataset>& data, const Hyperparams& hp,
                                      std::uint64_t seed) {
  if (data.empty()) throw InputError("init_clients: no client datasets");
  const auto d = data.front().graph.feature_dim();
  std::int32_t classes = 0;
  for (const auto& ds : data) {
    if (ds.graph.feature_dim() != d) throw InputError("init_clients: clients disagree on feature dimension");
    classes = std::max(classes, ds.graph.num_classes());
  }
  const auto params = init_params(hp, d, classes, mix_seed(seed, 0x1417));
  std::vector<ClientState> clients;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Graph g = data[i].graph;
    if (g.num_classes() != classes) g = with_labels(g, g.labels(), classes);
    clients.push_back(make_client(static_cast<std::int32_t>(i), std::move(g), data[i].split, params, hp,
                                  mix_seed(seed, 0x2000 + i)));
  }
  return clients;
}

namespace {

double split_metric(const Matrix& logits, const std::vector<std::int32_t>& labels, const Mask& mask,
                    EvalMetric metric) {
  if (metric == EvalMetric::Accuracy) return accuracy(logits, labels, mask);
  if (logits.cols() != 2) throw InputError("auc metric requires exactly two classes");
  std::vector<double> scores(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) scores[static_cast<std::size_t>(i)] = logits(i, 1) - logits(i, 0);
  return binary_auc(scores, labels, mask);
}

ClientRoundMetrics mean_of(const std::vector<ClientRoundMetrics>& xs) {
  ClientRoundMetrics m;
  m.client = -1;
  const double n = static_cast<double>(xs.size());
  for (const auto& x : xs) {
    m.train += x.train / n;
    m.val += x.val / n;
    m.test += x.test / n;
    m.loss_ce += x.loss_ce / n;
    m.loss_smooth += x.loss_smooth / n;
    m.loss_total += x.loss_total / n;
  }
  return m;
}

}  // namespace

ClientEval evaluate_client(const ClientState& client, const Hyperparams& hp, EvalMetric metric) {
  const auto pred = predict(client, hp);
  ClientEval e;
  e.client = client.client_id;
  e.train = split_metric(pred.logits, client.context.labels, client.split.train, metric);
  e.val = split_metric(pred.logits, client.context.labels, client.split.val, metric);
  e.test = split_metric(pred.logits, client.context.labels, client.split.test, metric);
  return e;
}

RunResult run_rounds(std::vector<ClientState> clients, const Hyperparams& hp, const RunOptions& opts) {
  if (clients.empty()) throw InputError("run_rounds: no clients");
  if (opts.rounds < 0 || opts.local_epochs < 1) throw InputError("run_rounds: rounds >= 0 and local_epochs >= 1 required");
  if (!(opts.participation > 0.0 && opts.participation <= 1.0))
    throw InputError("run_rounds: participation must lie in (0, 1]");
  RunResult result;
  Rng sampler(mix_seed(opts.seed, 0x5e1ec7));
  const auto m = clients.size();
  const auto participants =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opts.participation * static_cast<double>(m) - 1e-9)));

  for (std::int32_t r = 1; r <= opts.rounds; ++r) {
    const auto start = std::chrono::steady_clock::now();
    RoundMetrics rm;
    rm.round = r;
    std::vector<StepMetrics> steps(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::int32_t e = 0; e < opts.local_epochs; ++e) steps[i] = train_step(clients[i], hp);
    }
    if (opts.scope != AggregationScope::None) {
      std::vector<const ClientState*> chosen;
      if (participants == m) {
        for (const auto& c : clients) chosen.push_back(&c);
      } else {
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), sampler);
        order.resize(participants);
        std::sort(order.begin(), order.end());
        for (auto i : order) chosen.push_back(&clients[i]);
      }
      auto shared = aggregate(std::span<const ClientState* const>(chosen), opts.scope);
      broadcast(clients, shared);
    }
    for (std::size_t i = 0; i < m; ++i) {
      const auto e = evaluate_client(clients[i], hp, opts.metric);
      ClientRoundMetrics c;
      c.client = clients[i].client_id;
      c.train = e.train;
      c.val = e.val;
      c.test = e.test;
      c.loss_ce = steps[i].loss_ce;
      c.loss_smooth = steps[i].loss_smooth;
      c.loss_total = steps[i].loss_total;
      rm.clients.push_back(c);
    }
    rm.mean = mean_of(rm.clients);
    rm.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.rounds.push_back(std::move(rm));
  }
  result.clients = std::move(clients);
  return result;
}

RunResult baseline_local(std::vector<ClientState> clients, const Hyperparams& hp, std::int32_t rounds,
                         std::uint64_t seed) {
  RunOptions o;
  o.scope = AggregationScope::None;
  o.rounds = rounds;
  o.seed = seed;
  return run_rounds(std::move(clients), hp, o);
}

RunResult baseline_fedavg(std::vector<ClientState> clients, const Hyperparams& hp, std::int32_t rounds,
                          std::uint64_t seed) {
  if (hp.architecture != Architecture::SingleChannel)
    throw UsageError("baseline_fedavg: expects the single-channel architecture");
  RunOptions o;
  o.scope = AggregationScope::All;
  o.rounds = rounds;
  o.seed = seed;
  return run_rounds(std::move(clients), hp, o);
}

Hyperparams method_hyperparams(Method m, const Hyperparams& hp) {
  Hyperparams out = hp;
  if (m != Method::FedHERO) {
    out.architecture = Architecture::SingleChannel;
    out.alpha = 1.0;
  }
  return out;
}

AggregationScope method_scope(Method m, AggregationScope requested) {
  switch (m) {
    case Method::FedHERO: return requested;
    case Method::FedAvg: return AggregationScope::All;
    case Method::Local: return AggregationScope::None;
  }
  return requested;
}

RunResult train_method(Method method, const std::vector<ClientDataset>& data, const Hyperparams& hp,
                       RunOptions opts) {
  const auto mhp = method_hyperparams(method, hp);
  opts.scope = method_scope(method, opts.scope);
  return run_rounds(init_clients(data, mhp, opts.seed), mhp, opts);
}

RunSummary summarize(const std::vector<RoundMetrics>& rounds) {
  RunSummary s;
  s.rounds = static_cast<std::int32_t>(rounds.size());
  if (rounds.empty()) return s;
  s.final_test = rounds.back().mean.test;
  s.final_val = rounds.back().mean.val;
  double best = -1.0;
  for (const auto& r : rounds) {
    if (r.mean.val > best) {
      best = r.mean.val;
      s.best_val_round = r.round;
      s.best_val_test = r.mean.test;
    }
  }
  return s;
}

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw InputError("cannot write " + file.string());
  return out;
}

void metric_row(std::ostream& out, std::int32_t round, const std::string& client, const ClientRoundMetrics& c) {
  out << round << ',' << client << ',' << format_double(c.train) << ',' << format_double(c.val) << ','
      << format_double(c.test) << ',' << format_double(c.loss_ce) << ',' << format_double(c.loss_smooth) << ','
      << format_double(c.loss_total) << '\n';
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& file, const std::vector<RoundMetrics>& rounds) {
  auto out = open_out(file);
  out << "round,client,train,val,test,loss_ce,loss_smooth,loss_total\n";
  for (const auto& r : rounds) {
    for (const auto& c : r.clients) metric_row(out, r.round, std::to_string(c.client), c);
    metric_row(out, r.round, "mean", r.mean);
  }
}

void write_curves_csv(const std::filesystem::path& file, const std::vector<RoundMetrics>& rounds) {
  auto out = open_out(file);
  out << "round,client,split,metric\n";
  auto emit = [&](std::int32_t round, const std::string& client, const ClientRoundMetrics& c) {
    out << round << ',' << client << ",train," << format_double(c.train) << '\n';
    out << round << ',' << client << ",val," << format_double(c.val) << '\n';
    out << round << ',' << client << ",test," << format_double(c.test) << '\n';
  };
  for (const auto& r : rounds) {
    for (const auto& c : r.clients) emit(r.round, std::to_string(c.client), c);
    emit(r.round, "mean", r.mean);
  }
}

void write_timing_csv(const std::filesystem::path& file, const std::vector<RoundMetrics>& rounds) {
  auto out = open_out(file);
  out << "round,wall_seconds\n";
  for (const auto& r : rounds) out << r.round << ',' << r.wall_seconds << '\n';
}

void write_summary_json(const std::filesystem::path& file, const RunSummary& s, Method method,
                        AggregationScope scope, EvalMetric metric) {
  nlohmann::json j = {
      {"method", to_string(method)},
      {"scope", to_string(scope)},
      {"metric", to_string(metric)},
      {"rounds", s.rounds},
      {"final_test", s.final_test},
      {"final_val", s.final_val},
      {"best_val_round", s.best_val_round},
      {"best_val_test", s.best_val_test},
  };
  auto out = open_out(file);
  out << j.dump(2) << '\n';
}

void write_checkpoints(const std::filesystem::path& dir, const std::vector<ClientState>& clients,
                       const Hyperparams& hp) {
  for (const auto& c : clients) save_checkpoint(dir / ("client_" + std::to_string(c.client_id)), c.params, hp);
}

EvalReport evaluate_clients(const std::vector<ClientState>& clients, const Hyperparams& hp,
                            const EvalOptions& opts) {
  if (clients.empty()) throw InputError("evaluate: no clients");
  EvalReport rep;
  rep.metric = opts.metric;
  std::vector<Matrix> dists;
  std::vector<double> lia;
  for (const auto& c : clients) {
    auto e = evaluate_client(c, hp, opts.metric);
    if (c.graph.num_edges() > 0) e.homophily = edge_homophily(c.graph);
    if (opts.lia) {
      const auto pairs = std::min(opts.lia_pairs, c.graph.num_edges());
      if (pairs > 0) {
        const auto pred = predict(c, hp);
        e.lia = link_inference_attack(pred.z_out, c.graph, pairs, mix_seed(opts.seed, static_cast<std::uint64_t>(c.client_id)))
                    .balanced_accuracy;
        lia.push_back(*e.lia);
      }
    }
    dists.push_back(neighbor_label_distribution(c.graph));
    rep.clients.push_back(e);
  }
  const double n = static_cast<double>(rep.clients.size());
  for (const auto& e : rep.clients) {
    rep.mean_train += e.train / n;
    rep.mean_val += e.val / n;
    rep.mean_test += e.test / n;
  }
  if (!lia.empty()) rep.mean_lia = mean(lia);
  rep.divergence = client_divergence(dists);
  return rep;
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::json j;
  j["metric"] = to_string(report.metric);
  j["mean"] = {{"train", report.mean_train}, {"val", report.mean_val}, {"test", report.mean_test}};
  if (report.mean_lia) j["mean"]["lia"] = *report.mean_lia;
  auto arr = nlohmann::json::array();
  for (const auto& e : report.clients) {
    nlohmann::json c = {{"client", e.client}, {"train", e.train}, {"val", e.val}, {"test", e.test}};
    if (e.lia) c["lia"] = *e.lia;
    if (e.homophily) c["homophily"] = *e.homophily;
    arr.push_back(c);
  }
  j["clients"] = arr;
  auto div = nlohmann::json::array();
  for (Eigen::Index i = 0; i < report.divergence.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < report.divergence.cols(); ++k) row.push_back(report.divergence(i, k));
    div.push_back(row);
  }
  j["neighbor_distribution_divergence"] = div;
  return j.dump(2);
}

}  // namespace fedgraph
