#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedgraph/model.hpp"
#include "fedgraph/partition.hpp"

namespace fedgraph {

/// Which parameter blocks the server averages.
///   GlobalChannelOnly  blocks whose channel is Global
///   All                every block
///   TaskOnly           every block except sl_gnn and sl_heads
///   None               nothing (local training)
enum class AggregationScope { GlobalChannelOnly, All, TaskOnly, None };

enum class Method { FedHERO, FedAvg, Local };

enum class EvalMetric { Accuracy, Auc };

const char* to_string(AggregationScope s) noexcept;
const char* to_string(Method m) noexcept;
const char* to_string(EvalMetric m) noexcept;
AggregationScope parse_scope(const std::string& s);
Method parse_method(const std::string& s);
EvalMetric parse_eval_metric(const std::string& s);

bool in_scope(const ParamBlock& block, AggregationScope scope);

/// Server-side averages sum_i (N_i / N) w_i of every in-scope block, summed in
/// client order. Throws ProtocolError if client blocks differ in structure.
std::vector<ParamBlock> aggregate(std::span<const ClientState> clients, AggregationScope scope);
std::vector<ParamBlock> aggregate(std::span<const ClientState* const> clients, AggregationScope scope);

/// Overwrites the named blocks on every client.
void broadcast(std::span<ClientState> clients, const std::vector<ParamBlock>& shared);

struct ClientRoundMetrics {
  std::int32_t client = 0;
  double train = 0.0;
  double val = 0.0;
  double test = 0.0;
  double loss_ce = 0.0;
  double loss_smooth = 0.0;
  double loss_total = 0.0;
};

struct RoundMetrics {
  std::int32_t round = 0;
  std::vector<ClientRoundMetrics> clients;
  /// Unweighted means over clients.
  ClientRoundMetrics mean;
  double wall_seconds = 0.0;
};

struct RunOptions {
  AggregationScope scope = AggregationScope::GlobalChannelOnly;
  std::int32_t rounds = 200;
  std::int32_t local_epochs = 1;
  std::uint64_t seed = 0;
  /// Fraction of clients sampled each round for aggregation.
  double participation = 1.0;
  EvalMetric metric = EvalMetric::Accuracy;
};

struct RunResult {
  std::vector<RoundMetrics> rounds;
  std::vector<ClientState> clients;
};

/// Builds one client per dataset. Every client starts from the same
/// parameters drawn from `seed`, so shared blocks agree before round 1.
std::vector<ClientState> init_clients(const std::vector<ClientDataset>& data, const Hyperparams& hp,
                                      std::uint64_t seed);

/// Per round: local_epochs train steps on every client, aggregation over the
/// participating clients, broadcast, then evaluation of every client.
RunResult run_rounds(std::vector<ClientState> clients, const Hyperparams& hp, const RunOptions& opts);

/// run_rounds with scope None.
RunResult baseline_local(std::vector<ClientState> clients, const Hyperparams& hp, std::int32_t rounds,
                         std::uint64_t seed = 0);
/// run_rounds with scope All; clients must use the single-channel architecture.
RunResult baseline_fedavg(std::vector<ClientState> clients, const Hyperparams& hp, std::int32_t rounds,
                          std::uint64_t seed = 0);

/// Hyperparameters actually used by a method: the baselines switch to the
/// single-channel architecture.
Hyperparams method_hyperparams(Method m, const Hyperparams& hp);
/// Aggregation scope actually used by a method.
AggregationScope method_scope(Method m, AggregationScope requested);

/// Initializes clients for `method` and runs the federated loop.
RunResult train_method(Method method, const std::vector<ClientDataset>& data, const Hyperparams& hp,
                       RunOptions opts);

struct RunSummary {
  double final_test = 0.0;
  double final_val = 0.0;
  std::int32_t best_val_round = 0;
  double best_val_test = 0.0;
  std::int32_t rounds = 0;
};

RunSummary summarize(const std::vector<RoundMetrics>& rounds);

/// metrics.csv: round,client,train,val,test,loss_ce,loss_smooth,loss_total
/// with one row per client and a "mean" row per round.
void write_metrics_csv(const std::filesystem::path& file, const std::vector<RoundMetrics>& rounds);
/// curves.csv: round,client,split,metric (long format).
void write_curves_csv(const std::filesystem::path& file, const std::vector<RoundMetrics>& rounds);
/// Wall-clock seconds per round; kept apart so metrics.csv is reproducible.
void write_timing_csv(const std::filesystem::path& file, const std::vector<RoundMetrics>& rounds);
void write_summary_json(const std::filesystem::path& file, const RunSummary& s, Method method,
                        AggregationScope scope, EvalMetric metric);
/// checkpoints/client_<i>/ for every client.
void write_checkpoints(const std::filesystem::path& dir, const std::vector<ClientState>& clients,
                       const Hyperparams& hp);

struct EvalOptions {
  EvalMetric metric = EvalMetric::Accuracy;
  bool lia = false;
  std::size_t lia_pairs = 200;
  std::uint64_t seed = 0;
};

struct ClientEval {
  std::int32_t client = 0;
  double train = 0.0;
  double val = 0.0;
  double test = 0.0;
  std::optional<double> lia;
  std::optional<double> homophily;
};

struct EvalReport {
  EvalMetric metric = EvalMetric::Accuracy;
  std::vector<ClientEval> clients;
  double mean_train = 0.0;
  double mean_val = 0.0;
  double mean_test = 0.0;
  std::optional<double> mean_lia;
  Matrix divergence;
};

/// Split metric of one client with its current parameters.
ClientEval evaluate_client(const ClientState& client, const Hyperparams& hp, EvalMetric metric);
EvalReport evaluate_clients(const std::vector<ClientState>& clients, const Hyperparams& hp,
                            const EvalOptions& opts);
std::string eval_report_json(const EvalReport& report);

}  // namespace fedgraph
