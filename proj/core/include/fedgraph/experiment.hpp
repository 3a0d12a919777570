#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fedgraph/federated.hpp"
#include "fedgraph/synthgen.hpp"

namespace fedgraph {

/// Full description of an experiment; rendered as INI with the sections
/// [data], [generator], [partition], [model] and [run].
struct ExperimentConfig {
  // [data]
  std::string source = "generated";  // generated | files
  std::string data_path;             // files: client bundles or one bundle to partition
  double edge_noise = 0.0;           // flip_edge_noise probability applied to every client graph

  // [generator]
  GeneratorConfig generator;  // generator.seed is replaced by the repeat seed
  std::int32_t gen_clients = 4;
  double conflict_strength = 1.0;

  // [partition]
  std::string partition = "none";  // none | louvain | balanced
  std::int32_t partition_clients = 4;
  std::int32_t min_size = 50;

  // [model]
  Hyperparams hp;

  // [run]
  Method method = Method::FedHERO;
  AggregationScope scope = AggregationScope::GlobalChannelOnly;
  std::int32_t rounds = 200;
  std::int32_t local_epochs = 1;
  double participation = 1.0;
  EvalMetric metric = EvalMetric::Accuracy;
  std::int32_t repeats = 5;
  std::uint64_t seed = 0;
  /// Explicit per-repeat seeds; when empty they are mix_seed(seed, r).
  std::vector<std::uint64_t> seeds;

  void validate() const;
  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

std::string render_config(const ExperimentConfig& cfg);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& file);

std::vector<std::uint64_t> repeat_seeds(const ExperimentConfig& cfg);

/// Client datasets of one repeat (generation or loading, partitioning,
/// optional edge noise, node splits).
std::vector<ClientDataset> prepare_datasets(const ExperimentConfig& cfg, std::uint64_t seed);

struct RepeatOutcome {
  std::int32_t repeat = 0;
  std::uint64_t seed = 0;
  RunSummary summary;
  RunResult run;
};

/// One pipeline; writes metrics, curves, timing, summary and checkpoints
/// under `dir` when it is non-empty.
RepeatOutcome run_repeat(const ExperimentConfig& cfg, std::int32_t repeat, const std::filesystem::path& dir);

struct ExperimentSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<double> final_test;
  std::vector<double> best_val_test;
  double mean_final_test = 0.0;
  double std_final_test = 0.0;
  double mean_best_val_test = 0.0;
  double std_best_val_test = 0.0;
  std::filesystem::path run_dir;
};

/// Runs every repeat into a fresh timestamped directory under `out_root`
/// (config.ini, repeat_<r>/..., summary.json).
ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_root);

/// Creates out_root/<prefix>-YYYYmmdd-HHMMSS[-n].
std::filesystem::path make_run_dir(const std::filesystem::path& out_root, const std::string& prefix);

const std::vector<std::string>& ablation_parameters();

/// Copy of `cfg` with one sweep parameter set from its text value.
ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& name, const std::string& value);

struct AblationRow {
  std::string value;
  ExperimentSummary summary;
};

/// One experiment per value; writes ablation.csv with one row per value.
std::vector<AblationRow> ablate(const ExperimentConfig& cfg, const std::string& parameter,
                                const std::vector<std::string>& values, const std::filesystem::path& out_root);

}  // namespace fedgraph
