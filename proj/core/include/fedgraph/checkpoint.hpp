#pragma once

#include <filesystem>
#include <string>

#include "fedgraph/model.hpp"

namespace fedgraph {

// params.bin layout (little endian):
//   "FGCK" | u32 version | u32 block count
//   per block: u32 name length | name bytes | u64 rows | u64 cols | rows*cols f64, row-major
void save_params_binary(const ModelParams& params, const std::filesystem::path& file);
/// Channels are not stored in the binary file; loaded blocks default to Local.
ModelParams load_params_binary(const std::filesystem::path& file);

std::string hyperparams_to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const std::string& text);

struct Checkpoint {
  ModelParams params;
  Hyperparams hp;
};

/// Writes params.bin and params.json (hyperparameters and channel_of map) into `dir`.
void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params, const Hyperparams& hp);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace fedgraph
