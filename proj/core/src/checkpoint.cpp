#include "fedgraph/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fedgraph/errors.hpp"

namespace fedgraph {

namespace {

constexpr char kMagic[4] = {'F', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& file) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw InputError(file.string() + ": truncated checkpoint");
  return v;
}

nlohmann::json hp_json(const Hyperparams& hp) {
  return {
      {"alpha", hp.alpha},
      {"lambda", hp.lambda_smooth},
      {"mu", hp.mu_smooth},
      {"k", hp.k_neighbors},
      {"heads", hp.num_heads},
      {"layers", hp.num_layers},
      {"hidden_dim", hp.hidden_dim},
      {"learning_rate", hp.learning_rate},
      {"sparsifier", to_string(hp.sparsifier)},
      {"binary_latent", hp.binary_latent},
      {"metric", to_string(hp.metric)},
      {"share_f0", hp.share_f0},
      {"architecture", to_string(hp.architecture)},
      {"activation", "relu"},
  };
}

Hyperparams hp_from(const nlohmann::json& j) {
  Hyperparams hp;
  hp.alpha = j.value("alpha", hp.alpha);
  hp.lambda_smooth = j.value("lambda", hp.lambda_smooth);
  hp.mu_smooth = j.value("mu", hp.mu_smooth);
  hp.k_neighbors = j.value("k", hp.k_neighbors);
  hp.num_heads = j.value("heads", hp.num_heads);
  hp.num_layers = j.value("layers", hp.num_layers);
  hp.hidden_dim = j.value("hidden_dim", hp.hidden_dim);
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.sparsifier = parse_sparsifier(j.value("sparsifier", std::string(to_string(hp.sparsifier))));
  hp.binary_latent = j.value("binary_latent", hp.binary_latent);
  hp.metric = parse_metric(j.value("metric", std::string(to_string(hp.metric))));
  hp.share_f0 = j.value("share_f0", hp.share_f0);
  hp.architecture = parse_architecture(j.value("architecture", std::string(to_string(hp.architecture))));
  hp.validate();
  return hp;
}

}  // namespace

void save_params_binary(const ModelParams& params, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw InputError("cannot write " + file.string());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.blocks.size()));
  for (const auto& b : params.blocks) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(b.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(b.value.cols()));
    out.write(reinterpret_cast<const char*>(b.value.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(b.value.size())));
  }
  if (!out) throw InputError("failed writing " + file.string());
}

ModelParams load_params_binary(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open " + file.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw InputError(file.string() + ": not a parameter checkpoint (bad magic)");
  const auto version = get<std::uint32_t>(in, file);
  if (version != kVersion) throw InputError(file.string() + ": unsupported checkpoint version " + std::to_string(version));
  const auto count = get<std::uint32_t>(in, file);
  ModelParams p;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(in, file);
    if (len > 4096) throw InputError(file.string() + ": implausible block name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw InputError(file.string() + ": truncated checkpoint");
    const auto rows = get<std::uint64_t>(in, file);
    const auto cols = get<std::uint64_t>(in, file);
    if (rows > (1u << 24) || cols > (1u << 24)) throw InputError(file.string() + ": implausible block shape");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * rows * cols)))
      throw InputError(file.string() + ": truncated checkpoint");
    p.blocks.push_back({std::move(name), Channel::Local, std::move(m)});
  }
  return p;
}

std::string hyperparams_to_json(const Hyperparams& hp) { return hp_json(hp).dump(2); }

Hyperparams hyperparams_from_json(const std::string& text) {
  try {
    return hp_from(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("hyperparameters json: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params, const Hyperparams& hp) {
  std::filesystem::create_directories(dir);
  save_params_binary(params, dir / "params.bin");
  nlohmann::json j;
  j["hyperparams"] = hp_json(hp);
  nlohmann::json channels = nlohmann::json::object();
  for (const auto& b : params.blocks) channels[b.name] = to_string(b.channel);
  j["channel_of"] = channels;
  std::ofstream out(dir / "params.json");
  if (!out) throw InputError("cannot write " + (dir / "params.json").string());
  out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  Checkpoint c;
  c.params = load_params_binary(dir / "params.bin");
  std::ifstream in(dir / "params.json");
  if (!in) throw InputError("cannot open " + (dir / "params.json").string());
  try {
    auto j = nlohmann::json::parse(in);
    c.hp = hp_from(j.at("hyperparams"));
    const auto& ch = j.at("channel_of");
    for (auto& b : c.params.blocks) {
      if (!ch.contains(b.name)) throw InputError("params.json: no channel for block '" + b.name + "'");
      b.channel = parse_channel(ch.at(b.name).get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError((dir / "params.json").string() + ": " + e.what());
  }
  return c;
}

}  // namespace fedgraph
