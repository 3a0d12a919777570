#pragma once

// Dual-channel GNN with a shared structure learner.
//
//   Z_sl = relu(norm(A) X W_sl)                       structure learner embedding
//   phi(u, v) = mean_h cos(w1_h * z_u, w2_h * z_v)    pairwise metric
//   latent graph: top-k phi per row (or Bernoulli samples), weights = phi
//   Z0 = relu(X W_f0)
//   Z^l = relu(alpha norm(A) Z^{l-1} W_loc^l + (1 - alpha) norm_abs(latent) Z^{l-1} W_g^l)
//   logits = [X, Z0, ..., ZL] W_c

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedgraph/autodiff.hpp"
#include "fedgraph/graph.hpp"
#include "fedgraph/optim.hpp"

namespace fedgraph {

enum class Channel { Global, Local };
enum class Sparsifier { TopK, Bernoulli };
enum class MetricKind { MultiHead, Cosine };
/// SingleChannel is the plain GNN used by the FedAvg and Local baselines:
/// f0, local layers and classifier only, no structure learner.
enum class Architecture { DualChannel, SingleChannel };

const char* to_string(Channel c) noexcept;
const char* to_string(Sparsifier s) noexcept;
const char* to_string(MetricKind m) noexcept;
const char* to_string(Architecture a) noexcept;
Channel parse_channel(const std::string& s);
Sparsifier parse_sparsifier(const std::string& s);
MetricKind parse_metric(const std::string& s);
Architecture parse_architecture(const std::string& s);

struct Hyperparams {
  double alpha = 0.2;
  double lambda_smooth = 0.1;
  double mu_smooth = 0.1;
  std::int32_t k_neighbors = 20;
  std::int32_t num_heads = 4;
  std::int32_t num_layers = 2;
  std::int32_t hidden_dim = 32;
  double learning_rate = 0.005;
  Sparsifier sparsifier = Sparsifier::TopK;
  /// Message passing on a 0/1 latent graph with straight-through gradients.
  bool binary_latent = false;
  MetricKind metric = MetricKind::MultiHead;
  /// Put f0 in the Global channel.
  bool share_f0 = false;
  Architecture architecture = Architecture::DualChannel;

  void validate() const;
  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct ParamBlock {
  std::string name;
  Channel channel = Channel::Local;
  Matrix value;
};

/// Ordered parameter blocks. Dual-channel names: f0, sl_gnn, sl_heads
/// (rows 0..H-1 hold w1, rows H..2H-1 hold w2), global_1..global_L,
/// local_1..local_L, classifier.
struct ModelParams {
  std::vector<ParamBlock> blocks;

  bool has(const std::string& name) const;
  const ParamBlock& block(const std::string& name) const;
  ParamBlock& block(const std::string& name);
  std::map<std::string, Channel> channel_of() const;
  std::size_t num_scalars() const;
  /// Same block names, order and shapes.
  bool same_structure(const ModelParams& other) const;
};

/// Uniform in +-1/sqrt(fan_in) for weight matrices; head vectors are
/// 1 + U(-0.01, 0.01). Blocks are drawn in order from one seeded stream.
ModelParams init_params(const Hyperparams& hp, Eigen::Index feature_dim, std::int32_t num_classes,
                        std::uint64_t seed);

/// Concatenated readout width: d + hidden * (L + 1).
Eigen::Index readout_dim(const Hyperparams& hp, Eigen::Index feature_dim);

/// Per-graph constants reused by every step.
struct GraphContext {
  ad::PatternPtr adjacency;
  Matrix adjacency_weights;  // 1/deg per stored entry
  Matrix features;
  Matrix aggregated_features;  // norm(A) X
  std::vector<std::int32_t> labels;
  std::int32_t num_classes = 0;

  static GraphContext make(const Graph& g);
  std::int32_t num_nodes() const { return static_cast<std::int32_t>(labels.size()); }
};

/// Tensors bound to one forward pass, looked up by block name.
class BoundParams {
 public:
  /// `tape` == nullptr binds constants (inference).
  BoundParams(const ModelParams& params, ad::Tape* tape);
  /// Binds existing tensors, one per block of `params` in block order.
  BoundParams(const ModelParams& params, std::vector<ad::Tensor> tensors);
  const ad::Tensor& operator[](const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  const std::vector<ad::Tensor>& tensors() const { return tensors_; }

 private:
  std::vector<ad::Tensor> tensors_;
  std::map<std::string, std::size_t> index_;
};

ad::Tensor structure_learner_embed(const BoundParams& p, const GraphContext& ctx);

/// Scalar phi(z_u, z_v). Zero scaled vectors contribute cosine 0.
double pairwise_metric(const Matrix& heads, const Matrix& z, NodeId u, NodeId v, MetricKind metric);

/// Dense N x N phi matrix (diagonal included).
Matrix pairwise_metric_matrix(const Matrix& heads, const Matrix& z, MetricKind metric);

/// Selected directed latent edges (rows sorted by column id).
/// TopK keeps the k largest phi(u, .) over v != u, ties to the smaller id;
/// Bernoulli keeps (u, v) with probability (phi + 1) / 2 using `seed`.
ad::PatternPtr select_latent_edges(const Matrix& phi, const Hyperparams& hp, std::uint64_t seed);

struct LatentGraph {
  ad::PatternPtr pattern;
  /// phi of every retained entry, on the tape.
  ad::Tensor scores;
  /// Weights that enter the smoothness loss: scores, or ones in binary mode.
  ad::Tensor weights;
  /// weights / row sum of |weights|, used for message passing.
  ad::Tensor normalized;

  std::size_t out_degree(NodeId u) const;
  std::vector<NodeId> neighbors(NodeId u) const;
};

LatentGraph build_latent_graph(const BoundParams& p, const ad::Tensor& z, const Hyperparams& hp,
                               std::uint64_t seed);

/// Rebuilds the latent graph's tensors on an explicit pattern (frozen selection).
LatentGraph latent_graph_on_pattern(const BoundParams& p, const ad::Tensor& z, const ad::PatternPtr& pattern,
                                    const Hyperparams& hp);

struct ForwardOutput {
  ad::Tensor z_out;
  ad::Tensor logits;
};

/// `latent` may be null for the single-channel architecture.
ForwardOutput dual_channel_forward(const BoundParams& p, const GraphContext& ctx, const LatentGraph* latent,
                                   const Hyperparams& hp);

ad::Tensor smooth_loss(const LatentGraph& lg, const Matrix& x, double lambda, double mu);

struct LossParts {
  ad::Tensor ce;
  ad::Tensor smooth;
  ad::Tensor total;
};

LossParts total_loss(const ad::Tensor& logits, const std::vector<std::int32_t>& labels, const Mask& mask,
                     const LatentGraph* lg, const Matrix& x, const Hyperparams& hp);

/// Everything one full forward pass produces.
struct ModelPass {
  std::optional<LatentGraph> latent;
  ForwardOutput out;
};

ModelPass model_forward(const BoundParams& p, const GraphContext& ctx, const Hyperparams& hp,
                        std::uint64_t seed);

struct ClientState {
  std::int32_t client_id = 0;
  Graph graph;
  NodeSplit split;
  GraphContext context;
  ModelParams params;
  AdamState adam;
  /// Seed for stochastic latent graphs; combined with the step counter.
  std::uint64_t seed = 0;

  std::int32_t num_nodes() const { return graph.num_nodes(); }
};

ClientState make_client(std::int32_t id, Graph graph, NodeSplit split, ModelParams params,
                        const Hyperparams& hp, std::uint64_t seed);

struct StepMetrics {
  double loss_ce = 0.0;
  double loss_smooth = 0.0;
  double loss_total = 0.0;
  double train_accuracy = 0.0;
};

/// Full-batch step: embed, build latent graph, forward, loss, backward, Adam.
StepMetrics train_step(ClientState& client, const Hyperparams& hp);

/// Inference pass with the client's current parameters.
struct Prediction {
  Matrix logits;
  Matrix z_out;
  /// Loss components on the training mask.
  StepMetrics losses;
};

Prediction predict(const ClientState& client, const Hyperparams& hp);

/// Seed of the latent-graph sampler for a given optimizer step.
std::uint64_t latent_seed(const ClientState& client);

}  // namespace fedgraph
