#include "fedgraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "fedgraph/errors.hpp"
#include "fedgraph/metrics.hpp"

namespace fedgraph {

const char* to_string(Channel c) noexcept { return c == Channel::Global ? "global" : "local"; }
const char* to_string(Sparsifier s) noexcept { return s == Sparsifier::TopK ? "topk" : "bernoulli"; }
const char* to_string(MetricKind m) noexcept { return m == MetricKind::MultiHead ? "multihead" : "cos"; }
const char* to_string(Architecture a) noexcept {
  return a == Architecture::DualChannel ? "dual" : "single";
}

Channel parse_channel(const std::string& s) {
  if (s == "global") return Channel::Global;
  if (s == "local") return Channel::Local;
  throw InputError("unknown channel '" + s + "' (expected global or local)");
}

Sparsifier parse_sparsifier(const std::string& s) {
  if (s == "topk") return Sparsifier::TopK;
  if (s == "bernoulli") return Sparsifier::Bernoulli;
  throw InputError("unknown sparsifier '" + s + "' (expected topk or bernoulli)");
}

MetricKind parse_metric(const std::string& s) {
  if (s == "multihead") return MetricKind::MultiHead;
  if (s == "cos") return MetricKind::Cosine;
  throw InputError("unknown metric '" + s + "' (expected multihead or cos)");
}

Architecture parse_architecture(const std::string& s) {
  if (s == "dual") return Architecture::DualChannel;
  if (s == "single") return Architecture::SingleChannel;
  throw InputError("unknown architecture '" + s + "' (expected dual or single)");
}

void Hyperparams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("hyperparams: alpha must lie in [0, 1]");
  if (!(lambda_smooth >= 0.0) || !(mu_smooth >= 0.0))
    throw InputError("hyperparams: lambda and mu must be non-negative");
  if (k_neighbors < 1) throw InputError("hyperparams: k must be at least 1");
  if (num_heads < 1) throw InputError("hyperparams: num_heads must be at least 1");
  if (num_layers < 1) throw InputError("hyperparams: num_layers must be at least 1");
  if (hidden_dim < 1) throw InputError("hyperparams: hidden_dim must be at least 1");
  if (!(learning_rate > 0.0)) throw InputError("hyperparams: learning_rate must be positive");
}

bool ModelParams::has(const std::string& name) const {
  return std::any_of(blocks.begin(), blocks.end(), [&](const ParamBlock& b) { return b.name == name; });
}

const ParamBlock& ModelParams::block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw InputError("model params: no block named '" + name + "'");
}

ParamBlock& ModelParams::block(const std::string& name) {
  return const_cast<ParamBlock&>(std::as_const(*this).block(name));
}

std::map<std::string, Channel> ModelParams::channel_of() const {
  std::map<std::string, Channel> out;
  for (const auto& b : blocks) out[b.name] = b.channel;
  return out;
}

std::size_t ModelParams::num_scalars() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += static_cast<std::size_t>(b.value.size());
  return n;
}

bool ModelParams::same_structure(const ModelParams& other) const {
  if (blocks.size() != other.blocks.size()) return false;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& a = blocks[i];
    const auto& b = other.blocks[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols())
      return false;
  }
  return true;
}

Eigen::Index readout_dim(const Hyperparams& hp, Eigen::Index feature_dim) {
  return feature_dim + static_cast<Eigen::Index>(hp.hidden_dim) * (hp.num_layers + 1);
}

ModelParams init_params(const Hyperparams& hp, Eigen::Index feature_dim, std::int32_t num_classes,
                        std::uint64_t seed) {
  hp.validate();
  if (feature_dim < 1 || num_classes < 1) throw InputError("init_params: empty feature or class dimension");
  Rng rng(seed);
  ModelParams p;
  auto dense = [&](std::string name, Channel ch, Eigen::Index rows, Eigen::Index cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
    p.blocks.push_back({std::move(name), ch, std::move(m)});
  };
  const Eigen::Index h = hp.hidden_dim;
  const bool dual = hp.architecture == Architecture::DualChannel;
  dense("f0", hp.share_f0 ? Channel::Global : Channel::Local, feature_dim, h);
  if (dual) {
    dense("sl_gnn", Channel::Global, feature_dim, h);
    if (hp.metric == MetricKind::MultiHead) {
      std::uniform_real_distribution<double> u(-0.01, 0.01);
      Matrix heads(2 * hp.num_heads, h);
      for (Eigen::Index i = 0; i < heads.rows(); ++i)
        for (Eigen::Index j = 0; j < h; ++j) heads(i, j) = 1.0 + u(rng);
      p.blocks.push_back({"sl_heads", Channel::Global, std::move(heads)});
    }
    for (std::int32_t l = 1; l <= hp.num_layers; ++l) dense("global_" + std::to_string(l), Channel::Global, h, h);
  }
  for (std::int32_t l = 1; l <= hp.num_layers; ++l) dense("local_" + std::to_string(l), Channel::Local, h, h);
  dense("classifier", Channel::Local, readout_dim(hp, feature_dim), num_classes);
  return p;
}

GraphContext GraphContext::make(const Graph& g) {
  GraphContext ctx;
  ctx.adjacency = ad::adjacency_pattern(g);
  ctx.adjacency_weights = ad::mean_aggregation_weights(*ctx.adjacency);
  ctx.features = g.features();
  ctx.labels = g.labels();
  ctx.num_classes = g.num_classes();
  ctx.aggregated_features =
      ad::sparse_dense_matmul(ctx.adjacency, ad::Tensor::constant(ctx.adjacency_weights),
                              ad::Tensor::constant(ctx.features))
          .value();
  return ctx;
}

BoundParams::BoundParams(const ModelParams& params, ad::Tape* tape) {
  tensors_.reserve(params.blocks.size());
  for (const auto& b : params.blocks) {
    index_[b.name] = tensors_.size();
    tensors_.push_back(tape ? tape->variable(b.value) : ad::Tensor::constant(b.value));
  }
}

BoundParams::BoundParams(const ModelParams& params, std::vector<ad::Tensor> tensors) : tensors_(std::move(tensors)) {
  if (tensors_.size() != params.blocks.size()) throw ShapeError("BoundParams: one tensor per block required");
  for (std::size_t i = 0; i < params.blocks.size(); ++i) index_[params.blocks[i].name] = i;
}

const ad::Tensor& BoundParams::operator[](const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InputError("model: parameter block '" + name + "' is missing");
  return tensors_[it->second];
}

ad::Tensor structure_learner_embed(const BoundParams& p, const GraphContext& ctx) {
  return ad::relu(ad::matmul(ad::Tensor::constant(ctx.aggregated_features), p["sl_gnn"]));
}

namespace {

double safe_cos(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

Matrix normalized_rows(const Matrix& m) {
  Matrix out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n > 0.0) out.row(i) /= n;
  }
  return out;
}

std::int32_t head_count(const Matrix& heads, MetricKind metric) {
  if (metric == MetricKind::Cosine) return 1;
  if (heads.rows() < 2 || heads.rows() % 2 != 0) throw ShapeError("pairwise metric: head matrix needs 2H rows");
  return static_cast<std::int32_t>(heads.rows() / 2);
}

}  // namespace

double pairwise_metric(const Matrix& heads, const Matrix& z, NodeId u, NodeId v, MetricKind metric) {
  if (metric == MetricKind::Cosine) return safe_cos(z.row(u), z.row(v));
  const auto nh = head_count(heads, metric);
  if (heads.cols() != z.cols()) throw ShapeError("pairwise metric: head width differs from embedding width");
  double s = 0.0;
  for (std::int32_t h = 0; h < nh; ++h) {
    s += safe_cos(heads.row(h).cwiseProduct(z.row(u)), heads.row(nh + h).cwiseProduct(z.row(v)));
  }
  return s / nh;
}

Matrix pairwise_metric_matrix(const Matrix& heads, const Matrix& z, MetricKind metric) {
  if (metric == MetricKind::Cosine) {
    Matrix a = normalized_rows(z);
    return a * a.transpose();
  }
  const auto nh = head_count(heads, metric);
  if (heads.cols() != z.cols()) throw ShapeError("pairwise metric: head width differs from embedding width");
  const auto d = z.cols();
  Matrix a(z.rows(), d * nh);
  Matrix b(z.rows(), d * nh);
  for (std::int32_t h = 0; h < nh; ++h) {
    a.middleCols(h * d, d) = normalized_rows(z * heads.row(h).asDiagonal());
    b.middleCols(h * d, d) = normalized_rows(z * heads.row(nh + h).asDiagonal());
  }
  Matrix phi = a * b.transpose();
  phi /= static_cast<double>(nh);
  return phi;
}

ad::PatternPtr select_latent_edges(const Matrix& phi, const Hyperparams& hp, std::uint64_t seed) {
  const auto n = phi.rows();
  if (phi.cols() != n) throw ShapeError("select_latent_edges: score matrix must be square");
  auto pattern = std::make_shared<ad::SparsePattern>();
  pattern->rows = n;
  pattern->cols = n;
  pattern->offsets.assign(1, 0);
  if (hp.sparsifier == Sparsifier::TopK) {
    if (hp.k_neighbors >= n)
      throw InputError("build_latent_graph: k = " + std::to_string(hp.k_neighbors) +
                       " must be smaller than the node count " + std::to_string(n));
    const auto k = static_cast<std::size_t>(hp.k_neighbors);
    // Bounded heap whose front is the worst kept candidate.
    std::vector<std::pair<double, NodeId>> heap;
    heap.reserve(k + 1);
    pattern->indices.reserve(static_cast<std::size_t>(n) * k);
    auto better = [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); };
    for (Eigen::Index u = 0; u < n; ++u) {
      heap.clear();
      const double* row = phi.data() + u * n;
      for (NodeId v = 0; v < n; ++v) {
        if (v == u) continue;
        const std::pair<double, NodeId> c{row[v], v};
        if (heap.size() < k) {
          heap.push_back(c);
          std::push_heap(heap.begin(), heap.end(), better);
        } else if (better(c, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), better);
          heap.back() = c;
          std::push_heap(heap.begin(), heap.end(), better);
        }
      }
      const auto first = pattern->indices.size();
      for (const auto& c : heap) pattern->indices.push_back(c.second);
      std::sort(pattern->indices.begin() + static_cast<std::ptrdiff_t>(first), pattern->indices.end());
      pattern->offsets.push_back(static_cast<std::int64_t>(pattern->indices.size()));
    }
  } else {
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index u = 0; u < n; ++u) {
      for (NodeId v = 0; v < n; ++v) {
        if (v == u) continue;
        const double prob = std::clamp((phi(u, v) + 1.0) / 2.0, 0.0, 1.0);
        if (unit(rng) < prob) pattern->indices.push_back(v);
      }
      pattern->offsets.push_back(static_cast<std::int64_t>(pattern->indices.size()));
    }
  }
  return pattern;
}

std::size_t LatentGraph::out_degree(NodeId u) const {
  return static_cast<std::size_t>(pattern->offsets[static_cast<std::size_t>(u) + 1] -
                                  pattern->offsets[static_cast<std::size_t>(u)]);
}

std::vector<NodeId> LatentGraph::neighbors(NodeId u) const {
  const auto b = pattern->offsets[static_cast<std::size_t>(u)];
  const auto e = pattern->offsets[static_cast<std::size_t>(u) + 1];
  return {pattern->indices.begin() + b, pattern->indices.begin() + e};
}

LatentGraph latent_graph_on_pattern(const BoundParams& p, const ad::Tensor& z, const ad::PatternPtr& pattern,
                                    const Hyperparams& hp) {
  LatentGraph lg;
  lg.pattern = pattern;
  if (hp.metric == MetricKind::Cosine) {
    auto a = ad::normalize_rows(z);
    lg.scores = ad::sparse_pair_dot(pattern, a, a);
  } else {
    const auto& heads = p["sl_heads"];
    const auto nh = static_cast<std::int32_t>(heads.rows() / 2);
    std::vector<ad::Tensor> left;
    std::vector<ad::Tensor> right;
    for (std::int32_t h = 0; h < nh; ++h) {
      left.push_back(ad::normalize_rows(ad::scale_cols(z, ad::row(heads, h))));
      right.push_back(ad::normalize_rows(ad::scale_cols(z, ad::row(heads, nh + h))));
    }
    lg.scores = ad::scale(ad::sparse_pair_dot(pattern, ad::concat_cols(left), ad::concat_cols(right)),
                          1.0 / static_cast<double>(nh));
  }
  lg.weights = hp.binary_latent ? ad::straight_through_ones(lg.scores) : lg.scores;
  lg.normalized = ad::sparse_row_normalize_abs(pattern, lg.weights);
  return lg;
}

LatentGraph build_latent_graph(const BoundParams& p, const ad::Tensor& z, const Hyperparams& hp,
                               std::uint64_t seed) {
  static const Matrix no_heads;
  const Matrix& heads = hp.metric == MetricKind::MultiHead ? p["sl_heads"].value() : no_heads;
  const Matrix phi = pairwise_metric_matrix(heads, z.value(), hp.metric);
  return latent_graph_on_pattern(p, z, select_latent_edges(phi, hp, seed), hp);
}

ForwardOutput dual_channel_forward(const BoundParams& p, const GraphContext& ctx, const LatentGraph* latent,
                                   const Hyperparams& hp) {
  const bool dual = hp.architecture == Architecture::DualChannel;
  if (dual && latent == nullptr) throw UsageError("dual_channel_forward: dual-channel model needs a latent graph");
  const auto x = ad::Tensor::constant(ctx.features);
  const auto adj_w = ad::Tensor::constant(ctx.adjacency_weights);
  auto z = ad::relu(ad::matmul(x, p["f0"]));
  std::vector<ad::Tensor> readout{x, z};
  const bool use_local = !dual || hp.alpha > 0.0;
  const bool use_global = dual && hp.alpha < 1.0;
  for (std::int32_t l = 1; l <= hp.num_layers; ++l) {
    const auto tag = std::to_string(l);
    ad::Tensor e;
    ad::Tensor h;
    if (use_local) e = ad::matmul(ad::sparse_dense_matmul(ctx.adjacency, adj_w, z), p["local_" + tag]);
    if (use_global)
      h = ad::matmul(ad::sparse_dense_matmul(latent->pattern, latent->normalized, z), p["global_" + tag]);
    ad::Tensor pre;
    if (!use_global) pre = e;
    else if (!use_local) pre = h;
    else pre = ad::add(ad::scale(e, hp.alpha), ad::scale(h, 1.0 - hp.alpha));
    z = ad::relu(pre);
    readout.push_back(z);
  }
  ForwardOutput out;
  out.z_out = ad::concat_cols(readout);
  out.logits = ad::matmul(out.z_out, p["classifier"]);
  return out;
}

ad::Tensor smooth_loss(const LatentGraph& lg, const Matrix& x, double lambda, double mu) {
  auto fit = ad::weighted_feature_smoothness(lg.pattern, lg.weights, x);
  auto mass = ad::frobenius_sq(lg.weights);
  return ad::add(ad::scale(fit, lambda), ad::scale(mass, mu));
}

LossParts total_loss(const ad::Tensor& logits, const std::vector<std::int32_t>& labels, const Mask& mask,
                     const LatentGraph* lg, const Matrix& x, const Hyperparams& hp) {
  LossParts parts;
  parts.ce = ad::masked_cross_entropy(logits, labels, mask);
  parts.smooth = lg ? smooth_loss(*lg, x, hp.lambda_smooth, hp.mu_smooth) : ad::Tensor::constant(Matrix::Zero(1, 1));
  parts.total = ad::add(parts.ce, parts.smooth);
  return parts;
}

ModelPass model_forward(const BoundParams& p, const GraphContext& ctx, const Hyperparams& hp,
                        std::uint64_t seed) {
  ModelPass pass;
  if (hp.architecture == Architecture::DualChannel) {
    auto z = structure_learner_embed(p, ctx);
    pass.latent = build_latent_graph(p, z, hp, seed);
  }
  pass.out = dual_channel_forward(p, ctx, pass.latent ? &*pass.latent : nullptr, hp);
  return pass;
}

ClientState make_client(std::int32_t id, Graph graph, NodeSplit split, ModelParams params,
                        const Hyperparams& hp, std::uint64_t seed) {
  ClientState c;
  c.client_id = id;
  c.context = GraphContext::make(graph);
  if (c.context.features.cols() != params.block("f0").value.rows())
    throw ShapeError("make_client: feature width does not match the f0 block");
  c.graph = std::move(graph);
  c.split = std::move(split);
  c.params = std::move(params);
  c.adam.config.learning_rate = hp.learning_rate;
  c.seed = seed;
  return c;
}

std::uint64_t latent_seed(const ClientState& client) {
  return mix_seed(client.seed, static_cast<std::uint64_t>(client.adam.step));
}

StepMetrics train_step(ClientState& client, const Hyperparams& hp) {
  StepMetrics m;
  try {
    ad::Tape tape;
    BoundParams bound(client.params, &tape);
    auto pass = model_forward(bound, client.context, hp, latent_seed(client));
    auto loss = total_loss(pass.out.logits, client.context.labels, client.split.train,
                           pass.latent ? &*pass.latent : nullptr, client.context.features, hp);
    tape.backward(loss.total);

    std::vector<Matrix*> values;
    std::vector<Matrix> grads;
    for (std::size_t i = 0; i < client.params.blocks.size(); ++i) {
      values.push_back(&client.params.blocks[i].value);
      grads.push_back(bound.tensors()[i].grad());
    }
    adam_step(std::span<Matrix* const>(values), grads, client.adam);

    m.loss_ce = loss.ce.item();
    m.loss_smooth = loss.smooth.item();
    m.loss_total = loss.total.item();
    m.train_accuracy = accuracy(pass.out.logits.value(), client.context.labels, client.split.train);
  } catch (const NumericFault& e) {
    throw NumericFault("client " + std::to_string(client.client_id) + ", step " +
                       std::to_string(client.adam.step + 1) + ": " + e.what());
  }
  return m;
}

Prediction predict(const ClientState& client, const Hyperparams& hp) {
  BoundParams bound(client.params, nullptr);
  auto pass = model_forward(bound, client.context, hp, latent_seed(client));
  auto loss = total_loss(pass.out.logits, client.context.labels, client.split.train,
                         pass.latent ? &*pass.latent : nullptr, client.context.features, hp);
  Prediction p;
  p.logits = pass.out.logits.value();
  p.z_out = pass.out.z_out.value();
  p.losses.loss_ce = loss.ce.item();
  p.losses.loss_smooth = loss.smooth.item();
  p.losses.loss_total = loss.total.item();
  p.losses.train_accuracy = accuracy(p.logits, client.context.labels, client.split.train);
  return p;
}

}  // namespace fedgraph
