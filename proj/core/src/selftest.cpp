#include "fedgraph/selftest.hpp"

#include <json.hpp>

#include "fedgraph/errors.hpp"
#include "fedgraph/synthgen.hpp"

namespace fedgraph {

namespace {

Hyperparams small_hp() {
  Hyperparams hp;
  hp.k_neighbors = 4;
  hp.num_heads = 2;
  hp.num_layers = 2;
  hp.hidden_dim = 6;
  return hp;
}

}  // namespace

GradCheckReport model_grad_check(const Hyperparams& hp, std::uint64_t seed, double tol) {
  constexpr double fd_step = 1e-5;
  constexpr double min_margin = 1e-3;
  constexpr int max_attempts = 200;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const auto s = mix_seed(seed, static_cast<std::uint64_t>(attempt));
    GeneratorConfig gen;
    gen.num_nodes = 12;
    gen.num_classes = 3;
    gen.target_homophily = 0.5;
    gen.mean_degree = 3.0;
    gen.feature_dim = 4;
    gen.seed = mix_seed(s, 1);
    const Graph g = generate_graph(gen);
    const auto ctx = GraphContext::make(g);
    const auto split = five_group_split(g.num_nodes(), mix_seed(s, 2));
    const auto params = init_params(hp, g.features().cols(), g.num_classes(), mix_seed(s, 3));

    ad::PatternPtr pattern;
    if (hp.architecture == Architecture::DualChannel) {
      BoundParams bound(params, nullptr);
      const auto z = structure_learner_embed(bound, ctx);
      const Matrix heads = bound.has("sl_heads") ? bound["sl_heads"].value() : Matrix();
      pattern = select_latent_edges(pairwise_metric_matrix(heads, z.value(), hp.metric), hp, mix_seed(s, 4));
    }

    auto build = [&](ad::Tape&, const std::vector<ad::Tensor>& tensors) {
      BoundParams bound(params, tensors);
      std::optional<LatentGraph> latent;
      if (pattern) latent = latent_graph_on_pattern(bound, structure_learner_embed(bound, ctx), pattern, hp);
      const auto out = dual_channel_forward(bound, ctx, latent ? &*latent : nullptr, hp);
      return total_loss(out.logits, ctx.labels, split.train, latent ? &*latent : nullptr, ctx.features, hp).total;
    };

    // Redraw instances whose relu inputs sit too close to the kink.
    {
      ad::Tape tape;
      std::vector<ad::Tensor> ts;
      for (const auto& b : params.blocks) ts.push_back(tape.variable(b.value));
      build(tape, ts);
      if (tape.relu_margin() < min_margin) continue;
    }
    std::vector<NamedMatrix> named;
    for (const auto& b : params.blocks) named.push_back({b.name, b.value});
    return grad_check(build, named, fd_step, tol);
  }
  throw NumericFault("model_grad_check: no instance without relu inputs near zero");
}

std::vector<SelfTestCase> run_self_test(std::uint64_t seed, double tol) {
  std::vector<SelfTestCase> cases;
  auto add = [&](std::string name, Hyperparams hp) {
    hp.validate();
    auto report = model_grad_check(hp, seed, tol);
    cases.push_back({std::move(name), hp, std::move(report)});
  };
  const auto base = small_hp();
  add("dual_multihead_topk", base);
  auto cos = base;
  cos.metric = MetricKind::Cosine;
  add("dual_cosine_topk", cos);
  auto bern = base;
  bern.sparsifier = Sparsifier::Bernoulli;
  add("dual_multihead_bernoulli", bern);
  auto shared = base;
  shared.share_f0 = true;
  shared.alpha = 0.5;
  add("dual_shared_f0", shared);
  auto single = base;
  single.architecture = Architecture::SingleChannel;
  add("single_channel", single);
  return cases;
}

std::string self_test_json(const std::vector<SelfTestCase>& cases) {
  nlohmann::json j;
  bool all = true;
  j["cases"] = nlohmann::json::array();
  for (const auto& c : cases) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : c.report.blocks)
      blocks.push_back({{"block", b.name},
                        {"max_rel_error", b.max_rel_error},
                        {"max_abs_error", b.max_abs_error},
                        {"passed", b.passed}});
    j["cases"].push_back({{"name", c.name},
                          {"tolerance", c.report.tolerance},
                          {"max_rel_error", c.report.max_rel_error()},
                          {"passed", c.report.passed},
                          {"blocks", blocks}});
    all = all && c.report.passed;
  }
  j["passed"] = all;
  return j.dump(2);
}

}  // namespace fedgraph
