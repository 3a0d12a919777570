#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedgraph/grad_check.hpp"
#include "fedgraph/model.hpp"

namespace fedgraph {

struct SelfTestCase {
  std::string name;
  Hyperparams hp;
  GradCheckReport report;
};

/// Gradient check of the full training loss on a 12-node, 3-class
/// generated graph. The latent pattern is selected once from the initial
/// parameters and held fixed while the finite differences run.
GradCheckReport model_grad_check(const Hyperparams& hp, std::uint64_t seed, double tol = 1e-4);

/// model_grad_check over the dual-channel variants (multi-head and cosine
/// metric, top-k and Bernoulli sparsifier) and the single-channel model.
std::vector<SelfTestCase> run_self_test(std::uint64_t seed, double tol = 1e-4);

std::string self_test_json(const std::vector<SelfTestCase>& cases);

}  // namespace fedgraph
