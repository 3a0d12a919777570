#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedgraph/matrix.hpp"

namespace fedgraph {

struct AdamConfig {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators are created on the first step and keep the parameter
/// shapes from then on.
struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step = 0;
};

/// One bias-corrected Adam update of every parameter in place.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state);
void adam_step(std::vector<Matrix>& params, std::span<const Matrix> grads, AdamState& state);

}  // namespace fedgraph
