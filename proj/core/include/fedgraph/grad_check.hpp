#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fedgraph/autodiff.hpp"

namespace fedgraph {

struct NamedMatrix {
  std::string name;
  Matrix value;
};

struct GradCheckBlock {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double tolerance = 0.0;
  bool passed = false;

  double max_rel_error() const;
  std::vector<std::string> failed_blocks() const;
};

/// Builds a scalar loss on `tape` from one tensor per parameter (same order).
using LossBuilder = std::function<ad::Tensor(ad::Tape& tape, const std::vector<ad::Tensor>& params)>;

/// Compares analytic gradients against central differences.
///
/// The relative error of a block is max |a - n| over its entries divided by
/// max(|a|, |n|, abs_floor) over its entries, so entries that are zero up to
/// rounding do not dominate. A block passes when it is strictly below `tol`;
/// tol = 0 fails every block. Two forward passes that disagree raise a UsageError.
GradCheckReport grad_check(const LossBuilder& build_loss, const std::vector<NamedMatrix>& params,
                           double fd_step = 1e-5, double tol = 1e-4, double abs_floor = 1e-6);

}  // namespace fedgraph
