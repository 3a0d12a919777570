#include "fedgraph/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "fedgraph/errors.hpp"

namespace fedgraph {

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& b : blocks) m = std::max(m, b.max_rel_error);
  return m;
}

std::vector<std::string> GradCheckReport::failed_blocks() const {
  std::vector<std::string> out;
  for (const auto& b : blocks) {
    if (!b.passed) out.push_back(b.name);
  }
  return out;
}

namespace {

double evaluate(const LossBuilder& build_loss, const std::vector<Matrix>& values) {
  ad::Tape tape;
  std::vector<ad::Tensor> ts;
  ts.reserve(values.size());
  for (const auto& v : values) ts.push_back(tape.variable(v));
  return build_loss(tape, ts).item();
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& build_loss, const std::vector<NamedMatrix>& params,
                           double fd_step, double tol, double abs_floor) {
  if (!(fd_step > 0.0)) throw UsageError("grad_check: fd_step must be positive");
  std::vector<Matrix> values;
  for (const auto& p : params) values.push_back(p.value);

  std::vector<Matrix> analytic;
  double base = 0.0;
  {
    ad::Tape tape;
    std::vector<ad::Tensor> ts;
    for (const auto& v : values) ts.push_back(tape.variable(v));
    auto loss = build_loss(tape, ts);
    base = loss.item();
    tape.backward(loss);
    for (const auto& t : ts) analytic.push_back(t.grad());
  }
  if (evaluate(build_loss, values) != base)
    throw UsageError("grad_check: loss closure is not deterministic (two forward passes disagree)");

  GradCheckReport report;
  report.tolerance = tol;
  report.passed = true;
  for (std::size_t b = 0; b < values.size(); ++b) {
    GradCheckBlock block;
    block.name = params[b].name;
    double scale = abs_floor;
    for (Eigen::Index i = 0; i < values[b].rows(); ++i) {
      for (Eigen::Index j = 0; j < values[b].cols(); ++j) {
        const double orig = values[b](i, j);
        values[b](i, j) = orig + fd_step;
        const double up = evaluate(build_loss, values);
        values[b](i, j) = orig - fd_step;
        const double down = evaluate(build_loss, values);
        values[b](i, j) = orig;
        const double numeric = (up - down) / (2.0 * fd_step);
        const double a = analytic[b](i, j);
        block.max_abs_error = std::max(block.max_abs_error, std::abs(a - numeric));
        scale = std::max({scale, std::abs(a), std::abs(numeric)});
      }
    }
    block.max_rel_error = block.max_abs_error / scale;
    block.passed = block.max_rel_error < tol;
    report.passed = report.passed && block.passed;
    report.blocks.push_back(std::move(block));
  }
  return report;
}

}  // namespace fedgraph
