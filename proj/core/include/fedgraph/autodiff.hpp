#pragma once

// Reverse-mode differentiation over dense row-major matrices, plus the few
// sparse operators the dual-channel GNN needs.
//
// A Tape records every op whose inputs require gradients. Tensors are cheap
// shared handles; an op on constants produces a constant and records nothing.
// The tape is single use: one forward pass, one backward().

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "fedgraph/graph.hpp"
#include "fedgraph/matrix.hpp"

namespace fedgraph::ad {

class Tape;

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  Tape* tape = nullptr;
  std::string_view op = "leaf";
  // Receives this node's accumulated gradient and pushes contributions to inputs.
  std::function<void(const Node&)> backward;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  /// Untracked value.
  static Tensor constant(Matrix value);

  const Matrix& value() const;
  /// d(loss)/d(this) after Tape::backward; zeros if nothing reached this tensor.
  Matrix grad() const;
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 tensor.
  double item() const;
  Tape* tape() const { return node_ ? node_->tape : nullptr; }

 private:
  friend class Tape;
  friend struct Recorder;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Tensor variable(Matrix value);

  /// Populates grads of every tensor on this tape. `loss` must be 1x1 and
  /// recorded here; a tape can be differentiated once.
  void backward(const Tensor& loss);

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Smallest |x| over the nonzero inputs of every recorded relu; finite
  /// differences are unreliable when it is below the step.
  double relu_margin() const noexcept { return relu_margin_; }

 private:
  friend struct Recorder;
  std::vector<std::shared_ptr<detail::Node>> nodes_;
  bool consumed_ = false;
  double relu_margin_ = std::numeric_limits<double>::infinity();
};

/// Fixed CSR sparsity pattern; values live in a separate (nnz x 1) tensor so
/// they can carry gradients.
struct SparsePattern {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<std::int64_t> offsets{0};
  std::vector<NodeId> indices;

  std::size_t nnz() const noexcept { return indices.size(); }
  /// Row index of every stored entry, in storage order.
  std::vector<NodeId> row_of_entries() const;
  void validate() const;
};

using PatternPtr = std::shared_ptr<const SparsePattern>;

/// Adjacency pattern of `g` (stored entries).
PatternPtr adjacency_pattern(const Graph& g);
/// 1/deg(u) per stored entry of u; zero-degree rows have no entries.
Matrix mean_aggregation_weights(const SparsePattern& p);

// Dense primitives.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor softmax_rows(const Tensor& a);
/// Row `i` of `a` as a 1 x cols tensor.
Tensor row(const Tensor& a, Eigen::Index i);
/// a * diag(w) for a 1 x cols row vector w.
Tensor scale_cols(const Tensor& a, const Tensor& w);
Tensor gather_rows(const Tensor& a, std::span<const NodeId> index);
/// Cosine similarity of matching rows (n x 1); a zero row yields 0.
Tensor row_cosine(const Tensor& a, const Tensor& b);
/// Each row divided by its Euclidean norm; zero rows stay zero.
Tensor normalize_rows(const Tensor& a);
/// Mean over masked rows of -log softmax(logits)[label].
Tensor masked_cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels,
                            std::span<const std::uint8_t> mask);

// Sparse primitives; `weights` is nnz x 1 aligned with the pattern.
Tensor sparse_dense_matmul(const PatternPtr& pattern, const Tensor& weights, const Tensor& dense);
/// w_e / sum_{f in row(e)} |w_f|; rows whose weights are all zero stay zero.
Tensor sparse_row_normalize_abs(const PatternPtr& pattern, const Tensor& weights);
/// Sum of squared weights.
Tensor frobenius_sq(const Tensor& weights);
/// sum_e w_e * ||x_row(e) - x_col(e)||^2.
Tensor weighted_feature_smoothness(const PatternPtr& pattern, const Tensor& weights, const Matrix& x);
/// Per stored entry (u, v): a.row(u) . b.row(v), as an nnz x 1 tensor.
Tensor sparse_pair_dot(const PatternPtr& pattern, const Tensor& a, const Tensor& b);
/// Forward value 1 everywhere; backward passes the incoming gradient through unchanged.
Tensor straight_through_ones(const Tensor& a);

}  // namespace fedgraph::ad
