#include "fedgraph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "fedgraph/errors.hpp"

namespace fedgraph::ad {

using detail::Node;

namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream s;
  s << m.rows() << "x" << m.cols();
  return s.str();
}

[[noreturn]] void shape_fail(std::string_view op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

void accumulate(Node& node, const Matrix& contribution) {
  if (!node.requires_grad) return;
  if (node.grad.size() == 0) node.grad = contribution;
  else node.grad += contribution;
}

}  // namespace

struct Recorder {
  using Backward = std::function<void(const Node&)>;

  static Tensor make(std::string_view op, Matrix value, std::initializer_list<const Tensor*> inputs,
                     Backward backward) {
    Tape* tape = nullptr;
    for (const Tensor* in : inputs) {
      if (!in->defined()) throw UsageError(std::string(op) + ": undefined input tensor");
      if (!in->requires_grad()) continue;
      if (tape != nullptr && tape != in->tape())
        throw UsageError(std::string(op) + ": inputs are recorded on different tapes");
      tape = in->tape();
    }
    if (!value.allFinite()) {
      throw NumericFault(std::string(op) + ": produced a non-finite value (output " +
                         shape_str(value) + ")");
    }
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->op = op;
    if (tape != nullptr) {
      if (tape->consumed_) throw UsageError(std::string(op) + ": tape was already differentiated");
      node->requires_grad = true;
      node->tape = tape;
      node->backward = std::move(backward);
      tape->nodes_.push_back(node);
    }
    return Tensor(std::move(node));
  }

  static std::shared_ptr<Node> ptr(const Tensor& t) { return t.node_; }

  static void note_relu_input(const Tensor& a) {
    Tape* tape = a.tape();
    if (tape == nullptr || !a.requires_grad()) return;
    const Matrix& v = a.value();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double x = v.data()[i];
      if (x != 0.0) tape->relu_margin_ = std::min(tape->relu_margin_, std::abs(x));
    }
  }
};

Tensor Tensor::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

const Matrix& Tensor::value() const {
  if (!node_) throw UsageError("tensor: access to an undefined tensor");
  return node_->value;
}

Matrix Tensor::grad() const {
  const auto& v = value();
  if (node_->grad.size() == 0) return Matrix::Zero(v.rows(), v.cols());
  return node_->grad;
}

double Tensor::item() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("item: tensor is " + shape_str(v) + ", not 1x1");
  return v(0, 0);
}

Tensor Tape::variable(Matrix value) {
  if (consumed_) throw UsageError("tape: cannot add variables after backward()");
  if (!value.allFinite()) throw NumericFault("variable: non-finite initial value");
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  node->tape = this;
  nodes_.push_back(node);
  return Tensor(std::move(node));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || !loss.requires_grad() || loss.tape() != this)
    throw UsageError("backward: loss is not recorded on this tape (detached tensor)");
  if (loss.rows() != 1 || loss.cols() != 1)
    throw UsageError("backward: loss must be a scalar, got " + shape_str(loss.value()));
  if (consumed_) throw UsageError("backward: tape was already differentiated");
  consumed_ = true;
  for (auto& n : nodes_) n->grad.resize(0, 0);
  auto root = Recorder::ptr(loss);
  root->grad = Matrix::Ones(1, 1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.grad.size() != 0 && n.backward) n.backward(n);
  }
}

std::vector<NodeId> SparsePattern::row_of_entries() const {
  std::vector<NodeId> out(nnz());
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (auto e = offsets[static_cast<std::size_t>(r)]; e < offsets[static_cast<std::size_t>(r) + 1]; ++e)
      out[static_cast<std::size_t>(e)] = static_cast<NodeId>(r);
  }
  return out;
}

void SparsePattern::validate() const {
  if (offsets.size() != static_cast<std::size_t>(rows) + 1 || offsets.front() != 0 ||
      static_cast<std::size_t>(offsets.back()) != indices.size())
    throw ShapeError("sparse pattern: inconsistent offsets");
  for (std::size_t r = 0; r + 1 < offsets.size(); ++r) {
    if (offsets[r] > offsets[r + 1]) throw ShapeError("sparse pattern: offsets not monotone");
  }
  for (auto c : indices) {
    if (c < 0 || c >= cols) throw ShapeError("sparse pattern: column out of range");
  }
}

PatternPtr adjacency_pattern(const Graph& g) {
  auto p = std::make_shared<SparsePattern>();
  p->rows = g.num_nodes();
  p->cols = g.num_nodes();
  p->offsets = g.row_offsets();
  p->indices = g.col_indices();
  return p;
}

Matrix mean_aggregation_weights(const SparsePattern& p) {
  Matrix w(static_cast<Eigen::Index>(p.nnz()), 1);
  for (Eigen::Index r = 0; r < p.rows; ++r) {
    const auto b = p.offsets[static_cast<std::size_t>(r)];
    const auto e = p.offsets[static_cast<std::size_t>(r) + 1];
    for (auto i = b; i < e; ++i) w(i, 0) = 1.0 / static_cast<double>(e - b);
  }
  return w;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.rows())
    shape_fail("matmul", shape_str(av) + " and " + shape_str(bv) + " are incompatible");
  auto pa = Recorder::ptr(a);
  auto pb = Recorder::ptr(b);
  return Recorder::make("matmul", av * bv, {&a, &b}, [pa, pb](const Node& self) {
    if (pa->requires_grad) accumulate(*pa, self.grad * pb->value.transpose());
    if (pb->requires_grad) accumulate(*pb, pa->value.transpose() * self.grad);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_fail("add", shape_str(a.value()) + " vs " + shape_str(b.value()));
  auto pa = Recorder::ptr(a);
  auto pb = Recorder::ptr(b);
  return Recorder::make("add", a.value() + b.value(), {&a, &b}, [pa, pb](const Node& self) {
    accumulate(*pa, self.grad);
    accumulate(*pb, self.grad);
  });
}

Tensor scale(const Tensor& a, double c) {
  auto pa = Recorder::ptr(a);
  return Recorder::make("scale", c * a.value(), {&a},
                        [pa, c](const Node& self) { accumulate(*pa, c * self.grad); });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_fail("hadamard", shape_str(a.value()) + " vs " + shape_str(b.value()));
  auto pa = Recorder::ptr(a);
  auto pb = Recorder::ptr(b);
  return Recorder::make("hadamard", a.value().cwiseProduct(b.value()), {&a, &b},
                        [pa, pb](const Node& self) {
                          if (pa->requires_grad) accumulate(*pa, self.grad.cwiseProduct(pb->value));
                          if (pb->requires_grad) accumulate(*pb, self.grad.cwiseProduct(pa->value));
                        });
}

Tensor relu(const Tensor& a) {
  auto pa = Recorder::ptr(a);
  Recorder::note_relu_input(a);
  return Recorder::make("relu", a.value().cwiseMax(0.0), {&a}, [pa](const Node& self) {
    accumulate(*pa, (pa->value.array() > 0.0).cast<double>().matrix().cwiseProduct(self.grad));
  });
}

Tensor sum(const Tensor& a) {
  auto pa = Recorder::ptr(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return Recorder::make("sum", std::move(out), {&a}, [pa](const Node& self) {
    accumulate(*pa, Matrix::Constant(pa->value.rows(), pa->value.cols(), self.grad(0, 0)));
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) shape_fail("concat_cols", "no inputs");
  const auto rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) shape_fail("concat_cols", "row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::shared_ptr<Node>> nodes;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    nodes.push_back(Recorder::ptr(p));
  }
  // initializer_list cannot be built from a span, so check tapes via a chain of binary records.
  Tape* tape = nullptr;
  for (const auto& p : parts) {
    if (p.requires_grad()) {
      if (tape && tape != p.tape()) throw UsageError("concat_cols: inputs are recorded on different tapes");
      tape = p.tape();
    }
  }
  const Tensor* carrier = nullptr;
  for (const auto& p : parts) {
    if (p.requires_grad()) carrier = &p;
  }
  if (carrier == nullptr) carrier = &parts.front();
  return Recorder::make("concat_cols", std::move(out), {carrier}, [nodes](const Node& self) {
    Eigen::Index off = 0;
    for (const auto& n : nodes) {
      const auto c = n->value.cols();
      if (n->requires_grad) accumulate(*n, self.grad.middleCols(off, c));
      off += c;
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  const auto& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (Eigen::Index i = 0; i < av.rows(); ++i) {
    const double mx = av.row(i).maxCoeff();
    out.row(i) = (av.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  auto pa = Recorder::ptr(a);
  return Recorder::make("softmax_rows", std::move(out), {&a}, [pa](const Node& self) {
    const Matrix& s = self.value;
    Matrix g = self.grad;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double dot = g.row(i).dot(s.row(i));
      g.row(i) = s.row(i).cwiseProduct((g.row(i).array() - dot).matrix());
    }
    accumulate(*pa, g);
  });
}

Tensor row(const Tensor& a, Eigen::Index i) {
  if (i < 0 || i >= a.rows()) shape_fail("row", "index out of range for " + shape_str(a.value()));
  auto pa = Recorder::ptr(a);
  return Recorder::make("row", a.value().row(i), {&a}, [pa, i](const Node& self) {
    Matrix g = Matrix::Zero(pa->value.rows(), pa->value.cols());
    g.row(i) = self.grad;
    accumulate(*pa, g);
  });
}

Tensor scale_cols(const Tensor& a, const Tensor& w) {
  if (w.rows() != 1 || w.cols() != a.cols())
    shape_fail("scale_cols", shape_str(a.value()) + " with weight " + shape_str(w.value()));
  auto pa = Recorder::ptr(a);
  auto pw = Recorder::ptr(w);
  Matrix out = a.value() * w.value().row(0).asDiagonal();
  return Recorder::make("scale_cols", std::move(out), {&a, &w}, [pa, pw](const Node& self) {
    if (pa->requires_grad) accumulate(*pa, self.grad * pw->value.row(0).asDiagonal());
    if (pw->requires_grad) accumulate(*pw, self.grad.cwiseProduct(pa->value).colwise().sum());
  });
}

Tensor gather_rows(const Tensor& a, std::span<const NodeId> index) {
  const auto& av = a.value();
  Matrix out(static_cast<Eigen::Index>(index.size()), av.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= av.rows()) shape_fail("gather_rows", "row index out of range");
    out.row(static_cast<Eigen::Index>(r)) = av.row(index[r]);
  }
  auto pa = Recorder::ptr(a);
  std::vector<NodeId> idx(index.begin(), index.end());
  return Recorder::make("gather_rows", std::move(out), {&a}, [pa, idx = std::move(idx)](const Node& self) {
    Matrix g = Matrix::Zero(pa->value.rows(), pa->value.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) g.row(idx[r]) += self.grad.row(static_cast<Eigen::Index>(r));
    accumulate(*pa, g);
  });
}

Tensor row_cosine(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_fail("row_cosine", shape_str(a.value()) + " vs " + shape_str(b.value()));
  const auto& av = a.value();
  const auto& bv = b.value();
  const auto n = av.rows();
  Matrix out(n, 1);
  Vector na(n), nb(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    na(i) = av.row(i).norm();
    nb(i) = bv.row(i).norm();
    out(i, 0) = (na(i) > 0.0 && nb(i) > 0.0) ? av.row(i).dot(bv.row(i)) / (na(i) * nb(i)) : 0.0;
  }
  auto pa = Recorder::ptr(a);
  auto pb = Recorder::ptr(b);
  return Recorder::make("row_cosine", std::move(out), {&a, &b},
                        [pa, pb, na = std::move(na), nb = std::move(nb)](const Node& self) {
                          const auto& A = pa->value;
                          const auto& B = pb->value;
                          Matrix ga = Matrix::Zero(A.rows(), A.cols());
                          Matrix gb = Matrix::Zero(B.rows(), B.cols());
                          for (Eigen::Index i = 0; i < A.rows(); ++i) {
                            if (na(i) == 0.0 || nb(i) == 0.0) continue;
                            const double g = self.grad(i, 0);
                            const double c = self.value(i, 0);
                            const double inv = 1.0 / (na(i) * nb(i));
                            ga.row(i) = g * (B.row(i) * inv - c * A.row(i) / (na(i) * na(i)));
                            gb.row(i) = g * (A.row(i) * inv - c * B.row(i) / (nb(i) * nb(i)));
                          }
                          if (pa->requires_grad) accumulate(*pa, ga);
                          if (pb->requires_grad) accumulate(*pb, gb);
                        });
}

Tensor masked_cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels,
                            std::span<const std::uint8_t> mask) {
  const auto& z = logits.value();
  if (static_cast<std::size_t>(z.rows()) != labels.size() || labels.size() != mask.size())
    shape_fail("masked_cross_entropy", "logits " + shape_str(z) + " vs " +
                                           std::to_string(labels.size()) + " labels / " +
                                           std::to_string(mask.size()) + " mask entries");
  std::size_t count = 0;
  for (auto m : mask) count += m ? 1 : 0;
  if (count == 0) throw InputError("masked_cross_entropy: empty mask");
  Matrix probs(z.rows(), z.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    probs.row(i) = (z.row(i).array() - lse).exp().matrix();
    if (mask[static_cast<std::size_t>(i)]) {
      const auto y = labels[static_cast<std::size_t>(i)];
      if (y < 0 || y >= z.cols()) shape_fail("masked_cross_entropy", "label out of range");
      loss += lse - z(i, y);
    }
  }
  Matrix out(1, 1);
  out(0, 0) = loss / static_cast<double>(count);
  auto pl = Recorder::ptr(logits);
  std::vector<std::int32_t> y(labels.begin(), labels.end());
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return Recorder::make(
      "masked_cross_entropy", std::move(out), {&logits},
      [pl, probs = std::move(probs), y = std::move(y), m = std::move(m), count](const Node& self) {
        Matrix g = Matrix::Zero(probs.rows(), probs.cols());
        const double s = self.grad(0, 0) / static_cast<double>(count);
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
          if (!m[static_cast<std::size_t>(i)]) continue;
          g.row(i) = s * probs.row(i);
          g(i, y[static_cast<std::size_t>(i)]) -= s;
        }
        accumulate(*pl, g);
      });
}

namespace {

void check_weights(std::string_view op, const PatternPtr& p, const Tensor& w) {
  if (!p) shape_fail(op, "null pattern");
  if (w.cols() != 1 || static_cast<std::size_t>(w.rows()) != p->nnz())
    shape_fail(op, "weights " + shape_str(w.value()) + " for a pattern with " +
                       std::to_string(p->nnz()) + " entries");
}

}  // namespace

Tensor sparse_dense_matmul(const PatternPtr& pattern, const Tensor& weights, const Tensor& dense) {
  check_weights("sparse_dense_matmul", pattern, weights);
  const auto& d = dense.value();
  if (d.rows() != pattern->cols)
    shape_fail("sparse_dense_matmul", "pattern has " + std::to_string(pattern->cols) +
                                          " columns but dense input is " + shape_str(d));
  const auto& w = weights.value();
  Matrix out = Matrix::Zero(pattern->rows, d.cols());
  for (Eigen::Index r = 0; r < pattern->rows; ++r) {
    for (auto e = pattern->offsets[static_cast<std::size_t>(r)]; e < pattern->offsets[static_cast<std::size_t>(r) + 1]; ++e)
      out.row(r) += w(e, 0) * d.row(pattern->indices[static_cast<std::size_t>(e)]);
  }
  auto pw = Recorder::ptr(weights);
  auto pd = Recorder::ptr(dense);
  return Recorder::make("sparse_dense_matmul", std::move(out), {&weights, &dense},
                        [pattern, pw, pd](const Node& self) {
                          const auto& W = pw->value;
                          const auto& D = pd->value;
                          Matrix gd;
                          Matrix gw;
                          if (pd->requires_grad) gd = Matrix::Zero(D.rows(), D.cols());
                          if (pw->requires_grad) gw = Matrix::Zero(W.rows(), 1);
                          for (Eigen::Index r = 0; r < pattern->rows; ++r) {
                            for (auto e = pattern->offsets[static_cast<std::size_t>(r)];
                                 e < pattern->offsets[static_cast<std::size_t>(r) + 1]; ++e) {
                              const auto c = pattern->indices[static_cast<std::size_t>(e)];
                              if (pd->requires_grad) gd.row(c) += W(e, 0) * self.grad.row(r);
                              if (pw->requires_grad) gw(e, 0) = self.grad.row(r).dot(D.row(c));
                            }
                          }
                          if (pd->requires_grad) accumulate(*pd, gd);
                          if (pw->requires_grad) accumulate(*pw, gw);
                        });
}

Tensor sparse_row_normalize_abs(const PatternPtr& pattern, const Tensor& weights) {
  check_weights("sparse_row_normalize_abs", pattern, weights);
  const auto& w = weights.value();
  Matrix out(w.rows(), 1);
  Vector norm(pattern->rows);
  for (Eigen::Index r = 0; r < pattern->rows; ++r) {
    const auto b = pattern->offsets[static_cast<std::size_t>(r)];
    const auto e = pattern->offsets[static_cast<std::size_t>(r) + 1];
    double s = 0.0;
    for (auto i = b; i < e; ++i) s += std::abs(w(i, 0));
    norm(r) = s;
    for (auto i = b; i < e; ++i) out(i, 0) = s > 0.0 ? w(i, 0) / s : 0.0;
  }
  auto pw = Recorder::ptr(weights);
  return Recorder::make("sparse_row_normalize_abs", std::move(out), {&weights},
                        [pattern, pw, norm = std::move(norm)](const Node& self) {
                          const auto& W = pw->value;
                          Matrix g = Matrix::Zero(W.rows(), 1);
                          for (Eigen::Index r = 0; r < pattern->rows; ++r) {
                            const double s = norm(r);
                            if (s == 0.0) continue;
                            const auto b = pattern->offsets[static_cast<std::size_t>(r)];
                            const auto e = pattern->offsets[static_cast<std::size_t>(r) + 1];
                            double dot = 0.0;
                            for (auto i = b; i < e; ++i) dot += self.grad(i, 0) * W(i, 0);
                            for (auto i = b; i < e; ++i) {
                              const double sign = W(i, 0) > 0.0 ? 1.0 : (W(i, 0) < 0.0 ? -1.0 : 0.0);
                              g(i, 0) = self.grad(i, 0) / s - sign * dot / (s * s);
                            }
                          }
                          accumulate(*pw, g);
                        });
}

Tensor frobenius_sq(const Tensor& weights) {
  Matrix out(1, 1);
  out(0, 0) = weights.value().squaredNorm();
  auto pw = Recorder::ptr(weights);
  return Recorder::make("frobenius_sq", std::move(out), {&weights}, [pw](const Node& self) {
    accumulate(*pw, 2.0 * self.grad(0, 0) * pw->value);
  });
}

Tensor weighted_feature_smoothness(const PatternPtr& pattern, const Tensor& weights, const Matrix& x) {
  check_weights("weighted_feature_smoothness", pattern, weights);
  if (x.rows() != pattern->rows || x.rows() != pattern->cols)
    shape_fail("weighted_feature_smoothness", "features " + shape_str(x) + " do not match the pattern");
  Matrix dist(static_cast<Eigen::Index>(pattern->nnz()), 1);
  for (Eigen::Index r = 0; r < pattern->rows; ++r) {
    for (auto e = pattern->offsets[static_cast<std::size_t>(r)]; e < pattern->offsets[static_cast<std::size_t>(r) + 1]; ++e)
      dist(e, 0) = (x.row(r) - x.row(pattern->indices[static_cast<std::size_t>(e)])).squaredNorm();
  }
  Matrix out(1, 1);
  out(0, 0) = weights.value().col(0).dot(dist.col(0));
  auto pw = Recorder::ptr(weights);
  return Recorder::make("weighted_feature_smoothness", std::move(out), {&weights},
                        [pw, dist = std::move(dist)](const Node& self) {
                          accumulate(*pw, self.grad(0, 0) * dist);
                        });
}

Tensor straight_through_ones(const Tensor& a) {
  auto pa = Recorder::ptr(a);
  return Recorder::make("straight_through_ones", Matrix::Ones(a.rows(), a.cols()), {&a},
                        [pa](const Node& self) { accumulate(*pa, self.grad); });
}

}  // namespace fedgraph::ad

namespace fedgraph::ad {

Tensor normalize_rows(const Tensor& a) {
  const auto& av = a.value();
  Matrix out = av;
  Vector norms(av.rows());
  for (Eigen::Index i = 0; i < av.rows(); ++i) {
    norms(i) = av.row(i).norm();
    if (norms(i) > 0.0) out.row(i) /= norms(i);
  }
  auto pa = Recorder::ptr(a);
  return Recorder::make("normalize_rows", std::move(out), {&a},
                        [pa, norms = std::move(norms)](const Node& self) {
                          Matrix g = Matrix::Zero(self.value.rows(), self.value.cols());
                          for (Eigen::Index i = 0; i < g.rows(); ++i) {
                            if (norms(i) == 0.0) continue;
                            const double dot = self.grad.row(i).dot(self.value.row(i));
                            g.row(i) = (self.grad.row(i) - dot * self.value.row(i)) / norms(i);
                          }
                          accumulate(*pa, g);
                        });
}

Tensor sparse_pair_dot(const PatternPtr& pattern, const Tensor& a, const Tensor& b) {
  if (!pattern) shape_fail("sparse_pair_dot", "null pattern");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() != pattern->rows || bv.rows() != pattern->cols || av.cols() != bv.cols())
    shape_fail("sparse_pair_dot", shape_str(av) + " and " + shape_str(bv) + " do not match the pattern");
  Matrix out(static_cast<Eigen::Index>(pattern->nnz()), 1);
  for (Eigen::Index r = 0; r < pattern->rows; ++r) {
    for (auto e = pattern->offsets[static_cast<std::size_t>(r)]; e < pattern->offsets[static_cast<std::size_t>(r) + 1]; ++e)
      out(e, 0) = av.row(r).dot(bv.row(pattern->indices[static_cast<std::size_t>(e)]));
  }
  auto pa = Recorder::ptr(a);
  auto pb = Recorder::ptr(b);
  return Recorder::make("sparse_pair_dot", std::move(out), {&a, &b}, [pattern, pa, pb](const Node& self) {
    const auto& A = pa->value;
    const auto& B = pb->value;
    Matrix ga = Matrix::Zero(A.rows(), A.cols());
    Matrix gb = Matrix::Zero(B.rows(), B.cols());
    for (Eigen::Index r = 0; r < pattern->rows; ++r) {
      for (auto e = pattern->offsets[static_cast<std::size_t>(r)]; e < pattern->offsets[static_cast<std::size_t>(r) + 1]; ++e) {
        const auto c = pattern->indices[static_cast<std::size_t>(e)];
        const double g = self.grad(e, 0);
        ga.row(r) += g * B.row(c);
        gb.row(c) += g * A.row(r);
      }
    }
    if (pa->requires_grad) accumulate(*pa, ga);
    if (pb->requires_grad) accumulate(*pb, gb);
  });
}

}  // namespace fedgraph::ad
