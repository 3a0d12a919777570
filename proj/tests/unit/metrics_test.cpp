#include <gtest/gtest.h>

#include <cmath>

#include "fedgraph/errors.hpp"
#include "fedgraph/metrics.hpp"
#include "test_support.hpp"

using namespace fedgraph;
using namespace fgtest;

namespace {

using Labels = std::vector<std::int32_t>;
using MaskV = std::vector<std::uint8_t>;

// Counts positive/negative pairs directly.
double auc_oracle(const std::vector<double>& s, const Labels& y, const MaskV& m) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!m[i] || y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!m[j] || y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

Matrix random_orthogonal(std::mt19937_64& rng, Eigen::Index d) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(random_matrix(rng, d, d)));
  return qr.householderQ();
}

}  // namespace

TEST(Accuracy, Examples) {
  const Labels y{0, 2, 1};
  Matrix onehot = Matrix::Zero(3, 3);
  for (int i = 0; i < 3; ++i) onehot(i, y[i]) = 1.0;
  EXPECT_EQ(accuracy(onehot, y, MaskV{1, 1, 1}), 1.0);
  EXPECT_EQ(accuracy(Matrix::Constant(3, 4, 0.3), Labels{0, 0, 0}, MaskV{1, 1, 1}), 1.0);
  const Matrix logits{{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {5.0, 9.0}};
  EXPECT_NEAR(accuracy(logits, Labels{0, 1, 1, 0}, MaskV{1, 1, 1, 0}), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(accuracy(logits, Labels{0, 1, 1, 0}, MaskV{0, 0, 0, 0}), InputError);
}

TEST(Accuracy, InvariantToRowShift) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int32_t> cls(0, 3);
  for (int t = 0; t < 50; ++t) {
    const Matrix logits = random_matrix(rng, 10, 4);
    Labels y(10);
    for (auto& l : y) l = cls(rng);
    MaskV m(10, 1);
    Matrix shifted = logits;
    for (Eigen::Index i = 0; i < 10; ++i) shifted.row(i).array() += random_matrix(rng, 1, 1, 3.0)(0, 0);
    EXPECT_EQ(accuracy(logits, y, m), accuracy(shifted, y, m));
  }
}

TEST(Auc, Examples) {
  EXPECT_EQ(binary_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, Labels{0, 0, 1, 1}, MaskV{1, 1, 1, 1}), 1.0);
  EXPECT_EQ(binary_auc(std::vector<double>{0.3, 0.3, 0.3}, Labels{0, 1, 1}, MaskV{1, 1, 1}), 0.5);
  EXPECT_NEAR(binary_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, Labels{0, 0, 1, 1}, MaskV{1, 1, 1, 1}), 0.75,
              1e-15);
  EXPECT_THROW(binary_auc(std::vector<double>{0.1, 0.4}, Labels{1, 1}, MaskV{1, 1}), InputError);
  EXPECT_THROW(binary_auc(std::vector<double>{0.1, 0.4}, Labels{0, 1}, MaskV{1, 0}), InputError);
}

TEST(Auc, MatchesPairCountAndMonotoneInvariant) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> coarse(0, 5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 12;
    std::vector<double> s(n);
    Labels y(n);
    MaskV m(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse(rng) * 0.5;  // coarse grid forces ties
      y[i] = static_cast<std::int32_t>(rng() % 2);
      m[i] = static_cast<std::uint8_t>(rng() % 4 != 0);
    }
    y[0] = 0;
    y[1] = 1;
    m[0] = m[1] = 1;
    const double a = binary_auc(s, y, m);
    EXPECT_NEAR(a, auc_oracle(s, y, m), 1e-12);
    std::vector<double> mono(n);
    for (std::size_t i = 0; i < n; ++i) mono[i] = std::exp(3.0 * s[i]) - 7.0;
    EXPECT_NEAR(binary_auc(mono, y, m), a, 1e-12);
  }
}

TEST(LinkAttack, IdenticalEmbeddingsGiveHalf) {
  std::mt19937_64 rng(3);
  const auto g = random_graph(rng, 40, 0.2, 2);
  const auto r = link_inference_attack(Matrix::Ones(40, 4), g, 30, 1);
  EXPECT_EQ(r.balanced_accuracy, 0.5);
  EXPECT_EQ(r.num_pairs, 30u);
}

TEST(LinkAttack, OrthogonalEmbeddingsCannotExceedHalf) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u < 12; ++u)
    for (NodeId v = u + 1; v < 12; ++v)
      if (!(u == 0 && v == 1)) edges.push_back({u, v});
  const auto g = graph_of(12, edges);
  const auto r = link_inference_attack(Matrix::Identity(12, 12), g, 1, 4);
  EXPECT_LE(r.balanced_accuracy, 0.5);
}

TEST(LinkAttack, PlantedBlobsApproachPerfect) {
  // Two complete blobs: every edge joins same-blob nodes, every non-edge crosses.
  std::mt19937_64 rng(5);
  const std::int32_t n = 40;
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if ((u < n / 2) == (v < n / 2)) edges.push_back({u, v});
  const auto g = graph_of(n, edges);
  auto cos = [](const Matrix& e, NodeId u, NodeId v) { return e.row(u).dot(e.row(v)) / (e.row(u).norm() * e.row(v).norm()); };
  std::vector<double> attack;
  for (double sep : {0.0, 0.5, 2.0, 20.0}) {
    Matrix emb = random_matrix(rng, n, 3, 1.0);
    for (NodeId u = 0; u < n; ++u) emb(u, 0) += u < n / 2 ? sep : -sep;
    attack.push_back(link_inference_attack(emb, g, 100, 6).balanced_accuracy);
    if (sep == 20.0) {
      // Brute-force threshold sweep over all pairs: a perfect split exists.
      double best = 0.0;
      for (NodeId a = 0; a < n; ++a) {
        for (NodeId b = a + 1; b < n; ++b) {
          const double t = cos(emb, a, b);
          double tp = 0, fn = 0, tn = 0, fp = 0;
          for (NodeId u = 0; u < n; ++u)
            for (NodeId v = u + 1; v < n; ++v) {
              const bool pred = cos(emb, u, v) >= t;
              const bool edge = g.has_edge(u, v);
              (edge ? (pred ? tp : fn) : (pred ? fp : tn)) += 1;
            }
          best = std::max(best, 0.5 * (tp / (tp + fn) + tn / (tn + fp)));
        }
      }
      EXPECT_EQ(best, 1.0);
    }
  }
  EXPECT_LT(attack.front(), 0.75);
  EXPECT_GT(attack[2], attack.front());
  EXPECT_EQ(attack.back(), 1.0);
}

TEST(LinkAttack, RotationInvariant) {
  std::mt19937_64 rng(7);
  const auto g = random_graph(rng, 50, 0.15, 2);
  for (int t = 0; t < 10; ++t) {
    const Matrix emb = random_matrix(rng, 50, 5);
    const Matrix q = random_orthogonal(rng, 5);
    const auto a = link_inference_attack(emb, g, 40, 8);
    const auto b = link_inference_attack(emb * q, g, 40, 8);
    EXPECT_NEAR(a.balanced_accuracy, b.balanced_accuracy, 1e-12);
  }
}

TEST(LinkAttack, TooFewEdgesIsError) {
  EXPECT_THROW(link_inference_attack(Matrix::Ones(3, 2), triangle(), 4, 0), InputError);
}

TEST(Divergence, Examples) {
  const Matrix d{{0.3, 0.7}, {0.6, 0.4}};
  const std::vector<Matrix> same{d, d, d};
  EXPECT_EQ(client_divergence(same), Matrix::Zero(3, 3));
  const std::vector<Matrix> swapped{Matrix{{0.0, 1.0}, {0.0, 1.0}}, Matrix{{1.0, 0.0}, {1.0, 0.0}}};
  const Matrix m = client_divergence(swapped);
  EXPECT_NEAR(m(0, 1), 2.0, 1e-15);
  EXPECT_NEAR(m(1, 0), 2.0, 1e-15);
  const std::vector<Matrix> bad{Matrix::Zero(2, 2), Matrix::Zero(3, 3)};
  EXPECT_THROW(client_divergence(bad), InputError);
}

TEST(Divergence, SymmetricAndTriangle) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    std::vector<Matrix> ds;
    for (int i = 0; i < 5; ++i) ds.push_back(random_matrix(rng, 3, 3).cwiseAbs());
    const Matrix m = client_divergence(ds);
    for (int i = 0; i < 5; ++i) {
      EXPECT_EQ(m(i, i), 0.0);
      for (int j = 0; j < 5; ++j) {
        EXPECT_EQ(m(i, j), m(j, i));
        EXPECT_GE(m(i, j), 0.0);
        for (int k = 0; k < 5; ++k) EXPECT_LE(m(i, j), m(i, k) + m(k, j) + 1e-12);
      }
    }
  }
}

TEST(Stats, MeanAndSampleStd) {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(mean(xs), 2.5);
  EXPECT_NEAR(sample_std(xs), std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(sample_std(std::vector<double>{3.0}), 0.0);
}
