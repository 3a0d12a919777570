#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedgraph/graph.hpp"

namespace fedgraph {

/// Fraction of masked rows whose argmax equals the label; ties go to the
/// smallest class id. An empty mask is an InputError.
double accuracy(const Matrix& logits, std::span<const std::int32_t> labels, std::span<const std::uint8_t> mask);

/// Mann-Whitney AUC over masked entries with labels in {0, 1}; tied scores
/// count one half. Throws InputError unless both classes are present.
double binary_auc(std::span<const double> scores, std::span<const std::int32_t> labels,
                  std::span<const std::uint8_t> mask);

struct LinkAttackResult {
  double balanced_accuracy = 0.5;
  double threshold = 0.0;
  double true_positive_rate = 0.0;
  double true_negative_rate = 0.0;
  std::size_t num_pairs = 0;
};

/// Samples `num_pairs` distinct edges and `num_pairs` distinct uniform
/// non-edges, predicts "edge" when the cosine similarity of the two embedding
/// rows is strictly above the median similarity of the sampled pairs, and
/// reports balanced accuracy.
LinkAttackResult link_inference_attack(const Matrix& embeddings, const Graph& g, std::size_t num_pairs,
                                       std::uint64_t seed);

/// Pairwise Frobenius distances between neighbor-label distributions.
Matrix client_divergence(std::span<const Matrix> distributions);

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> xs);

}  // namespace fedgraph
