#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace fedgraph {

// Row-major so that node rows are contiguous; all numerics are 64-bit.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using NodeId = std::int32_t;

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child seeds from a parent
// seed and an index so per-client / per-repeat streams never overlap.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace fedgraph
