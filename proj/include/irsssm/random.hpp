#pragma once

#include <cstdint>
#include <random>

#include "irsssm/types.hpp"

namespace irsssm {

/// Seeded pseudo-random stream. Independent sub-streams are derived from a
/// (seed, index...) tuple by hashing, so trial k of a sweep sees the same
/// draws no matter how trials are scheduled.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(mix(seed)) {}

  /// Stream keyed by (seed, a) or (seed, a, b).
  static RandomStream derive(std::uint64_t seed, std::uint64_t a);
  static RandomStream derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }
  /// Circularly-symmetric CN(0, variance).
  Complex complex_normal(double variance = 1.0);
  std::uint64_t next_u64() { return engine_(); }

  template <typename Derived>
  void fill_complex_normal(Eigen::MatrixBase<Derived>& out, double variance = 1.0) {
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = complex_normal(variance);
  }

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace irsssm
