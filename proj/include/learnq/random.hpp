#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>

namespace learnq {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Stable across platforms; used for every seed derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for replication `index` of a run seeded with `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double exponential(Rng& rng, double rate) {
  return std::exponential_distribution<double>(rate)(rng);
}

/// Draws an index from a probability vector by inversion. Mass below zero is ignored.
template <typename Derived>
Eigen::Index sample_index(const Eigen::MatrixBase<Derived>& weights, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  Eigen::Index last_positive = -1;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) <= 0.0) continue;
    acc += weights(i);
    last_positive = i;
    if (u < acc) return i;
  }
  if (last_positive < 0) throw std::invalid_argument("sample_index: no positive weight");
  return last_positive;
}

}  // namespace learnq
