#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "latent/types.hpp"

namespace latent {

/// A (master seed, stream) pair. Equal pairs always produce equal draws.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Seed for sub-stream `index` of this stream. Depends only on the
  /// parent pair and the index, never on call order.
  RngSeed child(std::uint64_t index) const;

  bool operator==(const RngSeed&) const = default;
};

using Engine = std::mt19937_64;

Engine make_engine(const RngSeed& seed);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Uniform integer in [0, bound) by rejection; independent of the
/// standard library's distribution implementation.
std::uint64_t uniform_below(Engine& engine, std::uint64_t bound);

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Engine& engine);

/// Standard normal via Marsaglia's polar method.
double standard_normal(Engine& engine);

/// Gamma(shape, 1) via Marsaglia-Tsang, with the shape < 1 boost.
double gamma_variate(Engine& engine, double shape);

double beta_variate(Engine& engine, double a, double b);

/// In-place Fisher-Yates shuffle.
template <typename T>
void fisher_yates(std::vector<T>& values, Engine& engine) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(engine, i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace latent
