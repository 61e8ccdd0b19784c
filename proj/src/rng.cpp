#include "latent/rng.hpp"

#include <cmath>

namespace latent {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngSeed RngSeed::child(std::uint64_t index) const {
  return {seed, mix64(stream ^ mix64(index + 0x632be59bd9b4e019ULL))};
}

Engine make_engine(const RngSeed& seed) {
  const std::uint64_t a = mix64(seed.seed);
  const std::uint64_t b = mix64(seed.stream ^ 0xd1b54a32d192ed03ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Engine(seq);
}

std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
  // 2^64 mod bound; draws below it would bias the low residues.
  const std::uint64_t threshold = (0 - bound) % bound;
  std::uint64_t draw;
  do {
    draw = engine();
  } while (draw < threshold);
  return draw % bound;
}

double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

double standard_normal(Engine& engine) {
  double u, v, s;
  do {
    u = 2.0 * uniform01(engine) - 1.0;
    v = 2.0 * uniform01(engine) - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  // The second variate is discarded so each call consumes a fixed pattern.
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

double gamma_variate(Engine& engine, double shape) {
  if (shape < 1.0) {
    const double u = uniform01(engine);
    return gamma_variate(engine, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = standard_normal(engine);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(engine);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double beta_variate(Engine& engine, double a, double b) {
  const double x = gamma_variate(engine, a);
  const double y = gamma_variate(engine, b);
  if (x + y == 0.0) {
    // Both gammas underflowed (tiny shapes): pick an endpoint by the mean.
    return uniform01(engine) < a / (a + b) ? 1.0 : 0.0;
  }
  return x / (x + y);
}

}  // namespace latent
