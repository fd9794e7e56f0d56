#pragma once

#include <cstdint>
#include <numbers>
#include <random>

namespace dbell {

using Rng = std::mt19937_64;

/// Domains keep the random streams of different pipeline stages disjoint.
enum class StreamDomain : std::uint64_t {
  transmission_matrix = 1,
  alice = 2,
  counts = 3,
  search = 4,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Splittable seed derivation: (seed, domain, index) -> independent stream seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, StreamDomain domain,
                                    std::uint64_t index = 0) noexcept {
  auto h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(domain));
  return splitmix64(h ^ splitmix64(index));
}

inline Rng make_stream(std::uint64_t seed, StreamDomain domain, std::uint64_t index = 0) {
  return Rng{derive_seed(seed, domain, index)};
}

/// Uniform double in [0, 1) from the top 53 bits; identical across standard libraries.
template <class Generator>
double uniform01(Generator& gen) {
  static_assert(Generator::max() - Generator::min() == ~std::uint64_t{0},
                "uniform01 expects a full-range 64-bit generator");
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

template <class Generator>
double uniform_angle(Generator& gen) {
  return 2.0 * std::numbers::pi * uniform01(gen);
}

}  // namespace dbell
