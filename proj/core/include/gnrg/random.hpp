#pragma once

#include <cstdint>
#include <random>

namespace gnrg {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser. Used to derive independent sub-seeds from a base seed
/// so that parallel runs never share a generator.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x5851f42d4c957f2dULL));
}

// Named streams so that e.g. "initial weights" and "sample states" of the same
// repetition never collide.
enum class SeedStream : std::uint64_t {
  Weights = 1,
  States = 2,
  Features = 3,
  Reinit = 4,
};

constexpr std::uint64_t derive_seed(std::uint64_t base, SeedStream stream) {
  return derive_seed(base, static_cast<std::uint64_t>(stream));
}

}  // namespace gnrg
