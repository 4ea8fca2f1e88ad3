#pragma once

#include <cstdint>

namespace popdyn {

/// splitmix64 finalizer; used to derive well-separated seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Deterministic seed-splitting scheme: every random stream in the toolkit
/// (replication k of a run, noise stream, corpus draw) uses
/// derive_seed(base, k), so results are reproducible from one base seed and
/// independent of execution order.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base + 0x9E3779B97F4A7C15ull * (stream + 1));
}

}  // namespace popdyn
