#pragma once

#include <cstdint>
#include <random>

namespace hdinf {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Identifies one independent random stream. Streams with different indices
/// never share state, so replicates can run in any order on any thread.
struct RngSeed {
  std::uint64_t base_seed = 0;
  std::uint64_t stream_index = 0;

  std::uint64_t mixed() const { return splitmix64(base_seed ^ splitmix64(stream_index + 0x632be59bd9b4e019ULL)); }

  /// Deterministic child stream, used for sub-steps of one replicate.
  RngSeed child(std::uint64_t tag) const { return {mixed(), tag}; }

  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

using Engine = std::mt19937_64;

inline Engine make_engine(const RngSeed& seed) { return Engine(seed.mixed()); }

}  // namespace hdinf
