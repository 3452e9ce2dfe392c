#pragma once

#include <cstdint>
#include <random>

namespace pacb {

using Engine = std::mt19937_64;

// SplitMix64 finalizer; a bijection on 64-bit words with good avalanche.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Identifies one random stream. Streams are derived from (master_seed,
// stream_index) alone, so a job reproduces its draws no matter which thread
// runs it or in what order.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  // Stream for the i-th sub-task of this stream.
  [[nodiscard]] constexpr SeedSpec child(std::uint64_t i) const noexcept {
    return {master_seed, splitmix64(stream_index ^ splitmix64(i + 0x632be59bd9b4e019ULL))};
  }

  [[nodiscard]] Engine engine() const {
    const std::uint64_t a = splitmix64(master_seed);
    const std::uint64_t b = splitmix64(a ^ stream_index);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Engine(seq);
  }

  friend constexpr bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

}  // namespace pacb
