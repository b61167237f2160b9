#pragma once

// Seed derivation and counter-based hashing shared by every module.
//
// All randomness in the simulator flows from 64-bit seeds. Independent
// streams are derived with `derive_seed(parent, tags...)`, so the draw
// order inside one stream never perturbs another stream. Engines are
// std::mt19937_64 seeded from a derived value.

#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <random>
#include <utility>

namespace fedcomm {

using Seed = std::uint64_t;
using Engine = std::mt19937_64;

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Hash of a parent seed and an ordered list of tags.
constexpr Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = mix64(parent ^ 0x6A09E667F3BCC908ULL);
  for (auto t : tags) h = mix64(h ^ mix64(t + 0x243F6A8885A308D3ULL));
  return h;
}

inline Engine make_engine(Seed seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Engine(seq);
}

// Portable counter-based generator: output i is mix64(key + i * golden).
// Used wherever two independent processes must reproduce the same draws
// (carrier permutation, spreading chips, pilots, code construction), since
// the std distributions are not specified bit-exactly across libraries.
class CounterStream {
 public:
  explicit CounterStream(Seed key) noexcept : key_(key) {}

  std::uint64_t next() noexcept { return mix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++); }

  // Uniform integer in [0, bound). Rejection sampling, bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do x = next();
    while (x >= limit);
    return x % bound;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  Seed key_;
  std::uint64_t counter_ = 0;
};

// Fisher-Yates shuffle driven by a CounterStream.
template <typename Range>
void portable_shuffle(Range& range, CounterStream& rng) {
  using std::swap;
  const auto n = static_cast<std::uint64_t>(std::size(range));
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    swap(range[i - 1], range[j]);
  }
}

// Stream tags, kept distinct so different consumers of one master seed
// never share a stream.
namespace stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t dataset = 2;
inline constexpr std::uint64_t partition = 3;
inline constexpr std::uint64_t shuffle = 4;
inline constexpr std::uint64_t selection = 5;
inline constexpr std::uint64_t gaussian_update = 6;
inline constexpr std::uint64_t carriers = 7;
inline constexpr std::uint64_t code_chips = 8;
inline constexpr std::uint64_t pilots = 9;
inline constexpr std::uint64_t ldpc = 10;
inline constexpr std::uint64_t test_set = 11;
}  // namespace stream

}  // namespace fedcomm
