#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

namespace cifra {

// splitmix64 finalizer. Stable across platforms; used to derive
// independent substream seeds from one top-level seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mixSeed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x9e3779b97f4a7c15ULL));
}

// Seed mixed with a string tag (e.g. a genre name), so per-group
// substreams do not depend on group iteration order.
inline std::uint64_t mixSeed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mixSeed(seed, h);
}

// Uniform draw in [0, n). Rejection sampling on the raw engine output,
// so results do not depend on the standard library's distribution
// implementation.
inline std::uint64_t boundedDraw(std::mt19937_64& rng, std::uint64_t n) {
  std::uint64_t x, r;
  do {
    x = rng();
    r = x % n;
  } while (x - r > std::numeric_limits<std::uint64_t>::max() - (n - 1));
  return r;
}

// In-place Fisher-Yates shuffle built on boundedDraw.
template <typename T>
void deterministicShuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(boundedDraw(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
inline std::vector<int> sampleWithoutReplacement(std::mt19937_64& rng, int n,
                                                 int k) {
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(
                            boundedDraw(rng, static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    out.push_back(pool[static_cast<std::size_t>(i)]);
  }
  return out;
}

// Uniform double in [0, 1) from the top 53 bits of the engine output.
inline double uniformReal(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace cifra
