#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace noisyre {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// splitmix64 stream; bit-identical across platforms, cheap to reseed per stream.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  // [0,1) with 53 bits of precision
  double uniform() { return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // unbiased draw from [0, n) via rejection
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t rem = (UINT64_MAX % bound + 1) % bound;  // 2^64 mod n
    std::uint64_t x = next_u64();
    while (rem != 0 && x >= 0 - rem) x = next_u64();
    return static_cast<std::size_t>(x % bound);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

private:
  std::uint64_t state_;
};

// Derives an independent stream seed from a base seed and up to three tag words.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t s = mix64(base ^ 0x6A09E667F3BCC909ull);
  s = mix64(s ^ a);
  s = mix64(s ^ b);
  s = mix64(s ^ c);
  return s;
}

// Fixed stream tags so independent consumers never share a sequence.
namespace streams {
constexpr std::uint64_t kVocabInit = 1;
constexpr std::uint64_t kParamInit = 2;
constexpr std::uint64_t kShuffle = 3;
constexpr std::uint64_t kDropout = 4;
constexpr std::uint64_t kSplit = 5;
constexpr std::uint64_t kSynth = 6;
}  // namespace streams

}  // namespace noisyre
