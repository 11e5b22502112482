#pragma once

#include <cstdint>

namespace vqla {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen over std engines because the
// standard does not pin distribution algorithms, and every sampled artifact
// in this project must be reproducible bit-for-bit from (seed, stream).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, bound). Rejection sampling keeps the draw unbiased.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  int next_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Derives an independent stream from (seed, a, b). Feeding the words through
// the SplitMix64 scrambler avoids correlated low bits between nearby streams.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  SplitMix64 mixer(seed ^ 0x51fd36da1d3593a7ULL);
  std::uint64_t s = mixer.next_u64();
  s ^= a * 0xff51afd7ed558ccdULL + 0x2545f4914f6cdd1dULL;
  SplitMix64 mixer2(s);
  s = mixer2.next_u64() ^ (b * 0xc4ceb9fe1a85ec53ULL);
  SplitMix64 mixer3(s);
  return mixer3.next_u64();
}

}  // namespace vqla
