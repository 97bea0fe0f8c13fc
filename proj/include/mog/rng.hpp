#pragma once

#include <cmath>
#include <cstdint>

namespace mog {

/// Counter-based pseudo-random stream (SplitMix64 core). Streams are keyed by
/// (seed, stream id) so per-node substreams are independent of visit order,
/// and the whole thing is bit-reproducible across platforms.
class RngStream {
public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    state_ = mix(seed ^ 0x9e3779b97f4a7c15ull) ^ mix(stream + 0x7f4a7c15ull);
    if (state_ == 0) state_ = 0x6a09e667f3bcc909ull;
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  /// Uniform in [0, 1).
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

  /// Standard normal via Box-Muller; consumes exactly two draws per call.
  double next_normal() {
    double u1 = next_uniform();
    double u2 = next_uniform();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    // Lemire-style rejection keeps the draw unbiased.
    if (n == 0) return 0;
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    std::uint64_t lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_ = 0x6a09e667f3bcc909ull;
};

} // namespace mog
