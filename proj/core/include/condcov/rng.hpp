#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace condcov {

/// Counter-based generator: output i of stream (seed, ids...) is a SplitMix64
/// finalization of key + i * golden-gamma. Streams are addressed by id, so
/// any worker can materialize any stream without sequencing.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream_ids) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix(key_ + (++counter_) * kGamma); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n) by multiply-shift (bias below 2^-64 * n).
  std::uint64_t below(std::uint64_t n) noexcept {
    return mul_high((*this)(), n);
  }

  /// Standard normal by Box-Muller; consumes two draws.
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  static std::uint64_t mul_high(std::uint64_t a, std::uint64_t b) noexcept {
    const std::uint64_t a_lo = a & 0xffffffffu, a_hi = a >> 32, b_lo = b & 0xffffffffu, b_hi = b >> 32;
    const std::uint64_t lo_lo = a_lo * b_lo, hi_lo = a_hi * b_lo, lo_hi = a_lo * b_hi, hi_hi = a_hi * b_hi;
    const std::uint64_t cross = (lo_lo >> 32) + (hi_lo & 0xffffffffu) + lo_hi;
    return hi_hi + (hi_lo >> 32) + (cross >> 32);
  }

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline StreamRng::StreamRng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream_ids) noexcept
    : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {
  for (std::uint64_t id : stream_ids) key_ = mix(key_ ^ mix(id + kGamma));
}

}  // namespace condcov
