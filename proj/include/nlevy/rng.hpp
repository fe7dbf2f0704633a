#pragma once

// Counter-keyed random streams: every (seed, stream, index) triple owns an
// independent xoshiro256** generator, so results do not depend on how paths
// are distributed over workers.

#include <cstdint>
#include <limits>
#include <string_view>

#include "nlevy/detail/numeric.hpp"

namespace nlevy {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** 1.0 (Blackman and Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0) noexcept {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  /// Stream for (seed, stream, index); the three keys are mixed through splitmix64.
  static Xoshiro256 keyed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    std::uint64_t sm = seed;
    std::uint64_t k = splitmix64(sm);
    sm = k ^ stream;
    k = splitmix64(sm);
    sm = k ^ index;
    return Xoshiro256(splitmix64(sm));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on (0, 1].
  double uniform_pos() noexcept { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

  friend bool operator==(const Xoshiro256&, const Xoshiro256&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

/// 64-bit FNV-1a of a string; used to turn policy ids into stream keys.
inline std::uint64_t stream_key(std::string_view s) noexcept {
  detail::Fnv1a h;
  h.update(s);
  return h.digest();
}

}  // namespace nlevy
