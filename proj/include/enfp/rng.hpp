#pragma once

// Seedable, splittable random streams.
//
// Rng is xoshiro256** keyed by SplitMix64 from a (seed, stream, substream)
// triple, so every (replicate, trial) pair gets its own independent stream
// and results do not depend on the order in which work is executed.
// Normals are drawn by inversion through normal_quantile, which keeps the
// output identical across standard libraries.

#include "enfp/normal.hpp"

#include <cstdint>
#include <limits>

namespace enfp {

inline std::uint64_t splitmix64(std::uint64_t& state)
{
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng
{
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed,
               std::uint64_t stream = 0,
               std::uint64_t substream = 0)
  {
    std::uint64_t key = seed;
    key = splitmix64(key) ^ (stream * 0xd1b54a32d192ed03ULL);
    key = splitmix64(key) ^ (substream * 0xabc98388fb8fac03ULL);
    for (auto& word : s_)
      word = splitmix64(key);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max()
  {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()()
  {
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

  // Uniform on the open interval (0, 1).
  double uniform()
  {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_quantile(uniform()); }

  // Uniform integer in [0, n), Lemire's multiply-and-reject.
  std::uint64_t below(std::uint64_t n)
  {
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k)
  {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

} // namespace enfp
