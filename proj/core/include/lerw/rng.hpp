#pragma once

#include <cstdint>

namespace lerw {

// Deterministic per-trial random stream: (master_seed, stream_index) fully
// determines the sequence, independent of scheduling or worker count, so
// trial i of any experiment is reproducible in isolation. xoshiro256++ with
// state derived from both seeds through splitmix64. No std:: distributions
// anywhere: bounded ints and doubles are generated by fixed bit recipes, so
// byte-identical results hold across compilers and platforms.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : master_(master_seed), index_(stream_index) {
    std::uint64_t x = splitmix(master_seed ^ 0x6a09e667f3bcc909ULL);
    x = splitmix(x + stream_index * 0x9e3779b97f4a7c15ULL);
    for (auto& w : s_) {
      x = splitmix(x);
      w = x;
    }
    // all-zero state is invalid for xoshiro; splitmix output of anything is
    // never four zeros in a row, but keep the guard explicit
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t stream_index() const { return index_; }

  std::uint64_t next_u64() {
    std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Exactly uniform on [0, n): Lemire's multiply-shift with rejection.
  std::uint32_t uniform_below(std::uint32_t n) {
    std::uint32_t x = std::uint32_t(next_u64());
    std::uint64_t m = std::uint64_t(x) * n;
    std::uint32_t l = std::uint32_t(m);
    if (l < n) {
      std::uint32_t t = (0u - n) % n;
      while (l < t) {
        x = std::uint32_t(next_u64());
        m = std::uint64_t(x) * n;
        l = std::uint32_t(m);
      }
    }
    return std::uint32_t(m >> 32);
  }

  // 53-bit mantissa uniform in [0, 1)
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // index into kSteps
  int step_direction() { return int(uniform_below(6)); }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }
  static std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t s_[4];
  std::uint64_t master_;
  std::uint64_t index_;
};

}  // namespace lerw
