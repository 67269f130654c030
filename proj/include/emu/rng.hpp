#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace emu {

// Counter-based splitmix64. All randomness in the project flows through this
// so results are reproducible across platforms (std::hash and the standard
// distributions are implementation-defined and must not be used).
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Order-sensitive combine of two keys into one stream id.
inline uint64_t mix_keys(uint64_t a, uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x9e3779b97f4a7c15ull));
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Top 53 bits -> [0,1). Exactly representable in double.
inline double unit_from_u64(uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

// Sequential deterministic stream over splitmix64.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // [0,1)
  double next_unit() { return unit_from_u64(next_u64()); }

  // [lo,hi)
  double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // [0,n)
  int next_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  bool next_bool() { return (next_u64() & 1ull) != 0; }

  // Box-Muller, two fresh uniforms per call.
  double next_gaussian() {
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  uint64_t state_;
};

}  // namespace emu
