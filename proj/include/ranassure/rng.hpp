// Deterministic, platform-independent random primitives.  std:: distributions
// are implementation-defined, so anything that feeds golden tests goes through
// these helpers instead.
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace ranassure {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  return splitmix64(seed ^ (v + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2)));
}

inline std::uint64_t hash_str(std::string_view s) {
  // FNV-1a, widened through splitmix for better avalanche.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return splitmix64(h);
}

// Uniform in [0, 1) from a hashed key.
inline double uniform01(std::uint64_t key) {
  return static_cast<double>(splitmix64(key) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two independent uniforms derived from key.
inline double gaussian(std::uint64_t key) {
  double u1 = uniform01(hash_combine(key, 0x5bf0a8b1u));
  double u2 = uniform01(hash_combine(key, 0xc3a5c85cu));
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Small counter-based generator for places that need a stream (weight init,
// mini-batch permutations).  Same numbers on every platform.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : state_(splitmix64(seed)) {}

  std::uint64_t next_u64() {
    state_ = splitmix64(state_ + 0x9e3779b97f4a7c15ull);
    return state_;
  }

  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [-a, a].
  double next_symmetric(double a) { return (2.0 * next_uniform() - 1.0) * a; }

  double next_gaussian() {
    double u1 = next_uniform();
    double u2 = next_uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace ranassure
