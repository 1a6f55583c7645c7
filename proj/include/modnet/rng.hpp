#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace modnet {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seeded RNG with portable derived values. std::mt19937_64 output is pinned
// by the standard; the double/int draws below avoid the
// implementation-defined distribution adaptors so sequences are identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1), 53 bits
  double uniform() {
    return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform in [0, n), unbiased
  int uniform_int(int n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return static_cast<int>(r % bound);
  }

  std::uint64_t fork(std::string_view label) {
    return splitmix64(gen_() ^ fnv1a64(label));
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace modnet
