#ifndef SEVPR_RNG_HPP
#define SEVPR_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace sevpr::rng {

// Counter-based generator built on the splitmix64 finalizer. A draw is a
// pure function of (seed, key words), so any traversal order or thread
// schedule produces identical streams. All randomness in the toolkit is
// derived from one root seed fanned out through fixed labels.

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, used to turn component labels into key words.
inline constexpr std::uint64_t label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t hash(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t k : key) h = mix64(h ^ k);
  return h;
}

// Uniform double in [0, 1), 53 mantissa bits.
inline constexpr double to_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline constexpr double uniform(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> key) {
  return to_unit(hash(seed, key));
}

// Uniform in [lo, hi).
inline constexpr double uniform(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> key,
                                double lo, double hi) {
  return lo + (hi - lo) * uniform(seed, key);
}

// Uniform integer in [0, n). Modulo bias is irrelevant at our n << 2^64.
inline constexpr std::uint64_t below(std::uint64_t seed,
                                     std::initializer_list<std::uint64_t> key,
                                     std::uint64_t n) {
  return hash(seed, key) % n;
}

// Sequential convenience stream for code that wants many draws from one
// logical source. Still counter-based: draw i is hash(seed, {base..., i}).
class Stream {
public:
  Stream(std::uint64_t seed, std::uint64_t base) : seed_(seed), base_(base) {}

  double unit() { return to_unit(next()); }
  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
  std::uint64_t next() { return hash(seed_, {base_, counter_++}); }

private:
  std::uint64_t seed_;
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

} // namespace sevpr::rng

#endif
