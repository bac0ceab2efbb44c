#ifndef EDSIM_RANDOM_HPP
#define EDSIM_RANDOM_HPP

#include <cstdint>
#include <limits>
#include <string_view>

namespace edsim {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ splitmix64(v + 0x632BE59BD9B4E019ull));
}

/// FNV-1a, used to turn subsystem names into stream tags.
inline constexpr std::uint64_t tag(std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Counter-based generator: the output is a pure function of (key, counter),
/// so every (seed, subsystem, item, step) tuple owns an independent stream and
/// parallel or serial evaluation yield identical draws.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr StreamRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() { return splitmix64(key_ + 0xD1B54A32D192ED03ull * ++counter_); }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view subsystem) {
  return mix(seed, tag(subsystem));
}

inline constexpr StreamRng stream(std::uint64_t seed, std::string_view subsystem,
                                  std::uint64_t item, std::uint64_t step = 0) {
  return StreamRng(mix(mix(derive_seed(seed, subsystem), item), step));
}

}  // namespace edsim

#endif  // EDSIM_RANDOM_HPP
