#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace qmean {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer (Steele/Lea/Flood mixing constants).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace detail

/// Counter-based random stream: SplitMix64 run in counter mode.
///
/// value(i) = mix64(key + (i+1)*golden), i.e. the SplitMix64 sequence seeded
/// at `key`, addressable by index. Draws are therefore a pure function of
/// (seed, label, counter): changing the number of draws never perturbs earlier
/// ones, and independent substreams ("phi", "eps", ...) are derived by label.
class RandomStream {
 public:
  RandomStream() : key_(0) {}
  explicit RandomStream(std::uint64_t key) : key_(key) {}

  static RandomStream derive(std::uint64_t seed, std::string_view label) {
    return RandomStream(detail::mix64(detail::mix64(seed + detail::kGolden) ^
                                      detail::fnv1a64(label)));
  }

  /// Independent child stream addressed by index (e.g. one per repetition).
  RandomStream substream(std::uint64_t index) const {
    return RandomStream(detail::mix64(key_ ^ detail::mix64(index + detail::kGolden)));
  }

  std::uint64_t key() const { return key_; }

  std::uint64_t bits(std::uint64_t counter) const {
    return detail::mix64(key_ + (counter + 1) * detail::kGolden);
  }

  /// Uniform in (0, 1]; never exactly 0 so it is safe under log().
  double uniform01(std::uint64_t counter) const {
    return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; draw `counter` consumes exactly the
  /// uniform pair (2*counter, 2*counter+1), keeping the stream addressable.
  double gaussian(std::uint64_t counter) const {
    const double u1 = uniform01(2 * counter);
    const double u2 = uniform01(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

}  // namespace qmean
