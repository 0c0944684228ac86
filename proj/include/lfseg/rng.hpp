#pragma once

#include <cstdint>
#include <string_view>

namespace lfseg {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// FNV-1a, used to turn string keys into stream keys.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Counter-based random stream: value k of the stream keyed by `key` is a pure
/// function of (key, k), so streams are reproducible and independent of
/// how many draws other streams made.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ull))) {}

  constexpr std::uint64_t at(std::uint64_t counter) const noexcept { return mix64(key_ ^ mix64(counter)); }

  constexpr std::uint64_t next_u64() noexcept { return at(counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n must be positive.
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift; the bias is far below 2^-32 for small n.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace lfseg
