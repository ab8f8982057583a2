#pragma once

#include <cstdint>

namespace benfrag {

/// Identifies one reproducible random stream.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  bool operator==(const RngSpec&) const = default;
};

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child stream id for sub-task `index` of `parent` (trial, cut index, leaf).
constexpr std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(mix64(parent) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr RngSpec derive(const RngSpec& parent, std::uint64_t index) noexcept {
  return RngSpec{parent.seed, derive_stream(parent.stream, index)};
}

/// Counter-based generator: the k-th draw is a pure function of (seed, stream, k),
/// so any subset of streams can be evaluated in any order or on any thread.
class CounterRng {
 public:
  explicit constexpr CounterRng(RngSpec spec) noexcept
      : key_(mix64(spec.seed ^ mix64(spec.stream ^ 0xd1b54a32d192ed03ULL))) {}

  constexpr std::uint64_t at(std::uint64_t counter) const noexcept {
    return mix64(key_ ^ mix64(counter));
  }

  constexpr std::uint64_t next_u64() noexcept { return at(counter_++); }

  /// Uniform double strictly inside (0, 1): midpoints of a 2^-53 grid.
  constexpr double next_open01() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  constexpr std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace benfrag
