#pragma once

#include <cstdint>
#include <limits>

namespace f2sa {

/// SplitMix64 generator. Small state, cheap to construct, which matters
/// because every sample token spins up its own engine.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Order-sensitive 64-bit hash combine.
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

/// Replayable handle for one mini-batch draw. Everything a problem needs to
/// regenerate the draw is derived from (stream, counter); evaluating the same
/// token at two points therefore uses the same underlying sample.
struct SampleToken {
  std::uint64_t stream = 0;
  std::uint64_t counter = 0;
  std::uint32_t batch = 1;

  /// Fresh engine positioned at the start of this token's draw. `salt`
  /// separates independent sub-draws (e.g. train vs validation indices).
  SplitMix64 engine(std::uint64_t salt = 0) const;

  bool operator==(const SampleToken&) const = default;
};

/// Seeded source of sample tokens. Each solver run owns one.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), stream_id_(hash_combine(seed, 0x5eedULL)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t issued() const { return counter_; }

  SampleToken next_token(std::uint32_t batch) { return SampleToken{stream_id_, counter_++, batch}; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
};

}  // namespace f2sa
