#include "f2sa/rng.hpp"

namespace f2sa {

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  SplitMix64 g(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
  g();
  return g();
}

SplitMix64 SampleToken::engine(std::uint64_t salt) const {
  return SplitMix64(hash_combine(hash_combine(stream, counter), salt));
}

}  // namespace f2sa
