#include "irsssm/random.hpp"

#include <cmath>

namespace irsssm {

// SplitMix64 finalizer.
std::uint64_t RandomStream::mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RandomStream RandomStream::derive(std::uint64_t seed, std::uint64_t a) {
  return RandomStream(mix(seed) ^ mix(a + 0x632BE59BD9B4E019ULL));
}

RandomStream RandomStream::derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return RandomStream(mix(mix(seed) ^ mix(a + 0x632BE59BD9B4E019ULL)) ^ mix(b + 0x8CB92BA72F3D8DD7ULL));
}

Complex RandomStream::complex_normal(double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = normal();
  const double im = normal();
  return {s * re, s * im};
}

}  // namespace irsssm
