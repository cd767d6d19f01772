#include "atla/common/rng.h"

#include <cmath>
#include <numbers>

namespace atla {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t DeriveSeed(std::uint64_t root, std::string_view stream,
                         std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return SplitMix64(SplitMix64(root) ^ SplitMix64(h) ^ SplitMix64(index + 1));
}

Rng MakeRng(std::uint64_t root, std::string_view stream, std::uint64_t index) {
  return Rng(DeriveSeed(root, stream, index));
}

double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double Uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * UniformUnit(rng);
}

double StandardNormal(Rng& rng) {
  double u1 = UniformUnit(rng);
  while (u1 <= 0.0) u1 = UniformUnit(rng);
  const double u2 = UniformUnit(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

int SampleIndex(Rng& rng, const double* weights, int n) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += weights[i];
  double u = UniformUnit(rng) * total;
  int last_positive = 0;
  for (int i = 0; i < n; ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return last_positive;
}

}  // namespace atla
