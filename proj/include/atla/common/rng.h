#ifndef ATLA_COMMON_RNG_H_
#define ATLA_COMMON_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace atla {

using Rng = std::mt19937_64;

// Stream derivation: every component gets its own generator seeded with
// DeriveSeed(root, name, index). The mix is splitmix64 over the root seed,
// an FNV-1a hash of the stream name and the index, so streams are stable
// regardless of the order in which components are constructed.
std::uint64_t SplitMix64(std::uint64_t x);
std::uint64_t DeriveSeed(std::uint64_t root, std::string_view stream,
                         std::uint64_t index = 0);
Rng MakeRng(std::uint64_t root, std::string_view stream,
            std::uint64_t index = 0);

// Uniform double in [0, 1) built from the top 53 bits; unlike
// std::uniform_real_distribution this is identical across standard libraries.
double UniformUnit(Rng& rng);
double Uniform(Rng& rng, double lo, double hi);
// Box-Muller standard normal, again library independent.
double StandardNormal(Rng& rng);
// Index sampled from an (unnormalised, non-negative) weight vector.
int SampleIndex(Rng& rng, const double* weights, int n);

}  // namespace atla

#endif  // ATLA_COMMON_RNG_H_
