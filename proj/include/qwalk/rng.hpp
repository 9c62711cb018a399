#pragma once

#include <cstdint>
#include <random>

namespace qwalk {

// All randomness flows through explicitly seeded engines. The helpers below avoid
// std::uniform_*_distribution so that streams are identical across standard libraries.
using Rng = std::mt19937_64;

// splitmix64 finalizer over (seed, index); used for per-example and per-run seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Uniform integer in [0, bound). bound must be positive.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

// Uniform integer in [lo, hi] inclusive.
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

// Uniform double in [0, 1) with 53 random bits.
double uniform_unit(Rng& rng);

double uniform_real(Rng& rng, double lo, double hi);

}  // namespace qwalk
