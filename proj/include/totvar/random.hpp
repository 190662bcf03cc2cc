#pragma once

#include <cstdint>
#include <random>

#include "totvar/linalg.hpp"

namespace totvar {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; a bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t x);

/// Child seed for stream `index` of `master`. Pure function of its inputs, so
/// work item `index` is reproducible regardless of scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

Rng make_rng(std::uint64_t seed);

double standard_normal(Rng& rng);
Vector standard_normal(Rng& rng, Index n);

/// Draw from N(mean, L L^T) given lower factor L.
Vector multivariate_normal(Rng& rng, const Vector& mean, const Matrix& lower);

/// IG(shape, scale): 1/G with G ~ Gamma(shape, rate = scale). Mean scale/(shape-1).
double inverse_gamma(Rng& rng, double shape, double scale);

/// Gamma(shape, rate).
double gamma_rate(Rng& rng, double shape, double rate);

double uniform01(Rng& rng);

} // namespace totvar
