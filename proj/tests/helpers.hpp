#pragma once

#include <cstdint>
#include <vector>

#include "totvar/model.hpp"
#include "totvar/random.hpp"

namespace testing_support {

using namespace totvar;

// Particle bundles with a random common linear structure so that the prior
// side dominates the between-replicate spread.
inline std::vector<ReplicateBundle> particle_bundles(Index dim, std::size_t count, Index s,
                                                     std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::vector<ReplicateBundle> out;
    for (std::size_t i = 0; i < count; ++i) {
        ReplicateBundle b;
        b.index = i;
        b.seed = derive_seed(seed, i);
        b.theta = standard_normal(rng, dim);
        Vector centre = 0.6 * b.theta + 0.3 * standard_normal(rng, dim);
        Matrix p(s, dim);
        for (Index k = 0; k < s; ++k) p.row(k) = (centre + 0.5 * standard_normal(rng, dim)).transpose();
        b.approx = PosteriorApprox::from_particles(p);
        b.summary = b.theta.head(1);
        out.push_back(std::move(b));
    }
    return out;
}

inline ReplicateBundle scalar_particles(std::size_t index, double theta, std::vector<double> values) {
    ReplicateBundle b;
    b.index = index;
    b.theta = Vector::Constant(1, theta);
    b.summary = Vector::Constant(1, theta);
    Matrix p(static_cast<Index>(values.size()), 1);
    for (std::size_t k = 0; k < values.size(); ++k) p(static_cast<Index>(k), 0) = values[k];
    b.approx = PosteriorApprox::from_particles(p);
    return b;
}

}  // namespace testing_support
