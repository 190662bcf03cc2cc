#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "totvar/linalg.hpp"
#include "totvar/random.hpp"

namespace totvar {

/// An approximate posterior for one dataset: either a particle sample
/// (S x dim matrix, one draw per row) or Gaussian moments.
struct PosteriorApprox {
    enum class Form { Particles, GaussianMoments };

    Form form = Form::GaussianMoments;
    Matrix particles;
    Vector mean;
    Matrix cov;

    static PosteriorApprox from_particles(Matrix particles);
    static PosteriorApprox gaussian(Vector mean, Matrix cov);

    Index dim() const;
    bool is_particles() const { return form == Form::Particles; }

    /// Throws InvalidInput when the form-specific invariants are violated
    /// (S >= 2 particles; symmetric covariance with non-negative diagonal).
    void validate() const;
};

/// Draws `count` particles from a Gaussian approximation. Particle forms are
/// returned unchanged.
PosteriorApprox to_particles(const PosteriorApprox& approx, Index count, Rng& rng);

/// One prior-predictive replicate with its approximate posterior.
struct ReplicateBundle {
    std::size_t index = 0;
    Vector theta;
    Vector summary;
    PosteriorApprox approx;
    std::uint64_t seed = 0;
};

using Dataset = Vector;

/// A Bayesian model for (theta, y). Implementations must be pure given the
/// generator state they are handed.
class JointModel {
public:
    virtual ~JointModel() = default;

    virtual Index dim_theta() const = 0;
    virtual Vector sample_prior(Rng& rng) const = 0;
    virtual Dataset simulate(const Vector& theta, Rng& rng) const = 0;
    virtual Vector summarize(const Dataset& data) const = 0;

    /// False when the model may not be called from several threads at once.
    virtual bool concurrent() const { return true; }
};

/// Maps a dataset (and a seed for any internal randomness) to an approximate
/// posterior.
struct Approximator {
    std::function<PosteriorApprox(const Dataset&, std::uint64_t)> approximate;
    bool concurrent = true;
};

/// Simulated (theta, data) pair for a replicate seed. Replaying with a
/// bundle's `seed` regenerates its raw dataset.
struct SimulatedReplicate {
    Vector theta;
    Dataset data;
};
SimulatedReplicate simulate_replicate(const JointModel& model, std::uint64_t replicate_seed);

/// Seed handed to the approximator for a given replicate seed.
std::uint64_t approximator_seed(std::uint64_t replicate_seed);

/// Generates `count` replicates with indices first_index .. first_index+count-1.
/// Bundle i depends only on (master_seed, i).
std::vector<ReplicateBundle> generate_replicates(const JointModel& model,
                                                 const Approximator& approximator,
                                                 std::size_t count, std::uint64_t master_seed,
                                                 std::size_t first_index = 0);

} // namespace totvar
