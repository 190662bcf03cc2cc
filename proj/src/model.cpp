#include "totvar/model.hpp"

#include <cmath>
#include <exception>
#include <sstream>

#include "totvar/error.hpp"
#include "totvar/parallel.hpp"

namespace totvar {

PosteriorApprox PosteriorApprox::from_particles(Matrix particles) {
    PosteriorApprox a;
    a.form = Form::Particles;
    a.particles = std::move(particles);
    return a;
}

PosteriorApprox PosteriorApprox::gaussian(Vector mean, Matrix cov) {
    PosteriorApprox a;
    a.form = Form::GaussianMoments;
    a.mean = std::move(mean);
    a.cov = std::move(cov);
    return a;
}

Index PosteriorApprox::dim() const {
    return is_particles() ? particles.cols() : mean.size();
}

void PosteriorApprox::validate() const {
    if (is_particles()) {
        if (particles.rows() < 2) {
            throw InvalidInput("particle approximation needs at least 2 particles, got " +
                               std::to_string(particles.rows()));
        }
        if (!particles.allFinite()) throw InvalidInput("particle approximation has non-finite entries");
        return;
    }
    if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
        throw InvalidInput("gaussian approximation: covariance shape does not match mean length");
    }
    if (!mean.allFinite() || !cov.allFinite()) {
        throw InvalidInput("gaussian approximation has non-finite entries");
    }
    if (!is_symmetric(cov, 1e-12)) throw InvalidInput("gaussian approximation: covariance not symmetric");
    if ((cov.diagonal().array() < 0.0).any()) {
        throw InvalidInput("gaussian approximation: negative variance on diagonal");
    }
}

PosteriorApprox to_particles(const PosteriorApprox& approx, Index count, Rng& rng) {
    if (approx.is_particles()) return approx;
    const Index d = approx.dim();
    Eigen::LDLT<Matrix> ldlt(approx.cov);
    // LDLT tolerates singular covariances; factor as P^T L sqrt(D).
    Matrix factor = ldlt.transpositionsP().transpose() * Matrix(ldlt.matrixL()) *
                    ldlt.vectorD().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    Matrix particles(count, d);
    for (Index s = 0; s < count; ++s) {
        particles.row(s) = (approx.mean + factor * standard_normal(rng, d)).transpose();
    }
    return PosteriorApprox::from_particles(std::move(particles));
}

SimulatedReplicate simulate_replicate(const JointModel& model, std::uint64_t replicate_seed) {
    Rng rng = make_rng(replicate_seed);
    SimulatedReplicate out;
    out.theta = model.sample_prior(rng);
    if (out.theta.size() != model.dim_theta()) {
        throw InvalidInput("prior sampler returned length " + std::to_string(out.theta.size()) +
                           ", expected " + std::to_string(model.dim_theta()));
    }
    out.data = model.simulate(out.theta, rng);
    return out;
}

std::uint64_t approximator_seed(std::uint64_t replicate_seed) {
    return derive_seed(replicate_seed, 0xa99f0c5eULL);
}

std::vector<ReplicateBundle> generate_replicates(const JointModel& model,
                                                 const Approximator& approximator,
                                                 std::size_t count, std::uint64_t master_seed,
                                                 std::size_t first_index) {
    if (count < 2) throw InvalidInput("need at least 2 replicates");
    if (!approximator.approximate) throw InvalidInput("approximator has no procedure");

    std::vector<ReplicateBundle> bundles(count);
    const bool concurrent = model.concurrent() && approximator.concurrent;

    auto build = [&](std::size_t k) {
        const std::size_t index = first_index + k;
        const std::uint64_t seed = derive_seed(master_seed, index);
        ReplicateBundle& b = bundles[k];
        b.index = index;
        b.seed = seed;
        SimulatedReplicate sim = simulate_replicate(model, seed);
        b.theta = std::move(sim.theta);
        b.summary = model.summarize(sim.data);
        try {
            b.approx = approximator.approximate(sim.data, approximator_seed(seed));
            b.approx.validate();
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "approximator failed on replicate " << index << " (seed " << seed
                << "): " << e.what();
            throw NumericalError(msg.str());
        }
        if (b.approx.dim() != model.dim_theta()) {
            throw InvalidInput("approximator returned dimension " + std::to_string(b.approx.dim()) +
                               " on replicate " + std::to_string(index));
        }
    };

    parallel_for(count, build, concurrent ? 0 : 1);

    const Index summary_len = bundles.front().summary.size();
    for (const auto& b : bundles) {
        if (b.summary.size() != summary_len) {
            throw InvalidInput("summarizer output length varies across datasets (replicate " +
                               std::to_string(b.index) + ")");
        }
    }
    return bundles;
}

} // namespace totvar
