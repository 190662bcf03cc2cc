#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "totvar/model.hpp"

namespace totvar {

/// Mean and covariance of one replicate's approximate posterior.
struct PerReplicateMoments {
    Vector mean;
    Matrix cov;
};

/// Sample estimates of both sides of the conditioned tower and total-variance
/// identities over a set of retained replicates.
struct MomentSummary {
    Vector mu_l;      ///< mean of the drawn parameters
    Vector mu_r;      ///< mean of the approximate posterior means
    Matrix sigma_l;   ///< covariance of the drawn parameters (divisor I-1)
    Matrix sigma_r1;  ///< average approximate posterior covariance (divisor I)
    Matrix sigma_r2;  ///< covariance of approximate posterior means (divisor I-1)
    std::size_t i_used = 0;

    Matrix sigma_r() const { return sigma_r1 + sigma_r2; }
    Index dim() const { return mu_l.size(); }
};

/// Particles: sample mean and (S-1)-divisor covariance. Gaussian: pass-through.
PerReplicateMoments per_replicate_moments(const PosteriorApprox& approx);

/// The triple resampled by the bootstrap: (theta_i, mu^R(y_i), Sigma^R1(y_i)).
struct ReplicateTriple {
    std::size_t index = 0;
    Vector theta;
    PerReplicateMoments moments;
};

std::vector<ReplicateTriple> replicate_triples(const std::vector<ReplicateBundle>& bundles);

/// Reduces triples selected by `selection` (positions into `triples`, taken in
/// the given order) to a MomentSummary.
MomentSummary reduce_moments(const std::vector<ReplicateTriple>& triples,
                             std::span<const std::size_t> selection);

/// Full estimate over a bundle list. The reduction runs in ascending replicate
/// index (stable for equal indices), so storage order does not matter.
MomentSummary estimate_moments(const std::vector<ReplicateBundle>& bundles);

} // namespace totvar
