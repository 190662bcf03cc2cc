#pragma once

#include <string>
#include <vector>

#include "totvar/moments.hpp"

namespace totvar {

/// Affine total-variance correction
///   theta -> mu_l + (m_i - mu_r) + scale (theta - m_i),   scale = T C^{-1},
/// where C C^T = Sigma^R1 (+ jitter I) and T T^T = Sigma^L - rho Sigma^R2.
/// Coordinate order is part of the map; Cholesky factors are not rotation
/// invariant.
struct AdjustmentMap {
    Vector mu_l;
    Vector mu_r;
    Matrix chol_c;
    Matrix chol_t;
    Matrix scale;
    double rho = 1.0;
    double jitter = 0.0;

    Index dim() const { return mu_l.size(); }
};

/// Fits the map. rho = 1 when Sigma^L - Sigma^R2 is positive definite;
/// otherwise rho in (0,1) is found by bisection so that
/// lambda_min(Sigma^L - rho Sigma^R2) = lambda_min(Sigma^R1).
AdjustmentMap fit_adjustment(const MomentSummary& summary, double jitter = 0.0);

/// Shrinks per-replicate means toward mu_r by sqrt(rho), keeping every
/// replicate's spread. Gaussian forms get the same shift applied to the mean.
std::vector<ReplicateBundle> shrink_particles(std::vector<ReplicateBundle> bundles,
                                              const AdjustmentMap& map);

/// Applies the map to every replicate. Each replicate's own mean m_i is
/// taken from its approximation.
std::vector<ReplicateBundle> adjust_replicates(std::vector<ReplicateBundle> bundles,
                                               const AdjustmentMap& map);

/// Applies the map to the observed-data approximation.
PosteriorApprox adjust_observed(const PosteriorApprox& approx, const AdjustmentMap& map);

/// Single-approximation form of shrink_particles (identity when rho = 1).
PosteriorApprox shrink_observed(PosteriorApprox approx, const AdjustmentMap& map);

/// shrink_observed followed by adjust_observed: what a new dataset gets when
/// the map was fitted with shrinkage.
PosteriorApprox calibrate_observed(const PosteriorApprox& approx, const AdjustmentMap& map);

/// fit -> (shrink if rho < 1) -> adjust, with the summaries on either side.
struct Calibration {
    MomentSummary before;
    AdjustmentMap map;
    std::vector<ReplicateBundle> adjusted;
    MomentSummary after;
};
Calibration calibrate(const std::vector<ReplicateBundle>& bundles, double jitter = 0.0);

/// Per-coordinate transformation to unrestricted support, applied before
/// moment estimation and inverted after adjustment.
enum class Link { Identity, Log, Logit };

Link parse_link(const std::string& name);
std::string link_name(Link link);

double link_forward(Link link, double x);
double link_inverse(Link link, double y);

/// Transforms theta and particles coordinatewise. Gaussian approximations only
/// accept identity links, since moments do not map through a nonlinear link.
std::vector<ReplicateBundle> apply_links(std::vector<ReplicateBundle> bundles,
                                         const std::vector<Link>& links);
PosteriorApprox apply_links(PosteriorApprox approx, const std::vector<Link>& links);
PosteriorApprox invert_links(PosteriorApprox approx, const std::vector<Link>& links);

} // namespace totvar
