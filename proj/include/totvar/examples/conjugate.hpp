#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "totvar/adjust.hpp"
#include "totvar/assess.hpp"
#include "totvar/model.hpp"

namespace totvar::examples {

/// theta ~ N(0, 1); y_k | theta ~ N(theta, noise_var), k = 1..n_obs.
struct ConjugateConfig {
    std::size_t n_obs = 1;
    double noise_var = 1.0;
    double mean_shift = 0.0;   ///< corruption of the approximate mean (delta)
    double var_factor = 1.0;   ///< corruption of the approximate variance (gamma)
    std::size_t particles = 200;  ///< S; 0 returns Gaussian moments instead
};

class ConjugateGaussianModel final : public JointModel {
public:
    explicit ConjugateGaussianModel(ConjugateConfig config) : config_(config) {}

    Index dim_theta() const override { return 1; }
    Vector sample_prior(Rng& rng) const override;
    Dataset simulate(const Vector& theta, Rng& rng) const override;
    /// Sample mean of the observations.
    Vector summarize(const Dataset& data) const override;

private:
    ConjugateConfig config_;
};

/// Exact posterior N(mean, var) for a dataset.
PosteriorApprox conjugate_posterior(const Dataset& data, const ConjugateConfig& config);

/// Exact posterior corrupted by (mean_shift, var_factor); particles when
/// config.particles > 0.
Approximator conjugate_approximator(const ConjugateConfig& config);

struct ConjugateReport {
    ConjugateConfig config;
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
    std::vector<ReplicateBundle> bundles;
    Calibration calibration;
    std::vector<DiagnosticRow> pre_summary;
    std::vector<DiagnosticRow> post_summary;
    BootstrapDiagnostics pre_diagnostics;
    std::vector<double> unadjusted_sq_errors;  ///< held-out replicates
    std::vector<double> adjusted_sq_errors;
    double unadjusted_median = 0.0;
    double adjusted_median = 0.0;
};

struct ConjugateRunOptions {
    std::size_t replicates = 500;   ///< I
    std::size_t bootstrap = 500;    ///< B; 0 skips diagnostics
    std::size_t held_out = 200;     ///< fresh replicates scored after adjustment
    double jitter = 0.0;
};

/// Full pipeline: replicates, diagnostics before and after, calibration and
/// squared errors of posterior means on held-out replicates.
ConjugateReport conjugate_gaussian_example(const ConjugateConfig& config,
                                           const ConjugateRunOptions& options, std::uint64_t seed);

} // namespace totvar::examples
