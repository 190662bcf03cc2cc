#include "totvar/examples/conjugate.hpp"

#include <algorithm>
#include <cmath>

#include "totvar/error.hpp"

namespace totvar::examples {

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

Vector ConjugateGaussianModel::sample_prior(Rng& rng) const {
    return Vector::Constant(1, standard_normal(rng));
}

Dataset ConjugateGaussianModel::simulate(const Vector& theta, Rng& rng) const {
    const double sd = std::sqrt(config_.noise_var);
    Dataset y(static_cast<Index>(config_.n_obs));
    for (Index k = 0; k < y.size(); ++k) y(k) = theta(0) + sd * standard_normal(rng);
    return y;
}

Vector ConjugateGaussianModel::summarize(const Dataset& data) const {
    return Vector::Constant(1, data.mean());
}

PosteriorApprox conjugate_posterior(const Dataset& data, const ConjugateConfig& config) {
    const double n = static_cast<double>(data.size());
    const double precision = 1.0 + n / config.noise_var;
    const double var = 1.0 / precision;
    const double mean = var * data.sum() / config.noise_var;
    return PosteriorApprox::gaussian(Vector::Constant(1, mean), Matrix::Constant(1, 1, var));
}

Approximator conjugate_approximator(const ConjugateConfig& config) {
    Approximator a;
    a.approximate = [config](const Dataset& data, std::uint64_t seed) {
        PosteriorApprox exact = conjugate_posterior(data, config);
        exact.mean.array() += config.mean_shift;
        exact.cov *= config.var_factor;
        if (config.particles == 0) return exact;
        Rng rng = make_rng(seed);
        return to_particles(exact, static_cast<Index>(config.particles), rng);
    };
    return a;
}

ConjugateReport conjugate_gaussian_example(const ConjugateConfig& config,
                                           const ConjugateRunOptions& options, std::uint64_t seed) {
    if (options.replicates < 2) throw InvalidInput("need at least 2 replicates");
    if (config.particles == 1) throw InvalidInput("need at least 2 particles per replicate");

    ConjugateReport report;
    report.config = config;
    report.replicates = options.replicates;
    report.seed = seed;

    const ConjugateGaussianModel model(config);
    const Approximator approximator = conjugate_approximator(config);
    report.bundles = generate_replicates(model, approximator, options.replicates, seed);
    report.calibration = calibrate(report.bundles, options.jitter);

    if (options.bootstrap > 0) {
        const std::uint64_t boot_seed = derive_seed(seed, 0xb007ULL);
        report.pre_diagnostics = bootstrap_diagnostics(report.bundles, options.bootstrap, boot_seed);
        report.pre_summary = diagnostic_summary(report.pre_diagnostics);
        report.post_summary =
            diagnostic_summary(bootstrap_diagnostics(report.calibration.adjusted, options.bootstrap, boot_seed));
    }

    if (options.held_out > 1) {
        // Held-out replicates continue the index sequence of the training pool.
        const auto fresh =
            generate_replicates(model, approximator, options.held_out, seed, options.replicates);
        for (const auto& b : fresh) {
            const double before = per_replicate_moments(b.approx).mean(0);
            const double after =
                per_replicate_moments(calibrate_observed(b.approx, report.calibration.map)).mean(0);
            report.unadjusted_sq_errors.push_back((b.theta(0) - before) * (b.theta(0) - before));
            report.adjusted_sq_errors.push_back((b.theta(0) - after) * (b.theta(0) - after));
        }
        report.unadjusted_median = median_of(report.unadjusted_sq_errors);
        report.adjusted_median = median_of(report.adjusted_sq_errors);
    }
    return report;
}

} // namespace totvar::examples
