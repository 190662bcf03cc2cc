#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "totvar/adjust.hpp"
#include "totvar/assess.hpp"
#include "totvar/model.hpp"

namespace totvar::examples {

/// Log-normal (m, s2) matching the mean and variance of a sum of `kappa`
/// i.i.d. LogNormal(mu, sigma2) terms.
struct FwMoments {
    double m = 0.0;
    double s2 = 0.0;
};
FwMoments fw_moments(double mu, double sigma2, int kappa);

/// mu ~ N(mu_mean, mu_sd^2), sigma ~ Gamma(sigma_shape, sigma_rate).
struct FwPrior {
    double mu_mean = 0.0;
    double mu_sd = 1.0;
    double sigma_shape = 1.0;
    double sigma_rate = 1.0;
};

/// Sufficient statistics of the log data under the log-normal auxiliary model.
struct LogDataStats {
    double n = 0.0;
    double mean_log = 0.0;
    double centred_ss = 0.0;   ///< sum (log y - mean_log)^2
    double sum_log = 0.0;
};
LogDataStats log_data_stats(const Dataset& data);

/// log h(theta) = log p(theta) + log p~(y | theta) for theta = (mu, eta = log sigma^2),
/// with the Fenton-Wilkinson log-normal likelihood. When `fixed_eta` is set,
/// theta = (mu) only.
class FwLogPosterior {
public:
    FwLogPosterior(const Dataset& data, int kappa, FwPrior prior, std::optional<double> fixed_eta = {});

    double operator()(const Vector& theta) const;
    double value_and_gradient(const Vector& theta, Vector& grad) const;
    Index dim() const { return fixed_eta_ ? 1 : 2; }

private:
    LogDataStats stats_;
    int kappa_;
    FwPrior prior_;
    std::optional<double> fixed_eta_;
};

struct LaplaceResult {
    Vector mode;
    Matrix hessian;  ///< of -log h at the mode
    Matrix cov;      ///< hessian^{-1}
    double log_h = 0.0;
    int start_used = -1;
};

/// Maximizes a log density from each start by BFGS, keeps the best converged
/// optimum, and forms N(mode, H^{-1}) with a central-difference Hessian
/// (step 1e-4 (1 + |mode_i|)).
LaplaceResult laplace_approximation(const std::function<double(const Vector&, Vector&)>& log_h,
                                    const std::function<double(const Vector&)>& log_h_value,
                                    const std::vector<Vector>& starts);

/// Three starting points for the FW mode search derived from the data.
std::vector<Vector> fw_starts(const Dataset& data, int kappa);

/// Mode of log h over (mu, eta): the summary statistic of a dataset.
Vector fw_mode(const Dataset& data, int kappa, const FwPrior& prior);

/// Gaussian approximation N(mode, H^{-1}) over (mu, eta).
LaplaceResult laplace_auxiliary_posterior(const Dataset& data, int kappa, const FwPrior& prior);

/// Y = sum of kappa LogNormal(mu, sigma^2); theta = (mu, eta = log sigma^2);
/// summary = Laplace mode.
class FwModel final : public JointModel {
public:
    FwModel(std::size_t n_obs, int kappa, FwPrior prior) : n_obs_(n_obs), kappa_(kappa), prior_(prior) {}

    Index dim_theta() const override { return 2; }
    Vector sample_prior(Rng& rng) const override;
    Dataset simulate(const Vector& theta, Rng& rng) const override;
    Vector summarize(const Dataset& data) const override;

    int kappa() const { return kappa_; }
    const FwPrior& prior() const { return prior_; }
    std::size_t n_obs() const { return n_obs_; }

private:
    std::size_t n_obs_;
    int kappa_;
    FwPrior prior_;
};

/// Laplace auxiliary-model approximator (Gaussian over (mu, eta)).
Approximator fw_laplace_approximator(int kappa, FwPrior prior);

/// Prior draw with its summary, for rejection ABC.
struct AbcDraw {
    Vector theta;
    Vector summary;
};

/// Prior-predictive reference pool; draw k depends only on (seed, k).
std::vector<AbcDraw> abc_reference_pool(const JointModel& model, std::size_t size, std::uint64_t seed);

/// Parameters of the `accept_count` draws whose summaries are nearest to
/// `obs_summary` under the squared weighted distance (ties to lower position).
Matrix rejection_abc_oracle(const Vector& obs_summary, const std::vector<AbcDraw>& pool,
                            std::size_t accept_count, const Vector& weights);

/// Maps (mu, eta) particles to (mu, sigma = exp(eta / 2)).
Matrix to_mu_sigma(const Matrix& mu_eta);

struct MarginalSummary {
    Vector mean;
    Vector sd;
};
MarginalSummary marginal_summary(const Matrix& particles);

/// sum_p ((mean_p - ref_mean_p)^2 + (sd_p - ref_sd_p)^2) / ref_sd_p^2.
double summary_discrepancy(const MarginalSummary& s, const MarginalSummary& reference);

struct FwExampleConfig {
    std::size_t pool = 10000;
    std::size_t keep = 1000;
    std::size_t n_obs = 10;
    int kappa = 10;
    double true_mu = 0.0;
    double true_sigma = 1.0;
    FwPrior prior;
    std::size_t report_particles = 20000;
    std::size_t abc_pool = 0;      ///< 0 disables the ABC reference
    std::size_t abc_accept = 200;
    std::size_t bootstrap = 1000;  ///< 0 disables diagnostics
    double jitter = 0.0;
};

struct FwReport {
    FwExampleConfig config;
    std::uint64_t seed = 0;
    Dataset observed;
    Vector observed_summary;
    PosteriorApprox observed_approx;
    PosteriorApprox adjusted_approx;
    Vector weights;
    std::vector<ReplicateBundle> pool;
    std::vector<ReplicateBundle> retained;
    Calibration calibration;
    BootstrapDiagnostics diagnostics;
    MarginalSummary unadjusted;  ///< over (mu, sigma)
    MarginalSummary adjusted;
    std::optional<MarginalSummary> abc;
};

/// Sum-of-lognormals pipeline. `abc_pool` may be supplied to reuse a prior
/// reference sample across runs; otherwise one of size config.abc_pool is drawn.
FwReport fw_example(const FwExampleConfig& config, std::uint64_t seed,
                    const std::vector<AbcDraw>* abc_pool = nullptr);

} // namespace totvar::examples
