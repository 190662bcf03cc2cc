#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "totvar/linalg.hpp"
#include "totvar/random.hpp"

namespace totvar::examples {

/// Matern covariance with smoothness 1.5:
/// tau2 (1 + sqrt(3) d / lambda) exp(-sqrt(3) d / lambda).
double matern15(double d, double tau2, double lambda);

/// Gram matrix of matern15 over the rows of X (Euclidean distances).
Matrix matern_gram(const Matrix& X, double tau2, double lambda);

/// Inverse-gamma hyperpriors IG(a, b) with mean b / (a - 1).
struct GpHyperPrior {
    double a_sigma = 3.0;
    double b_sigma = 0.2;
    double a_tau = 14.5;
    double b_tau = 6.75;
    double a_lambda = 9.0;
    double b_lambda = 9.0;
};

double inverse_gamma_mean(double a, double b);

/// Generating covariance parameters of one replicate.
struct GpHyper {
    double tau2 = 0.1;
    double lambda = 1.0;
    double sigma2 = 0.1;
};

struct GpConfig {
    std::size_t n = 1000;       ///< training points per dataset
    std::size_t m = 100;        ///< test points per dataset
    std::size_t replicates = 1000;  ///< R
    std::size_t bins = 10;      ///< K
    std::size_t keep = 100;     ///< replicates retained by hyperparameter distance
    Matrix input_chol = Matrix::Identity(2, 2);  ///< lower factor of Sigma_x
    GpHyperPrior priors;
    static constexpr double nu = 1.5;

    /// Draws the input covariance factor: entries on and below the diagonal
    /// ~ N(0, 0.5), diagonal made positive.
    static Matrix random_input_chol(std::uint64_t seed);
    void validate() const;
};

/// One simulated dataset: training and test inputs/responses.
struct GpDataset {
    GpHyper truth;
    Matrix x_train;  ///< n x 2
    Vector z_train;
    Matrix x_test;   ///< m x 2
    Vector z_test;
};

/// Draws inputs ~ N(0, Sigma_x) and responses ~ N(0, C + sigma2 I) at fixed
/// hyperparameters. A nugget of 1e-8 tau2 is added for factorization and
/// escalated tenfold up to 3 times if needed.
GpDataset simulate_gp_dataset(const GpConfig& config, const GpHyper& hyper, Rng& rng);

/// Replicate r: hyperparameters from the priors, then a dataset. Depends only
/// on (config, r, master_seed).
GpDataset simulate_gp_replicate(const GpConfig& config, std::size_t r, std::uint64_t master_seed);

/// The extra replicate whose training set plays the observed data.
GpDataset simulate_gp_observed(const GpConfig& config, std::uint64_t master_seed);

struct VariogramFit {
    double tau2 = 0.0;
    double lambda = 0.0;
    double nugget = 0.0;
    std::size_t bins_used = 0;
};

/// Weighted least squares fit of nugget + tau2 (1 - rho(h)) to the empirical
/// semivariogram on `bins` equal-width lags up to half the maximum distance,
/// weights = pair counts. lambda is searched between one lag width and the
/// largest lag.
VariogramFit fit_variogram(const Matrix& x, const Vector& z, std::size_t bins = 12);

struct GpHyperEstimate {
    double tau = 0.0;
    double lambda = 0.0;
    double sigma = 0.0;
};

/// (tau, lambda) from the variogram; sigma from the supplied residual variance
/// (the surrogate's), or from the variogram nugget when none is given.
GpHyperEstimate estimate_gp_hyperparams(const Matrix& x, const Vector& z,
                                        std::optional<double> residual_variance = {});

/// min_i sqrt((x_i - x)^T Sigma_x^{-1} (x_i - x)) for each test row.
std::vector<double> nearest_training_distances(const Matrix& x_train, const Matrix& x_test,
                                               const Matrix& input_chol);

/// Distance bins. Interior edges follow the replicate-averaged spacing; the
/// outer edges are widened to the observed extremes so every distance lands
/// in exactly one bin: [e_k, e_{k+1}), last bin closed.
struct BinPartition {
    std::vector<double> edges;  ///< K + 1 increasing values

    std::size_t count() const { return edges.empty() ? 0 : edges.size() - 1; }
    std::size_t bin_of(double distance) const;
};

/// Per replicate r, spacing (max_r - min_r) / (K - 1); edge k is the average
/// over replicates of min_r + k * spacing_r.
BinPartition build_bins(const std::vector<std::vector<double>>& distances, std::size_t bins);

} // namespace totvar::examples
