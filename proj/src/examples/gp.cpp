#include "totvar/examples/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "totvar/error.hpp"

namespace totvar::examples {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;

double matern_correlation(double d, double lambda) {
    const double u = kSqrt3 * d / lambda;
    return (1.0 + u) * std::exp(-u);
}

Matrix draw_inputs(Rng& rng, std::size_t count, const Matrix& chol) {
    Matrix x(static_cast<Index>(count), 2);
    for (Index i = 0; i < x.rows(); ++i) x.row(i) = (chol * standard_normal(rng, 2)).transpose();
    return x;
}

} // namespace

double matern15(double d, double tau2, double lambda) {
    if (d < 0.0 || !(tau2 > 0.0) || !(lambda > 0.0)) {
        throw InvalidInput("matern15: need d >= 0, tau2 > 0, lambda > 0");
    }
    return tau2 * matern_correlation(d, lambda);
}

Matrix matern_gram(const Matrix& x, double tau2, double lambda) {
    const Index n = x.rows();
    Matrix k(n, n);
    for (Index i = 0; i < n; ++i) {
        k(i, i) = tau2;
        for (Index j = 0; j < i; ++j) {
            const double d = (x.row(i) - x.row(j)).norm();
            k(i, j) = k(j, i) = tau2 * matern_correlation(d, lambda);
        }
    }
    return k;
}

double inverse_gamma_mean(double a, double b) {
    if (!(a > 1.0)) throw InvalidInput("inverse gamma mean needs shape > 1");
    return b / (a - 1.0);
}

Matrix GpConfig::random_input_chol(std::uint64_t seed) {
    Rng rng = make_rng(seed);
    const double sd = std::sqrt(0.5);
    Matrix l = Matrix::Zero(2, 2);
    l(0, 0) = std::abs(sd * standard_normal(rng));
    l(1, 0) = sd * standard_normal(rng);
    l(1, 1) = std::abs(sd * standard_normal(rng));
    return l;
}

void GpConfig::validate() const {
    if (bins < 2) throw InvalidInput("gp config: need at least 2 bins");
    if (keep < 2 || keep > replicates) throw InvalidInput("gp config: need 2 <= keep <= replicates");
    if (n < 2 || m < 1) throw InvalidInput("gp config: need n >= 2 and m >= 1");
    if (input_chol.rows() != 2 || input_chol.cols() != 2 || !(input_chol(0, 0) > 0.0) ||
        !(input_chol(1, 1) > 0.0) || input_chol(0, 1) != 0.0) {
        throw InvalidInput("gp config: input factor must be 2x2 lower triangular with positive diagonal");
    }
    const auto& p = priors;
    for (double v : {p.a_sigma, p.b_sigma, p.a_tau, p.b_tau, p.a_lambda, p.b_lambda}) {
        if (!(v > 0.0)) throw InvalidInput("gp config: prior parameters must be positive");
    }
}

GpDataset simulate_gp_dataset(const GpConfig& config, const GpHyper& hyper, Rng& rng) {
    if (!(hyper.tau2 > 0.0) || !(hyper.lambda > 0.0) || hyper.sigma2 < 0.0) {
        throw InvalidInput("gp simulation: need tau2 > 0, lambda > 0, sigma2 >= 0");
    }
    GpDataset out;
    out.truth = hyper;
    const std::size_t total = config.n + config.m;
    const Matrix x = draw_inputs(rng, total, config.input_chol);

    Matrix cov = matern_gram(x, hyper.tau2, hyper.lambda);
    cov.diagonal().array() += hyper.sigma2;
    double nugget = 1e-8 * hyper.tau2;
    std::optional<Matrix> chol;
    for (int attempt = 0; attempt <= 3 && !chol; ++attempt, nugget *= 10.0) {
        Matrix jittered = cov;
        jittered.diagonal().array() += nugget;
        chol = lower_cholesky(jittered);
    }
    if (!chol) throw NumericalError("gp simulation: covariance factorization failed after jitter escalation");

    const Vector z = *chol * standard_normal(rng, static_cast<Index>(total));
    const auto n = static_cast<Index>(config.n);
    const auto m = static_cast<Index>(config.m);
    out.x_train = x.topRows(n);
    out.x_test = x.bottomRows(m);
    out.z_train = z.head(n);
    out.z_test = z.tail(m);
    return out;
}

GpDataset simulate_gp_replicate(const GpConfig& config, std::size_t r, std::uint64_t master_seed) {
    Rng rng = make_rng(derive_seed(master_seed, r));
    const auto& p = config.priors;
    GpHyper hyper;
    hyper.sigma2 = inverse_gamma(rng, p.a_sigma, p.b_sigma);
    hyper.tau2 = inverse_gamma(rng, p.a_tau, p.b_tau);
    hyper.lambda = inverse_gamma(rng, p.a_lambda, p.b_lambda);
    return simulate_gp_dataset(config, hyper, rng);
}

GpDataset simulate_gp_observed(const GpConfig& config, std::uint64_t master_seed) {
    // A separate stream from every replicate index.
    return simulate_gp_replicate(config, 0, derive_seed(master_seed, 0x0b5e7edULL));
}

VariogramFit fit_variogram(const Matrix& x, const Vector& z, std::size_t bins) {
    const Index n = x.rows();
    if (n < 10) throw InvalidInput("variogram fit needs at least 10 points");
    if (z.size() != n) throw InvalidInput("variogram fit: inputs and responses differ in length");
    if (bins < 4) throw InvalidInput("variogram fit: need at least 4 lag bins");

    double max_dist = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < i; ++j) max_dist = std::max(max_dist, (x.row(i) - x.row(j)).norm());
    }
    const double max_lag = 0.5 * max_dist;
    if (!(max_lag > 0.0)) throw NumericalError("variogram fit: all inputs coincide");
    const double width = max_lag / static_cast<double>(bins);

    std::vector<double> count(bins, 0.0), gamma_sum(bins, 0.0), lag_sum(bins, 0.0);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < i; ++j) {
            const double d = (x.row(i) - x.row(j)).norm();
            if (d > max_lag || d <= 0.0) continue;
            auto b = static_cast<std::size_t>(d / width);
            if (b >= bins) b = bins - 1;
            const double diff = z(i) - z(j);
            count[b] += 1.0;
            gamma_sum[b] += 0.5 * diff * diff;
            lag_sum[b] += d;
        }
    }
    std::vector<double> lag, gamma, weight;
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0.0) continue;
        lag.push_back(lag_sum[b] / count[b]);
        gamma.push_back(gamma_sum[b] / count[b]);
        weight.push_back(count[b]);
    }
    if (lag.size() < 4) throw NumericalError("variogram fit: fewer than 4 non-empty lag bins");
    if (*std::max_element(gamma.begin(), gamma.end()) == 0.0) {
        throw NumericalError("variogram fit: constant response, zero variance estimates");
    }

    // For fixed lambda the model is linear in (nugget, tau2) >= 0; profile over lambda.
    struct Linear {
        double nugget, tau2, loss;
    };
    auto solve_linear = [&](double lambda) {
        double s11 = 0, s12 = 0, s22 = 0, t1 = 0, t2 = 0;
        for (std::size_t b = 0; b < lag.size(); ++b) {
            const double g = 1.0 - matern_correlation(lag[b], lambda);
            s11 += weight[b];
            s12 += weight[b] * g;
            s22 += weight[b] * g * g;
            t1 += weight[b] * gamma[b];
            t2 += weight[b] * g * gamma[b];
        }
        auto loss_of = [&](double nug, double tau2) {
            double loss = 0.0;
            for (std::size_t b = 0; b < lag.size(); ++b) {
                const double r = gamma[b] - nug - tau2 * (1.0 - matern_correlation(lag[b], lambda));
                loss += weight[b] * r * r;
            }
            return loss;
        };
        Linear best{0.0, 0.0, std::numeric_limits<double>::infinity()};
        const double det = s11 * s22 - s12 * s12;
        if (det > 1e-14 * s11 * s22) {
            const double nug = (s22 * t1 - s12 * t2) / det;
            const double tau2 = (s11 * t2 - s12 * t1) / det;
            if (nug >= 0.0 && tau2 >= 0.0) best = {nug, tau2, loss_of(nug, tau2)};
        }
        if (!std::isfinite(best.loss)) {
            const double nug_only = std::max(t1 / s11, 0.0);
            const double tau_only = s22 > 0.0 ? std::max(t2 / s22, 0.0) : 0.0;
            const Linear a{nug_only, 0.0, loss_of(nug_only, 0.0)};
            const Linear c{0.0, tau_only, loss_of(0.0, tau_only)};
            best = a.loss <= c.loss ? a : c;
        }
        return best;
    };

    // Outside [lag width, largest lag] the range trades off freely against
    // the nugget or the sill, so the search stays inside.
    const double lo = std::log(width);
    const double hi = std::log(max_lag);
    constexpr int grid = 80;
    double best_log = lo;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int g = 0; g <= grid; ++g) {
        const double ll = lo + (hi - lo) * g / grid;
        const double loss = solve_linear(std::exp(ll)).loss;
        if (loss < best_loss) {
            best_loss = loss;
            best_log = ll;
        }
    }
    // golden-section refinement within one grid cell either side
    const double cell = (hi - lo) / grid;
    double a = std::max(lo, best_log - cell);
    double b = std::min(hi, best_log + cell);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = solve_linear(std::exp(c)).loss;
    double fd = solve_linear(std::exp(d)).loss;
    for (int it = 0; it < 60; ++it) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - phi * (b - a);
            fc = solve_linear(std::exp(c)).loss;
        } else {
            a = c; c = d; fc = fd;
            d = a + phi * (b - a);
            fd = solve_linear(std::exp(d)).loss;
        }
    }
    double lambda = std::exp(0.5 * (a + b));
    Linear fit = solve_linear(lambda);
    if (fit.loss > best_loss) {
        lambda = std::exp(best_log);
        fit = solve_linear(lambda);
    }
    return {fit.tau2, lambda, fit.nugget, lag.size()};
}

GpHyperEstimate estimate_gp_hyperparams(const Matrix& x, const Vector& z,
                                        std::optional<double> residual_variance) {
    if (x.rows() < 30) throw InvalidInput("hyperparameter estimation needs at least 30 training points");
    const VariogramFit fit = fit_variogram(x, z);
    GpHyperEstimate est;
    est.tau = std::sqrt(fit.tau2);
    est.lambda = fit.lambda;
    const double s2 = residual_variance ? *residual_variance : fit.nugget;
    if (s2 < 0.0) throw InvalidInput("residual variance must be non-negative");
    est.sigma = std::sqrt(s2);
    return est;
}

std::vector<double> nearest_training_distances(const Matrix& x_train, const Matrix& x_test,
                                               const Matrix& input_chol) {
    if (x_train.rows() < 1) throw InvalidInput("nearest distance: empty training set");
    const auto solver = input_chol.triangularView<Eigen::Lower>();
    const Matrix white_train = solver.solve(x_train.transpose());  // 2 x n
    const Matrix white_test = solver.solve(x_test.transpose());
    std::vector<double> out(static_cast<std::size_t>(x_test.rows()));
    for (Index j = 0; j < white_test.cols(); ++j) {
        const double best = (white_train.colwise() - white_test.col(j)).colwise().squaredNorm().minCoeff();
        out[static_cast<std::size_t>(j)] = std::sqrt(best);
    }
    return out;
}

std::size_t BinPartition::bin_of(double distance) const {
    const std::size_t k = count();
    if (k == 0) throw InvalidInput("empty bin partition");
    // Interior edges e_1 .. e_{K-1} decide membership; outer edges only widen.
    const auto first = edges.begin() + 1;
    const auto last = edges.end() - 1;
    const auto it = std::upper_bound(first, last, distance);
    return static_cast<std::size_t>(it - first);
}

BinPartition build_bins(const std::vector<std::vector<double>>& distances, std::size_t bins) {
    if (bins < 2) throw InvalidInput("build_bins: need at least 2 bins");
    if (distances.empty()) throw InvalidInput("build_bins: no replicates");
    double sum_min = 0.0;
    double sum_spacing = 0.0;
    double global_min = std::numeric_limits<double>::infinity();
    double global_max = -global_min;
    for (const auto& rep : distances) {
        if (rep.empty()) throw InvalidInput("build_bins: replicate without test distances");
        const auto [lo, hi] = std::minmax_element(rep.begin(), rep.end());
        sum_min += *lo;
        sum_spacing += (*hi - *lo) / static_cast<double>(bins - 1);
        global_min = std::min(global_min, *lo);
        global_max = std::max(global_max, *hi);
    }
    const double r = static_cast<double>(distances.size());
    const double base = sum_min / r;
    const double spacing = sum_spacing / r;
    if (!(spacing > 0.0)) throw InvalidInput("degenerate distance distribution");

    BinPartition out;
    out.edges.resize(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) out.edges[k] = base + spacing * static_cast<double>(k);
    out.edges.front() = std::min(out.edges.front(), global_min);
    out.edges.back() = std::max(out.edges.back(), global_max);
    return out;
}

} // namespace totvar::examples
