#include "totvar/examples/fenton_wilkinson.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "totvar/conditioning.hpp"
#include "totvar/error.hpp"
#include "totvar/optimize.hpp"
#include "totvar/parallel.hpp"

namespace totvar::examples {

namespace {

// s^2 and d s^2 / d sigma^2, stable for small and large sigma^2.
void fw_log_variance(double sigma2, int kappa, double& s2, double& ds2) {
    const double k = static_cast<double>(kappa);
    if (sigma2 < 30.0) {
        s2 = std::log1p(std::expm1(sigma2) / k);
    } else {
        s2 = sigma2 - std::log(k) + std::log1p((k - 1.0) * std::exp(-sigma2));
    }
    ds2 = 1.0 / (1.0 + (k - 1.0) * std::exp(-sigma2));
}

constexpr double kLog2Pi = 1.8378770664093454836;

} // namespace

FwMoments fw_moments(double mu, double sigma2, int kappa) {
    if (!(sigma2 > 0.0)) throw InvalidInput("fw_moments: sigma2 must be positive");
    if (kappa < 1) throw InvalidInput("fw_moments: kappa must be at least 1");
    double s2 = 0.0;
    double ds2 = 0.0;
    fw_log_variance(sigma2, kappa, s2, ds2);
    return {mu + std::log(static_cast<double>(kappa)) + 0.5 * (sigma2 - s2), s2};
}

LogDataStats log_data_stats(const Dataset& data) {
    if (data.size() < 1) throw InvalidInput("dataset must contain at least one value");
    LogDataStats st;
    st.n = static_cast<double>(data.size());
    for (Index k = 0; k < data.size(); ++k) {
        if (!(data(k) > 0.0)) throw InvalidInput("sum-of-lognormals data must be positive");
        st.sum_log += std::log(data(k));
    }
    st.mean_log = st.sum_log / st.n;
    for (Index k = 0; k < data.size(); ++k) {
        const double dev = std::log(data(k)) - st.mean_log;
        st.centred_ss += dev * dev;
    }
    return st;
}

FwLogPosterior::FwLogPosterior(const Dataset& data, int kappa, FwPrior prior,
                               std::optional<double> fixed_eta)
    : stats_(log_data_stats(data)), kappa_(kappa), prior_(prior), fixed_eta_(fixed_eta) {
    if (kappa < 1) throw InvalidInput("kappa must be at least 1");
}

double FwLogPosterior::operator()(const Vector& theta) const {
    Vector grad(theta.size());
    return value_and_gradient(theta, grad);
}

double FwLogPosterior::value_and_gradient(const Vector& theta, Vector& grad) const {
    const double mu = theta(0);
    const double eta = fixed_eta_ ? *fixed_eta_ : theta(1);
    const double sigma2 = std::exp(eta);
    double s2 = 0.0;
    double ds2 = 0.0;
    fw_log_variance(sigma2, kappa_, s2, ds2);
    const double m = mu + std::log(static_cast<double>(kappa_)) + 0.5 * (sigma2 - s2);

    const double n = stats_.n;
    const double gap = stats_.mean_log - m;
    const double q = stats_.centred_ss + n * gap * gap;
    double value = -stats_.sum_log - 0.5 * n * (kLog2Pi + std::log(s2)) - q / (2.0 * s2);

    const double dl_dm = n * gap / s2;
    const double dl_ds2 = -0.5 * n / s2 + q / (2.0 * s2 * s2);

    // prior on mu
    const double z = (mu - prior_.mu_mean) / prior_.mu_sd;
    value += -0.5 * z * z - std::log(prior_.mu_sd) - 0.5 * kLog2Pi;
    grad.resize(dim());
    grad(0) = dl_dm - z / prior_.mu_sd;

    if (!fixed_eta_) {
        // Gamma(a, b) on sigma = exp(eta / 2), with the Jacobian d sigma / d eta = sigma / 2.
        const double a = prior_.sigma_shape;
        const double b = prior_.sigma_rate;
        const double sigma = std::exp(0.5 * eta);
        value += a * std::log(b) - std::lgamma(a) + 0.5 * a * eta - b * sigma - std::numbers::ln2;
        const double dm_dsigma2 = 0.5 * (1.0 - ds2);
        grad(1) = (dl_dm * dm_dsigma2 + dl_ds2 * ds2) * sigma2 + 0.5 * a - 0.5 * b * sigma;
    }
    return value;
}

LaplaceResult laplace_approximation(const std::function<double(const Vector&, Vector&)>& log_h,
                                    const std::function<double(const Vector&)>& log_h_value,
                                    const std::vector<Vector>& starts) {
    if (starts.empty()) throw InvalidInput("laplace approximation needs at least one start");
    const SmoothObjective negated = [&](const Vector& x, Vector& g) {
        const double v = log_h(x, g);
        g = -g;
        return -v;
    };
    MinimizeResult best;
    bool have_best = false;
    int best_start = -1;
    MinimizeResult best_any;
    bool have_any = false;
    for (std::size_t k = 0; k < starts.size(); ++k) {
        MinimizeResult r = minimize_bfgs(negated, starts[k]);
        if (std::isfinite(r.value) && (!have_any || r.value < best_any.value)) {
            best_any = r;
            have_any = true;
        }
        if (r.converged && std::isfinite(r.value) && (!have_best || r.value < best.value)) {
            best = std::move(r);
            have_best = true;
            best_start = static_cast<int>(k);
        }
    }
    if (!have_best) {
        std::ostringstream msg;
        msg.precision(10);
        msg << "mode search did not converge from " << starts.size() << " starts";
        if (have_any) {
            msg << "; best iterate (";
            for (Index i = 0; i < best_any.x.size(); ++i) msg << (i ? ", " : "") << best_any.x(i);
            msg << ") with gradient norm " << best_any.gradient_norm;
        }
        throw NumericalError(msg.str());
    }

    LaplaceResult out;
    out.mode = best.x;
    out.log_h = -best.value;
    out.start_used = best_start;
    const auto neg_log_h = [&](const Vector& x) { return -log_h_value(x); };
    out.hessian = symmetrized(central_hessian(neg_log_h, out.mode, 1e-4));
    if (!out.hessian.allFinite() || !lower_cholesky(out.hessian)) {
        throw NumericalError("Laplace approximation invalid at mode");
    }
    out.cov = symmetrized(out.hessian.inverse());
    return out;
}

std::vector<Vector> fw_starts(const Dataset& data, int kappa) {
    const LogDataStats st = log_data_stats(data);
    const double k = static_cast<double>(kappa);
    const double s2 = std::max(st.n > 1 ? st.centred_ss / (st.n - 1.0) : 0.0, 1e-4);
    const double sigma2 = std::log(k * std::expm1(s2) + 1.0);
    const double mu = st.mean_log - std::log(k) - 0.5 * (sigma2 - s2);
    Vector a(2), b(2), c(2);
    a << mu, std::log(sigma2);
    b << st.mean_log - std::log(k) - 0.5, 0.0;
    c << 0.0, 0.0;
    return {a, b, c};
}

namespace {

LaplaceResult fw_laplace(const Dataset& data, int kappa, const FwPrior& prior) {
    const FwLogPosterior post(data, kappa, prior);
    return laplace_approximation(
        [&](const Vector& x, Vector& g) { return post.value_and_gradient(x, g); },
        [&](const Vector& x) { return post(x); }, fw_starts(data, kappa));
}

} // namespace

Vector fw_mode(const Dataset& data, int kappa, const FwPrior& prior) {
    const FwLogPosterior post(data, kappa, prior);
    const SmoothObjective negated = [&](const Vector& x, Vector& g) {
        const double v = post.value_and_gradient(x, g);
        g = -g;
        return -v;
    };
    MinimizeResult best;
    bool have = false;
    for (const Vector& start : fw_starts(data, kappa)) {
        MinimizeResult r = minimize_bfgs(negated, start);
        if (r.converged && std::isfinite(r.value) && (!have || r.value < best.value)) {
            best = std::move(r);
            have = true;
        }
    }
    if (!have) throw NumericalError("mode search did not converge from any start");
    return best.x;
}

LaplaceResult laplace_auxiliary_posterior(const Dataset& data, int kappa, const FwPrior& prior) {
    return fw_laplace(data, kappa, prior);
}

Vector FwModel::sample_prior(Rng& rng) const {
    const double mu = prior_.mu_mean + prior_.mu_sd * standard_normal(rng);
    double sigma = gamma_rate(rng, prior_.sigma_shape, prior_.sigma_rate);
    sigma = std::max(sigma, std::numeric_limits<double>::min());
    Vector theta(2);
    theta << mu, 2.0 * std::log(sigma);
    return theta;
}

Dataset FwModel::simulate(const Vector& theta, Rng& rng) const {
    const double mu = theta(0);
    const double sigma = std::exp(0.5 * theta(1));
    Dataset y(static_cast<Index>(n_obs_));
    for (Index i = 0; i < y.size(); ++i) {
        double total = 0.0;
        for (int k = 0; k < kappa_; ++k) total += std::exp(mu + sigma * standard_normal(rng));
        y(i) = std::max(total, std::numeric_limits<double>::min());
    }
    return y;
}

Vector FwModel::summarize(const Dataset& data) const {
    return fw_mode(data, kappa_, prior_);
}

Approximator fw_laplace_approximator(int kappa, FwPrior prior) {
    Approximator a;
    a.approximate = [kappa, prior](const Dataset& data, std::uint64_t) {
        LaplaceResult r = fw_laplace(data, kappa, prior);
        return PosteriorApprox::gaussian(r.mode, r.cov);
    };
    return a;
}

std::vector<AbcDraw> abc_reference_pool(const JointModel& model, std::size_t size, std::uint64_t seed) {
    std::vector<AbcDraw> pool(size);
    parallel_for(size, [&](std::size_t k) {
        const SimulatedReplicate sim = simulate_replicate(model, derive_seed(seed, k));
        pool[k].theta = sim.theta;
        pool[k].summary = model.summarize(sim.data);
    }, model.concurrent() ? 0 : 1);
    return pool;
}

Matrix rejection_abc_oracle(const Vector& obs_summary, const std::vector<AbcDraw>& pool,
                            std::size_t accept_count, const Vector& weights) {
    if (pool.empty()) throw InvalidInput("rejection ABC: empty pool");
    if (accept_count < 1 || accept_count > pool.size()) {
        throw InvalidInput("rejection ABC: accept count must be in [1, pool size]");
    }
    std::vector<double> dist;
    dist.reserve(pool.size());
    for (const auto& draw : pool) dist.push_back(weighted_euclidean_distance(draw.summary, obs_summary, weights));
    const auto keep = nearest_positions(dist, accept_count);
    Matrix out(static_cast<Index>(keep.size()), pool.front().theta.size());
    for (std::size_t r = 0; r < keep.size(); ++r) out.row(static_cast<Index>(r)) = pool[keep[r]].theta.transpose();
    return out;
}

Matrix to_mu_sigma(const Matrix& mu_eta) {
    Matrix out = mu_eta;
    out.col(1) = (0.5 * mu_eta.col(1).array()).exp().matrix();
    return out;
}

MarginalSummary marginal_summary(const Matrix& particles) {
    MarginalSummary s;
    const double n = static_cast<double>(particles.rows());
    s.mean = particles.colwise().mean().transpose();
    const Matrix centred = particles.rowwise() - s.mean.transpose();
    s.sd = (centred.array().square().colwise().sum() / (n - 1.0)).sqrt().matrix().transpose();
    return s;
}

double summary_discrepancy(const MarginalSummary& s, const MarginalSummary& reference) {
    double total = 0.0;
    for (Index p = 0; p < s.mean.size(); ++p) {
        const double w2 = reference.sd(p) * reference.sd(p);
        const double dm = s.mean(p) - reference.mean(p);
        const double ds = s.sd(p) - reference.sd(p);
        total += (dm * dm + ds * ds) / w2;
    }
    return total;
}

FwReport fw_example(const FwExampleConfig& config, std::uint64_t seed, const std::vector<AbcDraw>* abc_pool) {
    if (config.keep < 2 || config.keep > config.pool) throw InvalidInput("fw example: need 2 <= keep <= pool");
    if (!(config.true_sigma > 0.0)) throw InvalidInput("fw example: true sigma must be positive");

    FwReport report;
    report.config = config;
    report.seed = seed;
    const FwModel model(config.n_obs, config.kappa, config.prior);
    const Approximator approximator = fw_laplace_approximator(config.kappa, config.prior);

    Vector truth(2);
    truth << config.true_mu, 2.0 * std::log(config.true_sigma);
    Rng obs_rng = make_rng(derive_seed(seed, 1));
    report.observed = model.simulate(truth, obs_rng);
    report.observed_summary = model.summarize(report.observed);
    report.observed_approx = approximator.approximate(report.observed, derive_seed(seed, 5));

    report.pool = generate_replicates(model, approximator, config.pool, derive_seed(seed, 2));
    std::vector<Vector> summaries;
    summaries.reserve(report.pool.size());
    for (const auto& b : report.pool) summaries.push_back(b.summary);
    report.weights = mean_absolute_deviation(summaries);

    ConditioningRule rule;
    rule.distance = weighted_euclidean(report.weights);
    rule.retention = KeepCountRetention{config.keep};
    report.retained = apply_conditioning(report.pool, rule, report.observed_summary);

    report.calibration = calibrate(report.retained, config.jitter);
    report.adjusted_approx = calibrate_observed(report.observed_approx, report.calibration.map);

    if (config.bootstrap > 0) {
        report.diagnostics = bootstrap_diagnostics(report.retained, config.bootstrap, derive_seed(seed, 4));
    }

    const auto particles = static_cast<Index>(config.report_particles);
    Rng unadjusted_rng = make_rng(derive_seed(seed, 6));
    Rng adjusted_rng = make_rng(derive_seed(seed, 7));
    report.unadjusted = marginal_summary(
        to_mu_sigma(to_particles(report.observed_approx, particles, unadjusted_rng).particles));
    report.adjusted = marginal_summary(
        to_mu_sigma(to_particles(report.adjusted_approx, particles, adjusted_rng).particles));

    std::vector<AbcDraw> own_pool;
    if (!abc_pool && config.abc_pool > 0) {
        own_pool = abc_reference_pool(model, config.abc_pool, derive_seed(seed, 3));
        abc_pool = &own_pool;
    }
    if (abc_pool) {
        const Matrix accepted =
            rejection_abc_oracle(report.observed_summary, *abc_pool, config.abc_accept, report.weights);
        report.abc = marginal_summary(to_mu_sigma(accepted));
    }
    return report;
}

} // namespace totvar::examples
