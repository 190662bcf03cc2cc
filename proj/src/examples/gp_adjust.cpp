#include "totvar/examples/gp_adjust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "totvar/conditioning.hpp"
#include "totvar/error.hpp"
#include "totvar/parallel.hpp"

namespace totvar::examples {

GpReplicateFit fit_gp_replicate(const GpConfig& config, const GpDataset& data, const Surrogate& surrogate,
                                std::size_t index, std::uint64_t seed) {
    GpReplicateFit out;
    out.index = index;
    out.seed = seed;
    out.truth = data.truth;
    const auto predictor = surrogate.train({data.x_train, data.z_train, data.truth}, derive_seed(seed, 0x5u));
    const Predictions pred = predictor->predict(data.x_test);
    const double residual = predictor->residual_variance();
    const GpHyperEstimate est = estimate_gp_hyperparams(data.x_train, data.z_train, residual);
    out.estimate = Vector{{est.tau, est.lambda, est.sigma}};
    out.distance = nearest_training_distances(data.x_train, data.x_test, config.input_chol);
    out.z_test = data.z_test;
    out.mean = pred.mean;
    out.variance = pred.variance;
    if (!out.mean.allFinite() || !out.variance.allFinite() || (out.variance.array() <= 0.0).any()) {
        throw NumericalError("surrogate produced non-finite or non-positive predictive moments");
    }
    return out;
}

double gaussian_log_score(double z, double mean, double var) {
    if (!(var > 0.0)) throw InvalidInput("log score needs positive variance");
    const double r = z - mean;
    return 0.5 * std::log(2.0 * std::numbers::pi * var) + 0.5 * r * r / var;
}

namespace {

Vector estimate_sd(const std::vector<GpReplicateFit>& reps) {
    const Index d = reps.front().estimate.size();
    Vector mean = Vector::Zero(d);
    for (const auto& r : reps) mean += r.estimate;
    mean /= static_cast<double>(reps.size());
    Vector var = Vector::Zero(d);
    for (const auto& r : reps) var += (r.estimate - mean).cwiseAbs2();
    var /= static_cast<double>(reps.size() - 1);
    Vector sd = var.cwiseSqrt();
    if ((sd.array() <= 0.0).any() || !sd.allFinite()) {
        throw NumericalError("hyperparameter estimates have zero spread across replicates");
    }
    return sd;
}

std::size_t nearest_valid(const std::vector<bool>& valid, std::size_t k) {
    for (std::size_t step = 1; step < valid.size(); ++step) {
        if (k >= step && valid[k - step]) return k - step;
        if (k + step < valid.size() && valid[k + step]) return k + step;
    }
    throw NumericalError("no distance bin has enough retained test points for an adjustment");
}

} // namespace

GpAdjustReport gp_surrogate_adjust(const GpConfig& config, const std::vector<GpReplicateFit>& replicates,
                                   const GpReplicateFit& observed, double jitter) {
    config.validate();
    if (replicates.size() < 2) throw InvalidInput("gp adjustment needs at least 2 replicates");
    if (config.keep > replicates.size()) throw InvalidInput("keep exceeds the number of replicates");

    GpAdjustReport out;
    std::vector<std::vector<double>> all_distances;
    all_distances.reserve(replicates.size());
    for (const auto& r : replicates) all_distances.push_back(r.distance);
    out.bins = build_bins(all_distances, config.bins);
    const std::size_t k_bins = out.bins.count();

    out.weights = estimate_sd(replicates);
    std::vector<double> dist(replicates.size());
    for (std::size_t i = 0; i < replicates.size(); ++i) {
        dist[i] = weighted_euclidean_distance(replicates[i].estimate, observed.estimate, out.weights);
    }
    const auto kept = nearest_positions(dist, config.keep);
    for (std::size_t pos : kept) out.retained.push_back(replicates[pos].index);
    std::sort(out.retained.begin(), out.retained.end());

    // Pool retained test points per bin, in replicate order.
    std::vector<std::vector<ReplicateBundle>> pooled(k_bins);
    for (std::size_t pos : kept) {
        const auto& r = replicates[pos];
        for (std::size_t l = 0; l < r.distance.size(); ++l) {
            const auto li = static_cast<Index>(l);
            ReplicateBundle b;
            b.index = r.index * r.distance.size() + l;
            b.theta = Vector::Constant(1, r.z_test(li));
            b.approx = PosteriorApprox::gaussian(Vector::Constant(1, r.mean(li)),
                                                 Matrix::Constant(1, 1, r.variance(li)));
            b.seed = r.seed;
            pooled[out.bins.bin_of(r.distance[l])].push_back(std::move(b));
        }
    }

    out.adjustments.resize(k_bins);
    std::vector<bool> valid(k_bins, false);
    for (std::size_t k = 0; k < k_bins; ++k) {
        auto& adj = out.adjustments[k];
        adj.bin = k;
        adj.source = k;
        adj.pairs = pooled[k].size();
        if (adj.pairs < 2) {
            out.warnings.push_back("bin " + std::to_string(k) + " has " + std::to_string(adj.pairs) +
                                   " retained test points; merged with nearest non-empty bin");
            continue;
        }
        try {
            adj.summary = estimate_moments(pooled[k]);
            adj.map = fit_adjustment(adj.summary, jitter);
            adj.fitted = true;
            valid[k] = true;
        } catch (const NumericalError& e) {
            out.warnings.push_back("bin " + std::to_string(k) + " fit failed (" + e.what() +
                                   "); merged with nearest valid bin");
        }
    }
    for (std::size_t k = 0; k < k_bins; ++k) {
        auto& adj = out.adjustments[k];
        if (adj.fitted) continue;
        const std::size_t src = nearest_valid(valid, k);
        adj.source = src;
        adj.summary = out.adjustments[src].summary;
        adj.map = out.adjustments[src].map;
    }

    // Observed predictives.
    const auto& obs = observed;
    const std::size_t m = obs.distance.size();
    const auto [dmin, dmax] = std::minmax_element(obs.distance.begin(), obs.distance.end());
    const double width = (*dmax - *dmin) / static_cast<double>(kScoreIntervals);
    for (std::size_t e = 0; e <= kScoreIntervals; ++e) out.interval_edges.push_back(*dmin + width * static_cast<double>(e));
    out.interval_edges.back() = *dmax;

    std::vector<double> sum_u(kScoreIntervals, 0.0), sum_a(kScoreIntervals, 0.0), count(kScoreIntervals, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        const auto ji = static_cast<Index>(j);
        GpScoreRow row;
        row.point = j;
        row.distance = obs.distance[j];
        row.bin = out.bins.bin_of(row.distance);
        row.interval = width > 0.0 ? std::min(kScoreIntervals - 1, static_cast<std::size_t>((row.distance - *dmin) / width)) : 0;
        row.z = obs.z_test(ji);
        row.mean_unadjusted = obs.mean(ji);
        row.var_unadjusted = obs.variance(ji);

        const AdjustmentMap& map = out.adjustments[row.bin].map;
        const PosteriorApprox adjusted = calibrate_observed(
            PosteriorApprox::gaussian(Vector::Constant(1, row.mean_unadjusted),
                                      Matrix::Constant(1, 1, row.var_unadjusted)),
            map);
        row.mean_adjusted = adjusted.mean(0);
        row.var_adjusted = adjusted.cov(0, 0);

        row.score_unadjusted = gaussian_log_score(row.z, row.mean_unadjusted, row.var_unadjusted);
        row.score_adjusted = gaussian_log_score(row.z, row.mean_adjusted, row.var_adjusted);
        out.mean_score_unadjusted += row.score_unadjusted;
        out.mean_score_adjusted += row.score_adjusted;
        sum_u[row.interval] += row.score_unadjusted;
        sum_a[row.interval] += row.score_adjusted;
        count[row.interval] += 1.0;
        out.scores.push_back(row);
    }
    out.mean_score_unadjusted /= static_cast<double>(m);
    out.mean_score_adjusted /= static_cast<double>(m);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t q = 0; q < kScoreIntervals; ++q) {
        out.interval_score_unadjusted.push_back(count[q] > 0 ? sum_u[q] / count[q] : nan);
        out.interval_score_adjusted.push_back(count[q] > 0 ? sum_a[q] / count[q] : nan);
    }
    return out;
}

GpRun gp_example(const GpConfig& config, const Surrogate& surrogate, std::uint64_t seed, double jitter) {
    config.validate();
    GpRun run;
    run.replicates.resize(config.replicates);
    parallel_for(config.replicates, [&](std::size_t r) {
        const GpDataset data = simulate_gp_replicate(config, r, seed);
        try {
            run.replicates[r] = fit_gp_replicate(config, data, surrogate, r, derive_seed(seed, r));
        } catch (const Error& e) {
            throw NumericalError("gp replicate " + std::to_string(r) + ": " + e.what());
        }
    });
    const std::uint64_t obs_seed = derive_seed(seed, 0x0b5e7edULL);
    run.observed = fit_gp_replicate(config, simulate_gp_observed(config, seed), surrogate, config.replicates, obs_seed);
    run.report = gp_surrogate_adjust(config, run.replicates, run.observed, jitter);
    run.report.surrogate = surrogate.name();
    return run;
}

} // namespace totvar::examples
