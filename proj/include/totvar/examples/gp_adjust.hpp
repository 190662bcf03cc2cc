#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "totvar/adjust.hpp"
#include "totvar/examples/gp.hpp"
#include "totvar/examples/surrogate.hpp"

namespace totvar::examples {

/// Everything the adjustment needs from one simulated dataset.
struct GpReplicateFit {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    GpHyper truth;
    Vector estimate;               ///< (tau_hat, lambda_hat, sigma_hat)
    std::vector<double> distance;  ///< nearest-training distance per test point
    Vector z_test;
    Vector mean;                   ///< surrogate predictive mean at the test inputs
    Vector variance;               ///< surrogate predictive variance at the test inputs
};

GpReplicateFit fit_gp_replicate(const GpConfig& config, const GpDataset& data, const Surrogate& surrogate,
                                std::size_t index, std::uint64_t seed);

/// Scalar map for one distance bin, fitted on the pooled (z, z_hat, v) triples
/// of the retained replicates' test points in that bin.
struct BinAdjustment {
    std::size_t bin = 0;
    std::size_t pairs = 0;
    bool fitted = false;            ///< false: borrowed from `source`
    std::size_t source = 0;
    MomentSummary summary;          ///< of the bin the map was fitted on
    AdjustmentMap map;
};

struct GpScoreRow {
    std::size_t point = 0;
    double distance = 0.0;
    std::size_t bin = 0;            ///< adjustment bin
    std::size_t interval = 0;       ///< one of four equal-length reporting intervals
    double z = 0.0;
    double mean_unadjusted = 0.0;
    double var_unadjusted = 0.0;
    double mean_adjusted = 0.0;
    double var_adjusted = 0.0;
    double score_unadjusted = 0.0;  ///< negative log predictive density; lower is better
    double score_adjusted = 0.0;
};

struct GpAdjustReport {
    std::string surrogate;
    BinPartition bins;
    Vector weights;                       ///< sd of each estimate over the R replicates
    std::vector<std::size_t> retained;    ///< replicate indices, ascending
    std::vector<BinAdjustment> adjustments;
    std::vector<GpScoreRow> scores;
    std::vector<double> interval_edges;   ///< 5 values
    double mean_score_unadjusted = 0.0;
    double mean_score_adjusted = 0.0;
    std::vector<double> interval_score_unadjusted;  ///< NaN for an empty interval
    std::vector<double> interval_score_adjusted;
    std::vector<std::string> warnings;
};

constexpr std::size_t kScoreIntervals = 4;

/// Negative log density of N(mean, var) at z.
double gaussian_log_score(double z, double mean, double var);

/// Bins from all replicates, retention by hyperparameter-estimate distance,
/// per-bin fit, then adjustment and scoring of the observed predictives.
GpAdjustReport gp_surrogate_adjust(const GpConfig& config, const std::vector<GpReplicateFit>& replicates,
                                   const GpReplicateFit& observed, double jitter = 0.0);

struct GpRun {
    std::vector<GpReplicateFit> replicates;
    GpReplicateFit observed;
    GpAdjustReport report;
};

/// Simulates R replicates plus the observed dataset, trains the surrogate on
/// each (in parallel) and runs the adjustment.
GpRun gp_example(const GpConfig& config, const Surrogate& surrogate, std::uint64_t seed, double jitter = 0.0);

} // namespace totvar::examples
