#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "totvar/moments.hpp"

namespace totvar {

struct ScatterPair {
    double left = 0.0;   ///< from the drawn parameters (Sigma^L, mu^L)
    double right = 0.0;  ///< from the approximations (Sigma^R, mu^R)
};

struct CorrelationSeries {
    Index first = 0;
    Index second = 0;
    std::vector<ScatterPair> pairs;
};

/// Bootstrap scatter of both sides of the moment identities. Each resample
/// draws I whole triples with replacement.
struct BootstrapDiagnostics {
    std::size_t b_count = 0;
    std::uint64_t seed = 0;
    std::size_t redraws = 0;  ///< degenerate resamples (all indices equal) redrawn
    std::vector<std::vector<ScatterPair>> mean_pairs;  ///< [coord][b]
    std::vector<std::vector<ScatterPair>> sd_pairs;    ///< [coord][b]
    std::vector<CorrelationSeries> corr_pairs;         ///< one per j < k
};

/// Sorted resample positions for bootstrap replicate `b`; a pure function of
/// (count, seed, b). `redraws` receives the number of degenerate draws skipped.
std::vector<std::size_t> bootstrap_resample(std::size_t count, std::uint64_t seed, std::size_t b,
                                            std::size_t* redraws = nullptr);

/// Reduces a summary to the scatter statistics for one bootstrap replicate.
void append_scatter(const MomentSummary& summary, BootstrapDiagnostics& diag);

BootstrapDiagnostics bootstrap_diagnostics(const std::vector<ReplicateBundle>& bundles,
                                           std::size_t b_count, std::uint64_t seed);

struct DiagnosticRow {
    std::string name;  ///< e.g. "mean[0]", "sd[1]", "corr[0,1]"
    double left_median = 0.0;
    double right_median = 0.0;
    double fraction_above = 0.0;  ///< share of b with right > left; ties count 1/2
};

std::vector<DiagnosticRow> diagnostic_summary(const BootstrapDiagnostics& diag);

/// CSV with header statistic_name,coord,b,left,right. Pair coordinates are
/// written as "j:k".
void write_diagnostics_csv(std::ostream& out, const BootstrapDiagnostics& diag);
void write_summary_csv(std::ostream& out, const std::vector<DiagnosticRow>& rows);

/// One SVG scatter panel per statistic with the unit diagonal. Returns the
/// written paths. Output is deterministic.
std::vector<std::filesystem::path> write_scatter_svgs(const std::filesystem::path& dir,
                                                      const BootstrapDiagnostics& diag);

} // namespace totvar
