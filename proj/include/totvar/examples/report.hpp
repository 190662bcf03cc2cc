#pragma once

#include <cstdint>
#include <filesystem>

#include "totvar/examples/conjugate.hpp"
#include "totvar/examples/fenton_wilkinson.hpp"
#include "totvar/examples/gp_adjust.hpp"
#include "totvar/store.hpp"

namespace totvar::examples {

Json to_json(const ConjugateConfig& config, const ConjugateRunOptions& options, std::uint64_t seed);
Json to_json(const FwExampleConfig& config, std::uint64_t seed);
Json to_json(const GpConfig& config, const std::string& surrogate, std::uint64_t seed);

Json to_json(const GpReplicateFit& fit);
Json to_json(const BinAdjustment& adj);

void write_scores_csv(std::ostream& out, const GpAdjustReport& report);

/// Run report directories: config.json, replicates.jsonl, moments.json,
/// adjustment.json, diagnostics.csv, scores.csv. Created if missing.
void write_report(const std::filesystem::path& dir, const ConjugateReport& report,
                  const ConjugateRunOptions& options);
void write_report(const std::filesystem::path& dir, const FwReport& report);
void write_report(const std::filesystem::path& dir, const GpConfig& config, const GpRun& run,
                  std::uint64_t seed);

} // namespace totvar::examples
