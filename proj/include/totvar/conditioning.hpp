#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "totvar/model.hpp"

namespace totvar {

/// Distance between a replicate summary and the reference (observed) summary.
using SummaryDistance = std::function<double(const Vector& summary, const Vector& reference)>;

struct ToleranceRetention {
    double epsilon = 0.0;  ///< keep replicates with distance < epsilon
};

struct KeepCountRetention {
    std::size_t keep = 1;  ///< keep the `keep` nearest replicates
};

/// Conditioning set F: a distance plus a retention rule.
struct ConditioningRule {
    SummaryDistance distance;
    std::variant<ToleranceRetention, KeepCountRetention> retention = KeepCountRetention{};
};

/// sum_j (s_j - ref_j)^2 / w_j^2. Squared form: thresholds compare against it directly.
double weighted_euclidean_distance(const Vector& s, const Vector& ref, const Vector& weights);

/// Convenience rule factory binding the weights.
SummaryDistance weighted_euclidean(Vector weights);

/// b / (a + b) where a counts shared ones and b counts mismatches; 0/0 is 0.
double jaccard_distance(std::span<const int> u, std::span<const int> v);

using BinaryPanels = std::vector<std::vector<int>>;

/// Mean of per-panel Jaccard distances.
double mean_jaccard_panel_distance(const BinaryPanels& u, const BinaryPanels& v);

/// Distances of every bundle summary to the reference, in bundle order.
std::vector<double> summary_distances(const std::vector<ReplicateBundle>& bundles,
                                      const SummaryDistance& distance, const Vector& reference);

/// Positions (into `distances`) of the `keep` smallest values, ties broken by
/// position, returned in ascending position order.
std::vector<std::size_t> nearest_positions(const std::vector<double>& distances, std::size_t keep);

/// Retained subset in original order. keep-count retains exactly min(k, I);
/// tolerance retention throws when nothing falls inside F.
std::vector<ReplicateBundle> apply_conditioning(const std::vector<ReplicateBundle>& bundles,
                                                const ConditioningRule& rule,
                                                const Vector& reference_summary);

/// Per-coordinate mean absolute deviation about the mean of a set of summaries.
Vector mean_absolute_deviation(const std::vector<Vector>& rows);

} // namespace totvar
