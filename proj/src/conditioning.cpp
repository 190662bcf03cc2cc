#include "totvar/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "totvar/error.hpp"

namespace totvar {

double weighted_euclidean_distance(const Vector& s, const Vector& ref, const Vector& weights) {
    if (s.size() != ref.size() || s.size() != weights.size()) {
        throw InvalidInput("weighted distance: length mismatch");
    }
    double total = 0.0;
    for (Index j = 0; j < s.size(); ++j) {
        if (!(weights(j) > 0.0)) throw InvalidInput("weighted distance: weights must be strictly positive");
        const double z = (s(j) - ref(j)) / weights(j);
        total += z * z;
    }
    return total;
}

SummaryDistance weighted_euclidean(Vector weights) {
    for (Index j = 0; j < weights.size(); ++j) {
        if (!(weights(j) > 0.0)) throw InvalidInput("weighted distance: weights must be strictly positive");
    }
    return [w = std::move(weights)](const Vector& s, const Vector& ref) {
        return weighted_euclidean_distance(s, ref, w);
    };
}

double jaccard_distance(std::span<const int> u, std::span<const int> v) {
    if (u.size() != v.size()) throw InvalidInput("jaccard distance: length mismatch");
    std::size_t both = 0;
    std::size_t differ = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if ((u[j] != 0 && u[j] != 1) || (v[j] != 0 && v[j] != 1)) {
            throw InvalidInput("jaccard distance: entries must be 0 or 1");
        }
        if (u[j] != v[j]) {
            ++differ;
        } else if (u[j] == 1) {
            ++both;
        }
    }
    if (both + differ == 0) return 0.0;
    return static_cast<double>(differ) / static_cast<double>(both + differ);
}

double mean_jaccard_panel_distance(const BinaryPanels& u, const BinaryPanels& v) {
    if (u.size() != v.size()) throw InvalidInput("panel distance: panel counts differ");
    if (u.empty()) throw InvalidInput("panel distance: no panels");
    double total = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) total += jaccard_distance(u[j], v[j]);
    return total / static_cast<double>(u.size());
}

std::vector<double> summary_distances(const std::vector<ReplicateBundle>& bundles,
                                      const SummaryDistance& distance, const Vector& reference) {
    std::vector<double> out;
    out.reserve(bundles.size());
    for (const auto& b : bundles) {
        if (b.summary.size() != reference.size()) {
            throw InvalidInput("conditioning: summary length of replicate " + std::to_string(b.index) +
                               " differs from the reference");
        }
        const double d = distance(b.summary, reference);
        if (!(d >= 0.0)) throw InvalidInput("conditioning: distance must be non-negative");
        out.push_back(d);
    }
    return out;
}

std::vector<std::size_t> nearest_positions(const std::vector<double>& distances, std::size_t keep) {
    std::vector<std::size_t> order(distances.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    keep = std::min(keep, order.size());
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });
    order.resize(keep);
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<ReplicateBundle> apply_conditioning(const std::vector<ReplicateBundle>& bundles,
                                                const ConditioningRule& rule,
                                                const Vector& reference_summary) {
    if (!rule.distance) throw InvalidInput("conditioning: rule has no distance");
    const std::vector<double> d = summary_distances(bundles, rule.distance, reference_summary);

    std::vector<ReplicateBundle> kept;
    if (const auto* keep = std::get_if<KeepCountRetention>(&rule.retention)) {
        if (keep->keep < 1) throw InvalidInput("conditioning: keep count must be at least 1");
        // Ties at the cutoff go to the lower replicate index, so rank by
        // (distance, index) rather than by storage position.
        std::vector<std::size_t> order(bundles.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (d[a] != d[b]) return d[a] < d[b];
            return bundles[a].index < bundles[b].index;
        });
        order.resize(std::min(keep->keep, order.size()));
        std::sort(order.begin(), order.end());
        kept.reserve(order.size());
        for (std::size_t p : order) kept.push_back(bundles[p]);
        return kept;
    }

    const auto& tol = std::get<ToleranceRetention>(rule.retention);
    if (!(tol.epsilon > 0.0)) throw InvalidInput("conditioning: tolerance must be positive");
    for (std::size_t p = 0; p < bundles.size(); ++p) {
        if (d[p] < tol.epsilon) kept.push_back(bundles[p]);
    }
    if (kept.empty()) throw InvalidInput("conditioning set empty; increase epsilon");
    return kept;
}

Vector mean_absolute_deviation(const std::vector<Vector>& rows) {
    if (rows.empty()) throw InvalidInput("mean absolute deviation: no rows");
    const Index d = rows.front().size();
    Vector mean = Vector::Zero(d);
    for (const auto& r : rows) mean += r;
    mean /= static_cast<double>(rows.size());
    Vector mad = Vector::Zero(d);
    for (const auto& r : rows) mad += (r - mean).cwiseAbs();
    return mad / static_cast<double>(rows.size());
}

} // namespace totvar
