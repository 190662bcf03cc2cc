#include "totvar/moments.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "totvar/error.hpp"

namespace totvar {

PerReplicateMoments per_replicate_moments(const PosteriorApprox& approx) {
    if (!approx.is_particles()) {
        approx.validate();
        return {approx.mean, approx.cov};
    }
    const Matrix& p = approx.particles;
    const Index s = p.rows();
    const Index d = p.cols();
    if (s < 2) throw InvalidInput("per-replicate moments need at least 2 particles");

    CompensatedSum mean_acc(d, 1);
    for (Index k = 0; k < s; ++k) mean_acc.add(p.row(k).transpose());
    const Vector mean = mean_acc.value() / static_cast<double>(s);

    CompensatedSum cov_acc(d, d);
    for (Index k = 0; k < s; ++k) {
        const Vector dev = p.row(k).transpose() - mean;
        cov_acc.add(dev * dev.transpose());
    }
    Matrix cov = symmetrized(cov_acc.value() / static_cast<double>(s - 1));
    return {mean, std::move(cov)};
}

std::vector<ReplicateTriple> replicate_triples(const std::vector<ReplicateBundle>& bundles) {
    std::vector<ReplicateTriple> out;
    out.reserve(bundles.size());
    for (const auto& b : bundles) {
        ReplicateTriple t;
        t.index = b.index;
        t.theta = b.theta;
        t.moments = per_replicate_moments(b.approx);
        out.push_back(std::move(t));
    }
    return out;
}

MomentSummary reduce_moments(const std::vector<ReplicateTriple>& triples,
                             std::span<const std::size_t> selection) {
    const std::size_t count = selection.size();
    if (count < 2) throw InvalidInput("need at least 2 replicates, got " + std::to_string(count));
    const Index d = triples[selection[0]].theta.size();
    for (std::size_t pos : selection) {
        const auto& t = triples.at(pos);
        if (t.theta.size() != d || t.moments.mean.size() != d || t.moments.cov.rows() != d ||
            t.moments.cov.cols() != d) {
            throw InvalidInput("dimension mismatch across replicates (replicate " +
                               std::to_string(t.index) + ")");
        }
    }
    const double n = static_cast<double>(count);

    CompensatedSum theta_acc(d, 1), mean_acc(d, 1), cov_acc(d, d);
    for (std::size_t pos : selection) {
        const auto& t = triples[pos];
        theta_acc.add(t.theta);
        mean_acc.add(t.moments.mean);
        cov_acc.add(t.moments.cov);
    }
    MomentSummary out;
    out.i_used = count;
    out.mu_l = theta_acc.value() / n;
    out.mu_r = mean_acc.value() / n;
    out.sigma_r1 = symmetrized(cov_acc.value() / n);

    CompensatedSum l_acc(d, d), r2_acc(d, d);
    for (std::size_t pos : selection) {
        const auto& t = triples[pos];
        const Vector dl = t.theta - out.mu_l;
        const Vector dr = t.moments.mean - out.mu_r;
        l_acc.add(dl * dl.transpose());
        r2_acc.add(dr * dr.transpose());
    }
    out.sigma_l = symmetrized(l_acc.value() / (n - 1.0));
    out.sigma_r2 = symmetrized(r2_acc.value() / (n - 1.0));
    return out;
}

MomentSummary estimate_moments(const std::vector<ReplicateBundle>& bundles) {
    if (bundles.size() < 2) {
        throw InvalidInput("need at least 2 replicates, got " + std::to_string(bundles.size()));
    }
    const std::vector<ReplicateTriple> triples = replicate_triples(bundles);
    std::vector<std::size_t> order(triples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return triples[a].index < triples[b].index;
    });
    return reduce_moments(triples, order);
}

} // namespace totvar
