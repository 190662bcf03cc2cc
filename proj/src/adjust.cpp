#include "totvar/adjust.hpp"

#include <cmath>
#include <sstream>

#include "totvar/error.hpp"

namespace totvar {

namespace {

void check_dim(Index got, const AdjustmentMap& map, const char* what) {
    if (got != map.dim()) {
        std::ostringstream msg;
        msg << what << ": dimension " << got << " does not match adjustment map dimension "
            << map.dim();
        throw InvalidInput(msg.str());
    }
}

// Rows of `particles` mapped by theta -> new_mean + scale (theta - old_mean).
Matrix recentre(const Matrix& particles, const Vector& old_mean, const Vector& new_mean,
                const Matrix& scale) {
    Matrix centred = particles.rowwise() - old_mean.transpose();
    Matrix out = centred * scale.transpose();
    out.rowwise() += new_mean.transpose();
    return out;
}

} // namespace

AdjustmentMap fit_adjustment(const MomentSummary& summary, double jitter) {
    if (jitter < 0.0) throw InvalidInput("jitter must be non-negative");
    const Index d = summary.dim();
    const Matrix identity = Matrix::Identity(d, d);

    AdjustmentMap map;
    map.mu_l = summary.mu_l;
    map.mu_r = summary.mu_r;
    map.jitter = jitter;

    const Matrix r1 = symmetrized(summary.sigma_r1) + jitter * identity;
    auto c = lower_cholesky(r1);
    if (!c) throw NumericalError("within-replicate covariance singular; increase S or jitter");
    map.chol_c = *c;

    const Matrix sigma_l = symmetrized(summary.sigma_l);
    const Matrix sigma_r2 = symmetrized(summary.sigma_r2);

    auto t = lower_cholesky(sigma_l - sigma_r2);
    if (t && min_eigenvalue(sigma_l - sigma_r2) > 0.0) {
        map.rho = 1.0;
        map.chol_t = *t;
    } else {
        // lambda_min(Sigma^L - rho Sigma^R2) is continuous and nonincreasing in rho.
        const double target = min_eigenvalue(r1);
        auto gap = [&](double rho) { return min_eigenvalue(sigma_l - rho * sigma_r2) - target; };
        const double at_zero = gap(0.0);
        const double at_one = gap(1.0);
        if (!(at_zero > 0.0) || !(at_one < 0.0)) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "no shrinkage factor in (0,1) matches the eigenvalue condition: "
                << "lambda_min(Sigma^L) = " << min_eigenvalue(sigma_l)
                << ", lambda_min(Sigma^L - Sigma^R2) = " << min_eigenvalue(sigma_l - sigma_r2)
                << ", lambda_min(Sigma^R1) = " << target;
            throw NumericalError(msg.str());
        }
        double lo = 0.0;
        double hi = 1.0;
        for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (gap(mid) > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        map.rho = 0.5 * (lo + hi);
        auto shrunk = lower_cholesky(sigma_l - map.rho * sigma_r2);
        if (!shrunk) throw NumericalError("shrunk prior-minus-between covariance not positive definite");
        map.chol_t = *shrunk;
    }

    const Matrix c_inv = map.chol_c.triangularView<Eigen::Lower>().solve(identity);
    map.scale = map.chol_t * c_inv;
    return map;
}

PosteriorApprox shrink_observed(PosteriorApprox approx, const AdjustmentMap& map) {
    check_dim(approx.dim(), map, "shrink_observed");
    if (map.rho == 1.0) return approx;
    const double factor = std::sqrt(map.rho);
    if (approx.is_particles()) {
        const Vector m = per_replicate_moments(approx).mean;
        const Vector shift = map.mu_r + factor * (m - map.mu_r) - m;
        approx.particles.rowwise() += shift.transpose();
    } else {
        approx.mean = map.mu_r + factor * (approx.mean - map.mu_r);
    }
    return approx;
}

std::vector<ReplicateBundle> shrink_particles(std::vector<ReplicateBundle> bundles,
                                              const AdjustmentMap& map) {
    for (auto& b : bundles) b.approx = shrink_observed(std::move(b.approx), map);
    return bundles;
}

std::vector<ReplicateBundle> adjust_replicates(std::vector<ReplicateBundle> bundles,
                                               const AdjustmentMap& map) {
    for (auto& b : bundles) {
        check_dim(b.theta.size(), map, "adjust_replicates");
        b.approx = adjust_observed(b.approx, map);
    }
    return bundles;
}

PosteriorApprox adjust_observed(const PosteriorApprox& approx, const AdjustmentMap& map) {
    check_dim(approx.dim(), map, "adjust_observed");
    if (approx.is_particles()) {
        const Vector m = per_replicate_moments(approx).mean;
        const Vector new_mean = map.mu_l + (m - map.mu_r);
        return PosteriorApprox::from_particles(recentre(approx.particles, m, new_mean, map.scale));
    }
    Vector mean = map.mu_l + (approx.mean - map.mu_r);
    Matrix cov = symmetrized(map.scale * approx.cov * map.scale.transpose());
    return PosteriorApprox::gaussian(std::move(mean), std::move(cov));
}

PosteriorApprox calibrate_observed(const PosteriorApprox& approx, const AdjustmentMap& map) {
    return adjust_observed(shrink_observed(approx, map), map);
}

Calibration calibrate(const std::vector<ReplicateBundle>& bundles, double jitter) {
    Calibration out;
    out.before = estimate_moments(bundles);
    out.map = fit_adjustment(out.before, jitter);
    std::vector<ReplicateBundle> prepared =
        out.map.rho < 1.0 ? shrink_particles(bundles, out.map) : bundles;
    out.adjusted = adjust_replicates(std::move(prepared), out.map);
    out.after = estimate_moments(out.adjusted);
    return out;
}

Link parse_link(const std::string& name) {
    if (name == "identity" || name == "id" || name.empty()) return Link::Identity;
    if (name == "log") return Link::Log;
    if (name == "logit") return Link::Logit;
    throw InvalidInput("unknown link '" + name + "' (expected identity, log or logit)");
}

std::string link_name(Link link) {
    switch (link) {
        case Link::Identity: return "identity";
        case Link::Log: return "log";
        case Link::Logit: return "logit";
    }
    return "identity";
}

double link_forward(Link link, double x) {
    switch (link) {
        case Link::Identity: return x;
        case Link::Log:
            if (!(x > 0.0)) throw InvalidInput("log link needs positive values");
            return std::log(x);
        case Link::Logit:
            if (!(x > 0.0 && x < 1.0)) throw InvalidInput("logit link needs values in (0,1)");
            return std::log(x) - std::log1p(-x);
    }
    return x;
}

double link_inverse(Link link, double y) {
    switch (link) {
        case Link::Identity: return y;
        case Link::Log: return std::exp(y);
        case Link::Logit: return 1.0 / (1.0 + std::exp(-y));
    }
    return y;
}

namespace {

bool all_identity(const std::vector<Link>& links) {
    for (Link l : links) {
        if (l != Link::Identity) return false;
    }
    return true;
}

PosteriorApprox map_particles(PosteriorApprox approx, const std::vector<Link>& links, bool forward) {
    if (links.empty() || all_identity(links)) return approx;
    if (static_cast<Index>(links.size()) != approx.dim()) {
        throw InvalidInput("link list length does not match parameter dimension");
    }
    if (!approx.is_particles()) {
        throw InvalidInput("non-identity links require particle approximations");
    }
    for (Index j = 0; j < approx.particles.cols(); ++j) {
        const Link l = links[static_cast<std::size_t>(j)];
        for (Index s = 0; s < approx.particles.rows(); ++s) {
            double& v = approx.particles(s, j);
            v = forward ? link_forward(l, v) : link_inverse(l, v);
        }
    }
    return approx;
}

} // namespace

std::vector<ReplicateBundle> apply_links(std::vector<ReplicateBundle> bundles,
                                         const std::vector<Link>& links) {
    if (links.empty() || all_identity(links)) return bundles;
    for (auto& b : bundles) {
        if (static_cast<Index>(links.size()) != b.theta.size()) {
            throw InvalidInput("link list length does not match parameter dimension");
        }
        for (Index j = 0; j < b.theta.size(); ++j) {
            b.theta(j) = link_forward(links[static_cast<std::size_t>(j)], b.theta(j));
        }
        b.approx = map_particles(std::move(b.approx), links, true);
    }
    return bundles;
}

PosteriorApprox apply_links(PosteriorApprox approx, const std::vector<Link>& links) {
    return map_particles(std::move(approx), links, true);
}

PosteriorApprox invert_links(PosteriorApprox approx, const std::vector<Link>& links) {
    return map_particles(std::move(approx), links, false);
}

} // namespace totvar
