#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "totvar/error.hpp"
#include "totvar/examples/conjugate.hpp"
#include "totvar/moments.hpp"

using namespace totvar;
using testing_support::particle_bundles;
using testing_support::scalar_particles;

TEST_CASE("per-replicate moments of particles") {
    auto b = scalar_particles(0, 0.0, {0.0, 2.0});
    auto m = per_replicate_moments(b.approx);
    CHECK(m.mean(0) == 1.0);
    CHECK(m.cov(0, 0) == 2.0);

    auto same = scalar_particles(0, 0.0, {3.0, 3.0, 3.0});
    CHECK(per_replicate_moments(same.approx).cov(0, 0) == 0.0);

    Vector mean(2);
    mean << 1, -1;
    Matrix cov(2, 2);
    cov << 2, 0.3, 0.3, 1;
    auto g = per_replicate_moments(PosteriorApprox::gaussian(mean, cov));
    CHECK(g.mean == mean);
    CHECK(g.cov == cov);

    CHECK_THROWS_AS(per_replicate_moments(PosteriorApprox::from_particles(Matrix::Zero(1, 1))), InvalidInput);
}

TEST_CASE("two-replicate hand example") {
    std::vector<ReplicateBundle> bundles{scalar_particles(0, 0.0, {0.0, 0.0}), scalar_particles(1, 2.0, {2.0, 2.0})};
    auto s = estimate_moments(bundles);
    CHECK(s.mu_l(0) == 1.0);
    CHECK(s.mu_r(0) == 1.0);
    CHECK(s.sigma_l(0, 0) == 2.0);
    CHECK(s.sigma_r1(0, 0) == 0.0);
    CHECK(s.sigma_r2(0, 0) == 2.0);
    CHECK(s.sigma_r()(0, 0) == 2.0);
    CHECK(s.i_used == 2);
}

TEST_CASE("estimators agree with a naive double loop") {
    auto bundles = particle_bundles(3, 40, 25, 99);
    auto s = estimate_moments(bundles);

    const double n = static_cast<double>(bundles.size());
    Vector mu_l = Vector::Zero(3), mu_r = Vector::Zero(3);
    std::vector<Vector> means;
    Matrix r1 = Matrix::Zero(3, 3);
    for (const auto& b : bundles) {
        const Matrix& p = b.approx.particles;
        Vector m = Vector::Zero(3);
        for (Index k = 0; k < p.rows(); ++k)
            for (Index j = 0; j < 3; ++j) m(j) += p(k, j);
        m /= static_cast<double>(p.rows());
        Matrix c = Matrix::Zero(3, 3);
        for (Index k = 0; k < p.rows(); ++k)
            for (Index a = 0; a < 3; ++a)
                for (Index c2 = 0; c2 < 3; ++c2) c(a, c2) += (p(k, a) - m(a)) * (p(k, c2) - m(c2));
        r1 += c / static_cast<double>(p.rows() - 1);
        means.push_back(m);
        mu_l += b.theta;
        mu_r += m;
    }
    mu_l /= n;
    mu_r /= n;
    r1 /= n;
    Matrix l = Matrix::Zero(3, 3), r2 = Matrix::Zero(3, 3);
    for (std::size_t i = 0; i < bundles.size(); ++i)
        for (Index a = 0; a < 3; ++a)
            for (Index c = 0; c < 3; ++c) {
                l(a, c) += (bundles[i].theta(a) - mu_l(a)) * (bundles[i].theta(c) - mu_l(c));
                r2(a, c) += (means[i](a) - mu_r(a)) * (means[i](c) - mu_r(c));
            }
    l /= n - 1;
    r2 /= n - 1;

    CHECK(relative_difference(s.mu_l, mu_l) < 1e-12);
    CHECK(relative_difference(s.mu_r, mu_r) < 1e-12);
    CHECK(relative_difference(s.sigma_l, l) < 1e-12);
    CHECK(relative_difference(s.sigma_r1, r1) < 1e-12);
    CHECK(relative_difference(s.sigma_r2, r2) < 1e-12);
}

TEST_CASE("estimates do not depend on storage order") {
    auto bundles = particle_bundles(2, 30, 10, 4);
    auto s = estimate_moments(bundles);
    std::reverse(bundles.begin(), bundles.end());
    std::rotate(bundles.begin(), bundles.begin() + 7, bundles.end());
    auto t = estimate_moments(bundles);
    CHECK(s.mu_l == t.mu_l);
    CHECK(s.mu_r == t.mu_r);
    CHECK(s.sigma_l == t.sigma_l);
    CHECK(s.sigma_r1 == t.sigma_r1);
    CHECK(s.sigma_r2 == t.sigma_r2);
}

TEST_CASE("affine equivariance") {
    auto bundles = particle_bundles(2, 25, 8, 17);
    Matrix a(2, 2);
    a << 1.5, 0.2, -0.4, 0.7;
    Vector shift(2);
    shift << 3, -1;
    auto moved = bundles;
    for (auto& b : moved) {
        b.theta = a * b.theta + shift;
        Matrix p = b.approx.particles * a.transpose();
        p.rowwise() += shift.transpose();
        b.approx = PosteriorApprox::from_particles(p);
    }
    auto s = estimate_moments(bundles);
    auto t = estimate_moments(moved);
    CHECK(relative_difference(t.mu_l, a * s.mu_l + shift) < 1e-12);
    CHECK(relative_difference(t.mu_r, a * s.mu_r + shift) < 1e-12);
    CHECK(relative_difference(t.sigma_l, a * s.sigma_l * a.transpose()) < 1e-12);
    CHECK(relative_difference(t.sigma_r1, a * s.sigma_r1 * a.transpose()) < 1e-12);
    CHECK(relative_difference(t.sigma_r2, a * s.sigma_r2 * a.transpose()) < 1e-12);
}

TEST_CASE("mismatched dimensions are rejected") {
    auto bundles = particle_bundles(2, 5, 4, 1);
    auto other = particle_bundles(3, 1, 4, 2);
    other[0].index = 99;
    bundles.push_back(other[0]);
    CHECK_THROWS_AS(estimate_moments(bundles), InvalidInput);
}

TEST_CASE("prior used as the posterior satisfies both identities in expectation") {
    examples::ConjugateConfig config;
    config.n_obs = 3;
    config.particles = 0;
    examples::ConjugateGaussianModel model(config);
    Approximator prior_as_posterior{[](const Dataset&, std::uint64_t) {
        return PosteriorApprox::gaussian(Vector::Zero(1), Matrix::Identity(1, 1));
    }};
    const std::size_t count = 5000;
    auto s = estimate_moments(generate_replicates(model, prior_as_posterior, count, 2024));
    const double n = static_cast<double>(count);
    // two-sided z-tests at the 1% level
    CHECK(std::abs(s.mu_l(0) - s.mu_r(0)) / std::sqrt(1.0 / n) < 2.576);
    CHECK(std::abs(s.sigma_l(0, 0) - s.sigma_r()(0, 0)) / std::sqrt(2.0 / (n - 1.0)) < 2.576);
}
