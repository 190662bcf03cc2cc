#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "totvar/adjust.hpp"
#include "totvar/error.hpp"

using namespace totvar;
using testing_support::particle_bundles;
using testing_support::scalar_particles;

namespace {

MomentSummary scalar_summary(double l, double r2, double r1, double mu_l = 0.0, double mu_r = 0.0) {
    MomentSummary s;
    s.mu_l = Vector::Constant(1, mu_l);
    s.mu_r = Vector::Constant(1, mu_r);
    s.sigma_l = Matrix::Constant(1, 1, l);
    s.sigma_r2 = Matrix::Constant(1, 1, r2);
    s.sigma_r1 = Matrix::Constant(1, 1, r1);
    s.i_used = 10;
    return s;
}

AdjustmentMap scalar_map(double mu_l, double mu_r, double scale, double rho = 1.0) {
    AdjustmentMap m;
    m.mu_l = Vector::Constant(1, mu_l);
    m.mu_r = Vector::Constant(1, mu_r);
    m.chol_c = Matrix::Ones(1, 1);
    m.chol_t = Matrix::Constant(1, 1, scale);
    m.scale = Matrix::Constant(1, 1, scale);
    m.rho = rho;
    return m;
}

void check_identities(const std::vector<ReplicateBundle>& bundles, double tol) {
    auto cal = calibrate(bundles);
    const auto& before = cal.before;
    const auto& after = cal.after;
    CHECK(relative_difference(after.mu_r, before.mu_l, 1.0) < tol);
    CHECK(relative_difference(after.sigma_r(), before.sigma_l) < tol);
    CHECK(relative_difference(after.sigma_r2, cal.map.rho * before.sigma_r2) < tol);
    CHECK(relative_difference(after.sigma_r1, before.sigma_l - cal.map.rho * before.sigma_r2) < tol);
}

}  // namespace

TEST_CASE("scalar fit without shrinkage") {
    auto m = fit_adjustment(scalar_summary(2.0, 1.0, 0.25));
    CHECK(m.rho == 1.0);
    CHECK(m.chol_c(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(m.chol_t(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.scale(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("scalar fit with shrinkage") {
    auto m = fit_adjustment(scalar_summary(1.0, 2.0, 0.5));
    CHECK(m.rho == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(m.scale(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("an already calibrated summary gives the identity scale") {
    Matrix l(2, 2), r2(2, 2);
    l << 2.0, 0.4, 0.4, 1.5;
    r2 << 0.5, 0.1, 0.1, 0.3;
    MomentSummary s;
    s.mu_l = Vector::Constant(2, 0.3);
    s.mu_r = s.mu_l;
    s.sigma_l = l;
    s.sigma_r2 = r2;
    s.sigma_r1 = l - r2;
    s.i_used = 5;
    auto m = fit_adjustment(s);
    CHECK(relative_difference(m.scale, Matrix::Identity(2, 2)) < 1e-10);
}

TEST_CASE("fit errors") {
    CHECK_THROWS_WITH_AS(fit_adjustment(scalar_summary(2.0, 1.0, 0.0)),
                         "within-replicate covariance singular; increase S or jitter", NumericalError);
    // jitter makes a zero within-replicate covariance usable
    CHECK(fit_adjustment(scalar_summary(2.0, 1.0, 0.0), 0.25).scale(0, 0) == doctest::Approx(2.0));
    // lambda_min(Sigma^L) below lambda_min(Sigma^R1): no admissible rho
    CHECK_THROWS_AS(fit_adjustment(scalar_summary(0.4, 2.0, 0.5)), NumericalError);
    CHECK_THROWS_AS(fit_adjustment(scalar_summary(2.0, 1.0, 0.25), -1.0), InvalidInput);
}

TEST_CASE("shrinkage hand example") {
    std::vector<ReplicateBundle> bundles{scalar_particles(0, 0.0, {1.0, 3.0})};
    auto out = shrink_particles(bundles, scalar_map(0.0, 0.0, 1.0, 0.25));
    CHECK(out[0].approx.particles(1, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(out[0].approx.particles(0, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));

    auto same = shrink_particles(bundles, scalar_map(0.0, 0.0, 1.0, 1.0));
    CHECK(same[0].approx.particles == bundles[0].approx.particles);
}

TEST_CASE("adjustment hand examples") {
    std::vector<ReplicateBundle> bundles{scalar_particles(0, 0.0, {-1.5, 2.5})};
    auto out = adjust_replicates(bundles, scalar_map(1.0, 0.0, 0.5));
    CHECK(out[0].approx.particles(1, 0) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(out[0].approx.particles(0, 0) == doctest::Approx(0.5).epsilon(1e-15));

    auto id = adjust_replicates(bundles, scalar_map(0.0, 0.0, 1.0));
    CHECK(relative_difference(id[0].approx.particles, bundles[0].approx.particles) < 1e-15);

    auto g = adjust_observed(PosteriorApprox::gaussian(Vector::Constant(1, 0.5), Matrix::Constant(1, 1, 4.0)),
                             scalar_map(1.0, 0.0, 0.5));
    CHECK(g.mean(0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(g.cov(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

    auto p = adjust_observed(bundles[0].approx, scalar_map(1.0, 0.0, 0.5));
    CHECK(per_replicate_moments(p).mean(0) == doctest::Approx(1.0 + 0.5).epsilon(1e-15));

    CHECK_THROWS_AS(adjust_observed(PosteriorApprox::gaussian(Vector::Zero(2), Matrix::Identity(2, 2)),
                                    scalar_map(0.0, 0.0, 1.0)),
                    InvalidInput);
}

TEST_CASE("post-adjustment identities on random instances") {
    std::uint64_t seed = 1000;
    for (Index d : {1, 2, 4, 7}) {
        for (std::size_t count : {30, 200}) {
            CAPTURE(d);
            CAPTURE(count);
            check_identities(particle_bundles(d, count, 20, ++seed), 1e-9);
        }
    }
}

TEST_CASE("identities hold after shrinkage") {
    // Posterior means spread more than the parameters: Sigma^L - Sigma^R2 indefinite.
    Rng rng = make_rng(77);
    std::vector<ReplicateBundle> bundles;
    for (std::size_t i = 0; i < 100; ++i) {
        ReplicateBundle b;
        b.index = i;
        b.theta = standard_normal(rng, 2);
        Vector centre = 1.4 * b.theta + 0.2 * standard_normal(rng, 2);
        Matrix p(10, 2);
        for (Index k = 0; k < 10; ++k) p.row(k) = (centre + 0.3 * standard_normal(rng, 2)).transpose();
        b.approx = PosteriorApprox::from_particles(p);
        b.summary = b.theta;
        bundles.push_back(b);
    }
    auto cal = calibrate(bundles);
    CHECK(cal.map.rho < 1.0);
    CHECK(cal.map.rho > 0.0);
    CHECK(min_eigenvalue(cal.before.sigma_l - cal.map.rho * cal.before.sigma_r2) ==
          doctest::Approx(min_eigenvalue(cal.before.sigma_r1)).epsilon(1e-8));
    auto shrunk = estimate_moments(shrink_particles(bundles, cal.map));
    CHECK(relative_difference(shrunk.sigma_r2, cal.map.rho * cal.before.sigma_r2) < 1e-10);
    CHECK(relative_difference(shrunk.sigma_r1, cal.before.sigma_r1) < 1e-10);
    CHECK(relative_difference(shrunk.mu_r, cal.before.mu_r) < 1e-10);
    check_identities(bundles, 1e-9);
}

TEST_CASE("refitting on adjusted bundles gives the identity map") {
    auto bundles = particle_bundles(3, 150, 15, 5150);
    auto cal = calibrate(bundles);
    auto again = fit_adjustment(estimate_moments(cal.adjusted));
    CHECK(again.rho == 1.0);
    CHECK((again.scale - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((again.mu_l - again.mu_r).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gaussian and particle paths agree") {
    auto cal = calibrate(particle_bundles(2, 200, 20, 8));
    Vector m(2);
    m << 0.4, -0.2;
    Matrix v(2, 2);
    v << 0.3, 0.05, 0.05, 0.2;
    auto closed = adjust_observed(PosteriorApprox::gaussian(m, v), cal.map);

    Rng rng = make_rng(12);
    const Index s = 100000;
    Matrix l = *lower_cholesky(v);
    Matrix p(s, 2);
    for (Index k = 0; k < s; ++k) p.row(k) = multivariate_normal(rng, m, l).transpose();
    auto cloud = per_replicate_moments(adjust_observed(PosteriorApprox::from_particles(p), cal.map));

    for (Index j = 0; j < 2; ++j) {
        double sd = std::sqrt(closed.cov(j, j));
        CHECK(std::abs(cloud.mean(j) - closed.mean(j)) < 3.0 * sd / std::sqrt(double(s)));
        CHECK(std::abs(cloud.cov(j, j) - closed.cov(j, j)) < 3.0 * closed.cov(j, j) * std::sqrt(2.0 / double(s)));
    }
}

TEST_CASE("links") {
    CHECK(parse_link("log") == Link::Log);
    CHECK(parse_link("logit") == Link::Logit);
    CHECK(parse_link("identity") == Link::Identity);
    CHECK_THROWS_AS(parse_link("probit"), InvalidInput);
    for (double x : {0.1, 0.5, 0.93}) {
        CHECK(link_inverse(Link::Logit, link_forward(Link::Logit, x)) == doctest::Approx(x).epsilon(1e-14));
        CHECK(link_inverse(Link::Log, link_forward(Link::Log, x)) == doctest::Approx(x).epsilon(1e-14));
    }
    CHECK_THROWS_AS(link_forward(Link::Log, -1.0), InvalidInput);

    auto b = scalar_particles(0, 2.0, {1.0, 4.0});
    auto moved = apply_links(std::vector<ReplicateBundle>{b}, {Link::Log});
    CHECK(moved[0].theta(0) == doctest::Approx(std::log(2.0)));
    auto back = invert_links(moved[0].approx, {Link::Log});
    CHECK(relative_difference(back.particles, b.approx.particles) < 1e-15);
    CHECK_THROWS_AS(apply_links(PosteriorApprox::gaussian(Vector::Ones(1), Matrix::Identity(1, 1)), {Link::Log}),
                    InvalidInput);
}
