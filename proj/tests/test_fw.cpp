#include <doctest.h>

#include <cmath>

#include "totvar/error.hpp"
#include "totvar/examples/conjugate.hpp"
#include "totvar/examples/fenton_wilkinson.hpp"
#include "totvar/optimize.hpp"

using namespace totvar;
using namespace totvar::examples;

TEST_CASE("fenton-wilkinson closed forms") {
    auto one = fw_moments(0.7, 1.3, 1);
    CHECK(one.m == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(one.s2 == doctest::Approx(1.3).epsilon(1e-15));

    auto ten = fw_moments(0.0, 1.0, 10);
    double s2 = std::log((std::exp(1.0) - 1.0) / 10.0 + 1.0);
    CHECK(ten.s2 == doctest::Approx(s2).epsilon(1e-15));
    CHECK(ten.m == doctest::Approx(std::log(10.0) + 0.5 * (1.0 - s2)).epsilon(1e-15));

    for (double mu : {-1.0, 0.0, 1.0})
        for (double sig2 : {0.25, 1.0, 4.0})
            for (int k : {1, 5, 10}) {
                auto f = fw_moments(mu, sig2, k);
                double mean_sum = k * std::exp(mu + sig2 / 2);
                double var_sum = k * std::expm1(sig2) * std::exp(2 * mu + sig2);
                CHECK(std::abs(std::exp(f.m + f.s2 / 2) / mean_sum - 1.0) < 1e-12);
                CHECK(std::abs(std::expm1(f.s2) * std::exp(2 * f.m + f.s2) / var_sum - 1.0) < 1e-12);
            }
}

TEST_CASE("bfgs minimizes a quadratic") {
    Matrix a(2, 2);
    a << 3, 1, 1, 2;
    Vector b(2);
    b << 1, -1;
    auto f = [&](const Vector& x, Vector& g) {
        g = a * x - b;
        return 0.5 * x.dot(a * x) - b.dot(x);
    };
    auto r = minimize_bfgs(f, Vector::Zero(2));
    CHECK(r.converged);
    CHECK(relative_difference(r.x, a.ldlt().solve(b)) < 1e-8);
}

TEST_CASE("kappa one with fixed eta reduces to the conjugate normal posterior") {
    Dataset y(6);
    y << 0.5, 1.7, 0.9, 2.4, 1.1, 0.3;
    FwPrior prior;
    prior.mu_mean = 0.2;
    prior.mu_sd = 1.5;
    const double eta = std::log(0.8);
    FwLogPosterior post(y, 1, prior, eta);
    auto lap = laplace_approximation([&](const Vector& x, Vector& g) { return post.value_and_gradient(x, g); },
                                     [&](const Vector& x) { return post(x); },
                                     {Vector::Zero(1), Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)});
    const double sum_log = y.array().log().sum();
    const double precision = 1.0 / (prior.mu_sd * prior.mu_sd) + 6.0 / 0.8;
    const double mean = (prior.mu_mean / (prior.mu_sd * prior.mu_sd) + sum_log / 0.8) / precision;
    CHECK(std::abs(lap.mode(0) - mean) < 1e-6);
    CHECK(lap.cov(0, 0) == doctest::Approx(1.0 / precision).epsilon(1e-5));
}

TEST_CASE("laplace mode is a stationary point and doubling the data shrinks the sd") {
    FwModel model(40, 10, FwPrior{});
    Rng rng = make_rng(8);
    Vector theta(2);
    theta << 0.0, 0.0;
    Dataset y = model.simulate(theta, rng);
    FwLogPosterior post(y, 10, FwPrior{});
    auto lap = laplace_auxiliary_posterior(y, 10, FwPrior{});
    Vector g = central_gradient([&](const Vector& x) { return post(x); }, lap.mode);
    CHECK(g.norm() <= 1e-5 * (1.0 + lap.mode.norm()));
    CHECK(relative_difference(fw_mode(y, 10, FwPrior{}), lap.mode) == 0.0);

    Dataset twice(2 * y.size());
    twice << y, y;
    auto lap2 = laplace_auxiliary_posterior(twice, 10, FwPrior{});
    for (Index j = 0; j < 2; ++j) {
        double ratio = std::sqrt(lap2.cov(j, j) / lap.cov(j, j));
        CAPTURE(j);
        CHECK(std::abs(ratio * std::sqrt(2.0) - 1.0) < 0.05);
    }
}

TEST_CASE("non-positive data is rejected") {
    Dataset y(3);
    y << 1.0, -0.5, 2.0;
    CHECK_THROWS_AS(laplace_auxiliary_posterior(y, 10, FwPrior{}), InvalidInput);
}

TEST_CASE("rejection abc oracle") {
    ConjugateConfig config;
    config.n_obs = 4;
    config.particles = 0;
    ConjugateGaussianModel model(config);

    auto small = abc_reference_pool(model, 50, 3);
    Matrix all = rejection_abc_oracle(Vector::Zero(1), small, 50, Vector::Ones(1));
    CHECK(all.rows() == 50);
    Matrix one = rejection_abc_oracle(small[17].summary, small, 1, Vector::Ones(1));
    CHECK(one(0, 0) == small[17].theta(0));
    CHECK_THROWS_AS(rejection_abc_oracle(Vector::Zero(1), {}, 1, Vector::Ones(1)), InvalidInput);

    auto pool = abc_reference_pool(model, 100000, 4);
    Matrix acc = rejection_abc_oracle(Vector::Constant(1, 0.5), pool, 100, Vector::Ones(1));
    // posterior N(0.4, 0.2)
    CHECK(std::abs(acc.col(0).mean() - 0.4) < 3.0 * std::sqrt(0.2 / 100.0));
}

TEST_CASE("keeping the whole pool makes conditioning a no-op") {
    FwExampleConfig config;
    config.pool = 60;
    config.keep = 60;
    config.bootstrap = 0;
    config.report_particles = 500;
    auto report = fw_example(config, 5);
    CHECK(report.retained.size() == 60);
    CHECK(report.observed.size() == 10);
    for (Index k = 0; k < report.observed.size(); ++k) CHECK(report.observed(k) > 0.0);
}

TEST_CASE("conjugate example: exact approximator fits a near-identity map") {
    ConjugateConfig config;
    config.particles = 50;
    ConjugateRunOptions options;
    options.replicates = 500;
    options.bootstrap = 0;
    options.held_out = 20;
    auto report = conjugate_gaussian_example(config, options, 3);
    CHECK(std::abs(report.calibration.map.scale(0, 0) - 1.0) < 0.15);
}

TEST_CASE("conjugate example: quartered variance is detected and repaired") {
    ConjugateConfig config;
    config.particles = 0;
    config.var_factor = 0.25;
    ConjugateRunOptions options;
    options.replicates = 300;
    options.bootstrap = 100;
    options.held_out = 20;
    auto report = conjugate_gaussian_example(config, options, 4);
    for (const auto& row : report.pre_summary)
        if (row.name.rfind("sd", 0) == 0) CHECK(row.fraction_above == 0.0);
    const auto& cal = report.calibration;
    CHECK(relative_difference(cal.after.sigma_r(), cal.before.sigma_l) < 1e-9);
}
