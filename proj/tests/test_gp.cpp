#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "totvar/error.hpp"
#include "totvar/examples/gp.hpp"
#include "totvar/examples/gp_adjust.hpp"
#include "totvar/examples/surrogate.hpp"

using namespace totvar;
using namespace totvar::examples;

TEST_CASE("matern 1.5 covariance") {
    CHECK(matern15(0.0, 0.7, 2.0) == 0.7);
    const double r3 = std::sqrt(3.0);
    CHECK(matern15(1.0, 1.0, 1.0) == doctest::Approx((1.0 + r3) * std::exp(-r3)).epsilon(1e-15));
    double prev = matern15(0.0, 1.0, 0.5);
    for (double d = 0.1; d < 20.0; d += 0.1) {
        double v = matern15(d, 1.0, 0.5);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < 1e-25);
}

TEST_CASE("gram matrices are positive semi-definite after jitter") {
    Rng rng = make_rng(21);
    for (int rep = 0; rep < 10; ++rep) {
        Index n = 5 + 5 * rep;
        Matrix x(n, 2);
        for (Index i = 0; i < n; ++i) x.row(i) = standard_normal(rng, 2).transpose() * 0.3;
        x.row(n - 1) = x.row(0);  // coincident inputs are perfectly correlated
        Matrix k = matern_gram(x, 2.0, 1.3);
        CHECK(k(0, n - 1) == 2.0);
        k.diagonal().array() += 1e-8 * 2.0;
        CHECK(min_eigenvalue(k) >= -1e-10 * 2.0);
    }
}

TEST_CASE("hyperprior parameterization uses the mean b/(a-1)") {
    GpHyperPrior p;
    CHECK(inverse_gamma_mean(p.a_sigma, p.b_sigma) == doctest::Approx(0.1));
    CHECK(inverse_gamma_mean(p.a_lambda, p.b_lambda) == doctest::Approx(9.0 / 8.0));
    // the default tau prior: 6.75 / 13.5
    CHECK(inverse_gamma_mean(p.a_tau, p.b_tau) == doctest::Approx(0.5));

    Rng rng = make_rng(2);
    const int n = 100000;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += inverse_gamma(rng, p.a_tau, p.b_tau);
    const double var = 0.5 * 0.5 / (p.a_tau - 2.0);
    CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(var / n));
}

TEST_CASE("marginal variance of simulated responses is tau2 + sigma2") {
    GpConfig config;
    config.n = 4;
    config.m = 1;
    GpHyper h{0.3, 0.8, 0.2};
    Rng rng = make_rng(14);
    const int reps = 4000;
    double ss = 0.0;
    for (int r = 0; r < reps; ++r) {
        auto data = simulate_gp_dataset(config, h, rng);
        ss += data.z_train(0) * data.z_train(0);
    }
    const double target = h.tau2 + h.sigma2;
    const double se = target * std::sqrt(2.0 / reps);
    CHECK(std::abs(ss / reps - target) < 3.0 * se);
}

TEST_CASE("replicates depend only on the master seed and index") {
    GpConfig config;
    config.n = 30;
    config.m = 5;
    auto a = simulate_gp_replicate(config, 4, 77);
    auto b = simulate_gp_replicate(config, 4, 77);
    auto c = simulate_gp_replicate(config, 5, 77);
    CHECK(a.z_train == b.z_train);
    CHECK(a.x_test == b.x_test);
    CHECK(a.truth.tau2 == b.truth.tau2);
    CHECK(a.z_train != c.z_train);
}

TEST_CASE("variogram estimates recover the generating hyperparameters") {
    GpConfig config;
    config.n = 1000;
    config.m = 1;
    GpHyper h{0.1, 1.0, 0.1};
    int good = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng = make_rng(seed);
        auto data = simulate_gp_dataset(config, h, rng);
        auto fit = fit_variogram(data.x_train, data.z_train);
        bool ok = std::abs(fit.tau2 / h.tau2 - 1.0) <= 0.5 && std::abs(fit.lambda / h.lambda - 1.0) <= 0.5 &&
                  std::abs(fit.nugget / h.sigma2 - 1.0) <= 0.5;
        good += ok ? 1 : 0;
    }
    MESSAGE("variogram within 50% in " << good << " of 20 seeds");
    CHECK(good >= 16);
}

TEST_CASE("pure noise gives a negligible partial sill") {
    GpConfig config;
    config.n = 1000;
    config.m = 1;
    GpHyper h{1e-8, 1.0, 0.1};
    // Monte Carlo standard error of a variance estimate at this n and noise level.
    const double se = h.sigma2 * std::sqrt(2.0 / static_cast<double>(config.n));
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng = make_rng(seed);
        auto data = simulate_gp_dataset(config, h, rng);
        auto fit = fit_variogram(data.x_train, data.z_train);
        CAPTURE(seed);
        CHECK(fit.tau2 <= h.tau2 + 3.0 * se);
    }
}

TEST_CASE("degenerate variogram inputs") {
    Rng rng = make_rng(1);
    Matrix x(50, 2);
    for (Index i = 0; i < 50; ++i) x.row(i) = standard_normal(rng, 2).transpose();
    CHECK_THROWS_AS(fit_variogram(x, Vector::Constant(50, 1.5)), Error);
    CHECK_THROWS_AS(estimate_gp_hyperparams(x.topRows(20), standard_normal(rng, 20)), InvalidInput);
    auto est = estimate_gp_hyperparams(x, standard_normal(rng, 50), 0.25);
    CHECK(est.sigma == doctest::Approx(0.5));
}

TEST_CASE("nearest training distances use the input metric") {
    Matrix chol(2, 2);
    chol << 2.0, 0.0, 0.0, 0.5;
    Matrix train(2, 2);
    train << 0, 0, 10, 10;
    Matrix test(3, 2);
    test << 0, 0, 2, 0, 0, 1;
    auto d = nearest_training_distances(train, test, chol);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == doctest::Approx(1.0));
    CHECK(d[2] == doctest::Approx(2.0));
}

TEST_CASE("distance bins") {
    auto two = build_bins({{0.0, 0.3, 1.0}, {0.0, 0.5}}, 2);
    REQUIRE(two.count() == 2);
    CHECK(two.edges[0] == 0.0);
    CHECK(two.edges[1] == doctest::Approx(0.75));
    CHECK(two.edges[2] == doctest::Approx(1.5));
    CHECK(two.bin_of(0.0) == 0);
    CHECK(two.bin_of(0.75) == 1);
    CHECK(two.bin_of(1.5) == 1);

    Rng rng = make_rng(6);
    std::vector<std::vector<double>> all(20);
    for (auto& rep : all)
        for (int k = 0; k < 30; ++k) rep.push_back(std::abs(standard_normal(rng)) * 2.0);
    auto bins = build_bins(all, 5);
    CHECK(std::is_sorted(bins.edges.begin(), bins.edges.end()));
    for (std::size_t k = 0; k + 1 < bins.edges.size(); ++k) CHECK(bins.edges[k] < bins.edges[k + 1]);
    for (const auto& rep : all)
        for (double d : rep) {
            auto k = bins.bin_of(d);
            REQUIRE(k < bins.count());
            CHECK(d >= bins.edges[k]);
            CHECK(d <= bins.edges[k + 1]);
            if (k + 1 < bins.count()) CHECK(d < bins.edges[k + 1]);
        }

    CHECK_THROWS_WITH_AS(build_bins({{1.0, 1.0}, {1.0}}, 3), "degenerate distance distribution", InvalidInput);
    CHECK_THROWS_AS(build_bins({{0.0, 1.0}}, 1), InvalidInput);
}

TEST_CASE("gaussian log score") {
    CHECK(gaussian_log_score(0.0, 0.0, 1.0) == doctest::Approx(0.5 * std::log(2.0 * M_PI)));
    CHECK(gaussian_log_score(2.0, 1.0, 4.0) == doctest::Approx(0.5 * std::log(8.0 * M_PI) + 0.125));
}

TEST_CASE("random feature ridge is deterministic and fits a smooth surface") {
    Rng rng = make_rng(3);
    TrainingSet set;
    set.x = Matrix(300, 2);
    set.z = Vector(300);
    for (Index i = 0; i < 300; ++i) {
        set.x.row(i) = standard_normal(rng, 2).transpose();
        set.z(i) = std::sin(set.x(i, 0)) + 0.5 * set.x(i, 1) + 0.1 * standard_normal(rng);
    }
    RandomFeatureRidge ridge;
    auto a = ridge.train(set, 9);
    auto b = ridge.train(set, 9);
    Matrix probe = set.x.topRows(50);
    auto pa = a->predict(probe);
    auto pb = b->predict(probe);
    CHECK(pa.mean == pb.mean);
    CHECK(a->residual_variance() == b->residual_variance());
    CHECK(a->residual_variance() < 0.05);
    CHECK((pa.mean - set.z.head(50)).squaredNorm() / 50.0 < 0.05);
    for (Index i = 0; i < 50; ++i) CHECK(pa.variance(i) == a->residual_variance());
}

namespace {

GpConfig small_config(std::size_t replicates, std::size_t keep) {
    GpConfig c;
    c.replicates = replicates;
    c.keep = keep;
    c.n = 150;
    c.m = 40;
    c.bins = 4;
    return c;
}

}  // namespace

TEST_CASE("per-bin maps reproduce the moment identities on their pooled pairs") {
    auto config = small_config(40, 20);
    auto run = gp_example(config, RandomFeatureRidge{}, 12);
    const auto& report = run.report;
    CHECK(report.retained.size() == 20);
    CHECK(report.scores.size() == config.m);
    CHECK(report.interval_edges.size() == kScoreIntervals + 1);
    for (const auto& adj : report.adjustments) {
        if (!adj.fitted) continue;
        std::vector<ReplicateBundle> pairs;
        for (auto r : report.retained) {
            const auto& fit = run.replicates[r];
            for (std::size_t l = 0; l < fit.distance.size(); ++l) {
                if (report.bins.bin_of(fit.distance[l]) != adj.bin) continue;
                ReplicateBundle b;
                b.index = pairs.size();
                b.theta = Vector::Constant(1, fit.z_test(static_cast<Index>(l)));
                b.approx = PosteriorApprox::gaussian(Vector::Constant(1, fit.mean(static_cast<Index>(l))),
                                                     Matrix::Constant(1, 1, fit.variance(static_cast<Index>(l))));
                pairs.push_back(b);
            }
        }
        CAPTURE(adj.bin);
        REQUIRE(pairs.size() == adj.pairs);
        auto direct = estimate_moments(pairs);
        CHECK(relative_difference(direct.sigma_l, adj.summary.sigma_l) < 1e-12);
        CHECK(relative_difference(direct.sigma_r2, adj.summary.sigma_r2) < 1e-12);
        for (auto& b : pairs) b.approx = calibrate_observed(b.approx, adj.map);
        auto after = estimate_moments(pairs);
        CHECK(relative_difference(after.mu_r, direct.mu_l, 1.0) < 1e-9);
        CHECK(relative_difference(after.sigma_r(), direct.sigma_l) < 1e-9);
    }
}

TEST_CASE("exact GP predictive needs little adjustment") {
    auto config = small_config(200, 200);
    config.n = 200;
    config.m = 50;
    config.bins = 5;
    auto run = gp_example(config, ExactGpSurrogate{}, 31);
    for (const auto& adj : run.report.adjustments) {
        CAPTURE(adj.bin);
        CAPTURE(adj.pairs);
        CHECK(adj.fitted);
        CHECK(std::abs(adj.map.scale(0, 0) - 1.0) <= 0.25);
    }
}

TEST_CASE("an overconfident surrogate gets wider predictives in every bin") {
    auto config = small_config(60, 60);
    auto halved = std::make_shared<VarianceScaledSurrogate>(std::make_shared<ExactGpSurrogate>(), 0.5);
    auto run = gp_example(config, *halved, 8);
    for (const auto& row : run.report.scores) {
        CHECK(row.var_adjusted > row.var_unadjusted);
    }
    for (const auto& adj : run.report.adjustments) {
        CAPTURE(adj.bin);
        CHECK(adj.map.scale(0, 0) > 1.0);
    }
}

TEST_CASE("gp runs are reproducible") {
    auto config = small_config(20, 10);
    auto a = gp_example(config, RandomFeatureRidge{}, 4);
    auto b = gp_example(config, RandomFeatureRidge{}, 4);
    REQUIRE(a.report.scores.size() == b.report.scores.size());
    for (std::size_t k = 0; k < a.report.scores.size(); ++k) {
        CHECK(a.report.scores[k].score_adjusted == b.report.scores[k].score_adjusted);
        CHECK(a.report.scores[k].mean_unadjusted == b.report.scores[k].mean_unadjusted);
    }
    CHECK(a.report.retained == b.report.retained);
}
