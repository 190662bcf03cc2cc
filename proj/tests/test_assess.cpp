#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "totvar/assess.hpp"
#include "totvar/error.hpp"

using namespace totvar;
using testing_support::particle_bundles;

TEST_CASE("ties count one half") {
    BootstrapDiagnostics diag;
    diag.b_count = 4;
    diag.mean_pairs = {{{1, 1}, {2, 2}, {3, 3}, {4, 4}}};
    diag.sd_pairs = {{{1, 2}, {2, 4}, {3, 6}, {4, 8}}};
    auto rows = diagnostic_summary(diag);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].name == "mean[0]");
    CHECK(rows[0].fraction_above == 0.5);
    CHECK(rows[1].name == "sd[0]");
    CHECK(rows[1].fraction_above == 1.0);
    CHECK(rows[1].left_median == doctest::Approx(2.5));
    CHECK(rows[1].right_median == doctest::Approx(5.0));
}

TEST_CASE("resamples are sorted, reproducible and never degenerate") {
    for (std::size_t b = 0; b < 50; ++b) {
        std::size_t redraws = 0;
        auto idx = bootstrap_resample(3, 9, b, &redraws);
        CHECK(idx.size() == 3);
        CHECK(std::is_sorted(idx.begin(), idx.end()));
        CHECK(idx.front() != idx.back());
        CHECK(idx == bootstrap_resample(3, 9, b));
    }
    CHECK_THROWS_AS(bootstrap_resample(1, 9, 0), InvalidInput);
}

TEST_CASE("each bootstrap replicate equals a direct estimate on the resampled list") {
    auto bundles = particle_bundles(3, 40, 6, 31);
    const std::size_t b_count = 25;
    auto diag = bootstrap_diagnostics(bundles, b_count, 5);
    REQUIRE(diag.mean_pairs.size() == 3);
    REQUIRE(diag.corr_pairs.size() == 3);
    for (std::size_t b = 0; b < b_count; ++b) {
        std::vector<ReplicateBundle> resampled;
        for (auto i : bootstrap_resample(bundles.size(), 5, b)) resampled.push_back(bundles[i]);
        BootstrapDiagnostics direct;
        append_scatter(estimate_moments(resampled), direct);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(diag.mean_pairs[j][b].left == direct.mean_pairs[j][0].left);
            CHECK(diag.mean_pairs[j][b].right == direct.mean_pairs[j][0].right);
            CHECK(diag.sd_pairs[j][b].left == direct.sd_pairs[j][0].left);
            CHECK(diag.sd_pairs[j][b].right == direct.sd_pairs[j][0].right);
            CHECK(diag.corr_pairs[j].pairs[b].left == direct.corr_pairs[j].pairs[0].left);
            CHECK(diag.corr_pairs[j].pairs[b].right == direct.corr_pairs[j].pairs[0].right);
        }
    }
    for (const auto& c : diag.corr_pairs)
        for (const auto& p : c.pairs) {
            CHECK(std::abs(p.left) <= 1.0);
            CHECK(std::abs(p.right) <= 1.0);
        }
}

TEST_CASE("scatter is invariant to storage order and reproducible") {
    auto bundles = particle_bundles(2, 30, 5, 8);
    auto a = bootstrap_diagnostics(bundles, 40, 3);
    std::reverse(bundles.begin(), bundles.end());
    auto b = bootstrap_diagnostics(bundles, 40, 3);
    std::ostringstream sa, sb;
    write_diagnostics_csv(sa, a);
    write_diagnostics_csv(sb, b);
    CHECK(sa.str() == sb.str());
}

TEST_CASE("identical replicates collapse to a point") {
    auto one = particle_bundles(1, 1, 4, 2).front();
    std::vector<ReplicateBundle> bundles;
    for (std::size_t i = 0; i < 5; ++i) {
        auto b = one;
        b.index = i;
        bundles.push_back(b);
    }
    auto diag = bootstrap_diagnostics(bundles, 10, 1);
    for (const auto& p : diag.mean_pairs[0]) {
        CHECK(p.left == diag.mean_pairs[0][0].left);
        CHECK(p.right == diag.mean_pairs[0][0].right);
    }
}

TEST_CASE("csv layout and svg panels") {
    auto diag = bootstrap_diagnostics(particle_bundles(2, 20, 5, 4), 7, 2);
    std::ostringstream out;
    write_diagnostics_csv(out, diag);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "statistic_name,coord,b,left,right");
    std::size_t rows = 0, corr = 0;
    while (std::getline(in, line)) {
        ++rows;
        if (line.rfind("corr,0:1,", 0) == 0) ++corr;
    }
    CHECK(rows == 7 * 5);
    CHECK(corr == 7);

    auto dir = std::filesystem::temp_directory_path() / "totvar_test_svg";
    std::filesystem::remove_all(dir);
    auto paths = write_scatter_svgs(dir, diag);
    CHECK(paths.size() == 5);
    std::ifstream first(paths.front());
    std::string text((std::istreambuf_iterator<char>(first)), std::istreambuf_iterator<char>());
    CHECK(text.find("<svg") != std::string::npos);
    auto again = write_scatter_svgs(dir, diag);
    std::ifstream second(again.front());
    std::string text2((std::istreambuf_iterator<char>(second)), std::istreambuf_iterator<char>());
    CHECK(text == text2);
    std::filesystem::remove_all(dir);
}
