#include "totvar/assess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "totvar/error.hpp"
#include "totvar/parallel.hpp"
#include "totvar/random.hpp"

namespace totvar {

std::vector<std::size_t> bootstrap_resample(std::size_t count, std::uint64_t seed, std::size_t b,
                                            std::size_t* redraws) {
    if (count < 2) throw InvalidInput("bootstrap needs at least 2 replicates");
    Rng rng = make_rng(derive_seed(seed, b));
    std::uniform_int_distribution<std::size_t> pick(0, count - 1);
    std::vector<std::size_t> idx(count);
    std::size_t skipped = 0;
    for (;;) {
        for (auto& v : idx) v = pick(rng);
        const bool degenerate =
            std::all_of(idx.begin(), idx.end(), [&](std::size_t v) { return v == idx.front(); });
        if (!degenerate) break;
        ++skipped;
    }
    if (redraws) *redraws = skipped;
    std::sort(idx.begin(), idx.end());
    return idx;
}

namespace {

double correlation(const Matrix& cov, Index j, Index k) {
    const double denom = std::sqrt(cov(j, j) * cov(k, k));
    if (!(denom > 0.0)) return 0.0;
    return std::clamp(cov(j, k) / denom, -1.0, 1.0);
}

double safe_sd(double variance) {
    return std::sqrt(std::max(variance, 0.0));
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

DiagnosticRow summarize(std::string name, const std::vector<ScatterPair>& pairs) {
    DiagnosticRow row;
    row.name = std::move(name);
    std::vector<double> left, right;
    double above = 0.0;
    for (const auto& p : pairs) {
        left.push_back(p.left);
        right.push_back(p.right);
        if (p.right > p.left) {
            above += 1.0;
        } else if (p.right == p.left) {
            above += 0.5;
        }
    }
    row.left_median = median(std::move(left));
    row.right_median = median(std::move(right));
    row.fraction_above = pairs.empty() ? 0.0 : above / static_cast<double>(pairs.size());
    return row;
}

} // namespace

void append_scatter(const MomentSummary& s, BootstrapDiagnostics& diag) {
    const Index d = s.dim();
    if (diag.mean_pairs.empty()) {
        diag.mean_pairs.resize(static_cast<std::size_t>(d));
        diag.sd_pairs.resize(static_cast<std::size_t>(d));
        for (Index j = 0; j < d; ++j) {
            for (Index k = j + 1; k < d; ++k) diag.corr_pairs.push_back({j, k, {}});
        }
    }
    const Matrix sigma_r = s.sigma_r();
    for (Index j = 0; j < d; ++j) {
        const auto u = static_cast<std::size_t>(j);
        diag.mean_pairs[u].push_back({s.mu_l(j), s.mu_r(j)});
        diag.sd_pairs[u].push_back({safe_sd(s.sigma_l(j, j)), safe_sd(sigma_r(j, j))});
    }
    for (auto& series : diag.corr_pairs) {
        series.pairs.push_back({correlation(s.sigma_l, series.first, series.second),
                                correlation(sigma_r, series.first, series.second)});
    }
}

BootstrapDiagnostics bootstrap_diagnostics(const std::vector<ReplicateBundle>& bundles,
                                           std::size_t b_count, std::uint64_t seed) {
    if (b_count < 1) throw InvalidInput("bootstrap count must be at least 1");
    if (bundles.size() < 2) throw InvalidInput("need at least 2 replicates");

    // Resampling runs on storage positions sorted by replicate index, which
    // makes the scatter independent of how the bundles were stored.
    std::vector<ReplicateBundle> ordered = bundles;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const ReplicateBundle& a, const ReplicateBundle& b) { return a.index < b.index; });
    const std::vector<ReplicateTriple> triples = replicate_triples(ordered);

    std::vector<MomentSummary> summaries(b_count);
    std::vector<std::size_t> redraws(b_count, 0);
    parallel_for(b_count, [&](std::size_t b) {
        const auto idx = bootstrap_resample(triples.size(), seed, b, &redraws[b]);
        summaries[b] = reduce_moments(triples, idx);
    });

    BootstrapDiagnostics diag;
    diag.b_count = b_count;
    diag.seed = seed;
    for (std::size_t b = 0; b < b_count; ++b) {
        diag.redraws += redraws[b];
        append_scatter(summaries[b], diag);
    }
    return diag;
}

std::vector<DiagnosticRow> diagnostic_summary(const BootstrapDiagnostics& diag) {
    std::vector<DiagnosticRow> rows;
    for (std::size_t j = 0; j < diag.mean_pairs.size(); ++j) {
        rows.push_back(summarize("mean[" + std::to_string(j) + "]", diag.mean_pairs[j]));
    }
    for (std::size_t j = 0; j < diag.sd_pairs.size(); ++j) {
        rows.push_back(summarize("sd[" + std::to_string(j) + "]", diag.sd_pairs[j]));
    }
    for (const auto& c : diag.corr_pairs) {
        rows.push_back(summarize("corr[" + std::to_string(c.first) + "," + std::to_string(c.second) + "]",
                                 c.pairs));
    }
    return rows;
}

void write_diagnostics_csv(std::ostream& out, const BootstrapDiagnostics& diag) {
    out << "statistic_name,coord,b,left,right\n";
    out << std::setprecision(17);
    auto emit = [&](const char* name, const std::string& coord, const std::vector<ScatterPair>& pairs) {
        for (std::size_t b = 0; b < pairs.size(); ++b) {
            out << name << ',' << coord << ',' << b << ',' << pairs[b].left << ',' << pairs[b].right
                << '\n';
        }
    };
    for (std::size_t j = 0; j < diag.mean_pairs.size(); ++j) emit("mean", std::to_string(j), diag.mean_pairs[j]);
    for (std::size_t j = 0; j < diag.sd_pairs.size(); ++j) emit("sd", std::to_string(j), diag.sd_pairs[j]);
    for (const auto& c : diag.corr_pairs) {
        emit("corr", std::to_string(c.first) + ":" + std::to_string(c.second), c.pairs);
    }
}

void write_summary_csv(std::ostream& out, const std::vector<DiagnosticRow>& rows) {
    out << "statistic,left_median,right_median,fraction_above\n";
    out << std::setprecision(17);
    for (const auto& r : rows) {
        out << r.name << ',' << r.left_median << ',' << r.right_median << ',' << r.fraction_above
            << '\n';
    }
}

namespace {

void write_panel(const std::filesystem::path& path, const std::string& title,
                 const std::vector<ScatterPair>& pairs) {
    constexpr double size = 320.0;
    constexpr double margin = 40.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : pairs) {
        lo = std::min({lo, p.left, p.right});
        hi = std::max({hi, p.left, p.right});
    }
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto sx = [&](double v) { return margin + (v - lo) / (hi - lo) * (size - 2 * margin); };
    auto sy = [&](double v) { return size - margin - (v - lo) / (hi - lo) * (size - 2 * margin); };

    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << std::fixed << std::setprecision(2);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
        << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << size / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << title
        << "</text>\n";
    out << "<text x=\"" << size / 2 << "\" y=\"" << size - 8
        << "\" text-anchor=\"middle\" font-size=\"11\">left (prior draws)</text>\n";
    out << "<text x=\"12\" y=\"" << size / 2 << "\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 12 "
        << size / 2 << ")\">right (approximation)</text>\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size - 2 * margin
        << "\" height=\"" << size - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << sx(lo) << "\" y1=\"" << sy(lo) << "\" x2=\"" << sx(hi) << "\" y2=\"" << sy(hi)
        << "\" stroke=\"red\"/>\n";
    for (const auto& p : pairs) {
        out << "<circle cx=\"" << sx(p.left) << "\" cy=\"" << sy(p.right)
            << "\" r=\"1.5\" fill=\"black\" fill-opacity=\"0.4\"/>\n";
    }
    out << "</svg>\n";
}

} // namespace

std::vector<std::filesystem::path> write_scatter_svgs(const std::filesystem::path& dir,
                                                      const BootstrapDiagnostics& diag) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto panel = [&](const std::string& stem, const std::string& title,
                     const std::vector<ScatterPair>& pairs) {
        auto path = dir / (stem + ".svg");
        write_panel(path, title, pairs);
        written.push_back(path);
    };
    for (std::size_t j = 0; j < diag.mean_pairs.size(); ++j) {
        panel("mean_" + std::to_string(j), "mean, coordinate " + std::to_string(j), diag.mean_pairs[j]);
    }
    for (std::size_t j = 0; j < diag.sd_pairs.size(); ++j) {
        panel("sd_" + std::to_string(j), "sd, coordinate " + std::to_string(j), diag.sd_pairs[j]);
    }
    for (const auto& c : diag.corr_pairs) {
        const std::string tag = std::to_string(c.first) + "_" + std::to_string(c.second);
        panel("corr_" + tag, "correlation, coordinates " + std::to_string(c.first) + "," +
                                 std::to_string(c.second),
              c.pairs);
    }
    return written;
}

} // namespace totvar
