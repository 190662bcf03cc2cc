#include "totvar/examples/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "totvar/error.hpp"

namespace totvar::examples {

namespace fs = std::filesystem;
using totvar::to_json;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

Json diagnostic_rows_json(const std::vector<DiagnosticRow>& rows) {
    Json out = Json::array();
    for (const auto& r : rows) {
        out.push_back({{"name", r.name},
                       {"left_median", r.left_median},
                       {"right_median", r.right_median},
                       {"fraction_above", r.fraction_above}});
    }
    return out;
}

Json marginal_json(const MarginalSummary& s) {
    return {{"mean", to_json(s.mean)}, {"sd", to_json(s.sd)}};
}

void write_header_only_diagnostics(const fs::path& path) {
    auto out = open_out(path);
    out << "statistic_name,coord,b,left,right\n";
}

} // namespace

Json to_json(const ConjugateConfig& config, const ConjugateRunOptions& options, std::uint64_t seed) {
    return {{"example", "gaussian"},
            {"seed", seed},
            {"n_obs", config.n_obs},
            {"noise_var", config.noise_var},
            {"mean_shift", config.mean_shift},
            {"var_factor", config.var_factor},
            {"particles", config.particles},
            {"replicates", options.replicates},
            {"bootstrap", options.bootstrap},
            {"held_out", options.held_out},
            {"jitter", options.jitter}};
}

Json to_json(const FwExampleConfig& config, std::uint64_t seed) {
    return {{"example", "fw"},
            {"seed", seed},
            {"pool", config.pool},
            {"keep", config.keep},
            {"n_obs", config.n_obs},
            {"kappa", config.kappa},
            {"true_mu", config.true_mu},
            {"true_sigma", config.true_sigma},
            {"prior",
             {{"mu_mean", config.prior.mu_mean},
              {"mu_sd", config.prior.mu_sd},
              {"sigma_shape", config.prior.sigma_shape},
              {"sigma_rate", config.prior.sigma_rate}}},
            {"report_particles", config.report_particles},
            {"abc_pool", config.abc_pool},
            {"abc_accept", config.abc_accept},
            {"bootstrap", config.bootstrap},
            {"jitter", config.jitter}};
}

Json to_json(const GpConfig& config, const std::string& surrogate, std::uint64_t seed) {
    const auto& p = config.priors;
    return {{"example", "gp"},
            {"seed", seed},
            {"surrogate", surrogate},
            {"n", config.n},
            {"m", config.m},
            {"replicates", config.replicates},
            {"bins", config.bins},
            {"keep", config.keep},
            {"nu", GpConfig::nu},
            {"input_chol", to_json(config.input_chol)},
            {"priors",
             {{"a_sigma", p.a_sigma},
              {"b_sigma", p.b_sigma},
              {"a_tau", p.a_tau},
              {"b_tau", p.b_tau},
              {"a_lambda", p.a_lambda},
              {"b_lambda", p.b_lambda}}}};
}

Json to_json(const GpReplicateFit& fit) {
    return {{"i", fit.index},
            {"seed", fit.seed},
            {"truth", {{"tau2", fit.truth.tau2}, {"lambda", fit.truth.lambda}, {"sigma2", fit.truth.sigma2}}},
            {"estimate", to_json(fit.estimate)},
            {"distance", fit.distance},
            {"z_test", to_json(fit.z_test)},
            {"mean", to_json(fit.mean)},
            {"variance", to_json(fit.variance)}};
}

Json to_json(const BinAdjustment& adj) {
    return {{"bin", adj.bin},
            {"pairs", adj.pairs},
            {"fitted", adj.fitted},
            {"source", adj.source},
            {"map", totvar::to_json(adj.map)}};
}

void write_scores_csv(std::ostream& out, const GpAdjustReport& report) {
    out << "point,distance,bin,interval,z,mean_unadjusted,var_unadjusted,mean_adjusted,var_adjusted,"
           "score_unadjusted,score_adjusted\n";
    for (const auto& r : report.scores) {
        out << r.point << ',' << r.distance << ',' << r.bin << ',' << r.interval << ',' << r.z << ','
            << r.mean_unadjusted << ',' << r.var_unadjusted << ',' << r.mean_adjusted << ',' << r.var_adjusted
            << ',' << r.score_unadjusted << ',' << r.score_adjusted << '\n';
    }
}

void write_report(const fs::path& dir, const ConjugateReport& report, const ConjugateRunOptions& options) {
    fs::create_directories(dir);
    write_json_file(dir / "config.json", to_json(report.config, options, report.seed));
    write_store(dir / "replicates.jsonl", report.bundles);
    write_json_file(dir / "moments.json",
                    {{"before", to_json(report.calibration.before)},
                     {"after", to_json(report.calibration.after)},
                     {"pre_summary", diagnostic_rows_json(report.pre_summary)},
                     {"post_summary", diagnostic_rows_json(report.post_summary)}});
    write_json_file(dir / "adjustment.json", to_json(report.calibration.map));
    {
        auto out = open_out(dir / "diagnostics.csv");
        write_diagnostics_csv(out, report.pre_diagnostics);
    }
    auto out = open_out(dir / "scores.csv");
    out << "held_out,unadjusted_sq_error,adjusted_sq_error\n";
    for (std::size_t i = 0; i < report.unadjusted_sq_errors.size(); ++i) {
        out << i << ',' << report.unadjusted_sq_errors[i] << ',' << report.adjusted_sq_errors[i] << '\n';
    }
}

void write_report(const fs::path& dir, const FwReport& report) {
    fs::create_directories(dir);
    write_json_file(dir / "config.json", to_json(report.config, report.seed));
    write_store(dir / "replicates.jsonl", report.pool);
    write_json_file(dir / "moments.json",
                    {{"before", to_json(report.calibration.before)},
                     {"after", to_json(report.calibration.after)},
                     {"weights", to_json(report.weights)},
                     {"observed", to_json(report.observed)},
                     {"observed_summary", to_json(report.observed_summary)}});
    write_json_file(dir / "adjustment.json", to_json(report.calibration.map));
    {
        auto out = open_out(dir / "diagnostics.csv");
        write_diagnostics_csv(out, report.diagnostics);
    }
    auto out = open_out(dir / "scores.csv");
    out << "method,mu_mean,sigma_mean,mu_sd,sigma_sd,discrepancy_to_abc\n";
    auto row = [&](const char* name, const MarginalSummary& s) {
        out << name << ',' << s.mean(0) << ',' << s.mean(1) << ',' << s.sd(0) << ',' << s.sd(1) << ',';
        if (report.abc) out << summary_discrepancy(s, *report.abc);
        out << '\n';
    };
    row("unadjusted", report.unadjusted);
    row("adjusted", report.adjusted);
    if (report.abc) row("abc", *report.abc);
    Json summaries = {{"unadjusted", marginal_json(report.unadjusted)},
                      {"adjusted", marginal_json(report.adjusted)}};
    if (report.abc) summaries["abc"] = marginal_json(*report.abc);
    write_json_file(dir / "summaries.json", summaries);
}

void write_report(const fs::path& dir, const GpConfig& config, const GpRun& run, std::uint64_t seed) {
    fs::create_directories(dir);
    const GpAdjustReport& rep = run.report;
    write_json_file(dir / "config.json", to_json(config, rep.surrogate, seed));
    {
        auto out = open_out(dir / "replicates.jsonl");
        for (const auto& r : run.replicates) out << to_json(r).dump() << '\n';
        Json obs = to_json(run.observed);
        obs["observed"] = true;
        out << obs.dump() << '\n';
    }
    Json moments = Json::array();
    Json maps = Json::array();
    for (const auto& a : rep.adjustments) {
        moments.push_back({{"bin", a.bin}, {"source", a.source}, {"summary", totvar::to_json(a.summary)}});
        maps.push_back(to_json(a));
    }
    write_json_file(dir / "moments.json",
                    {{"bins", moments},
                     {"edges", rep.bins.edges},
                     {"weights", totvar::to_json(rep.weights)},
                     {"retained", rep.retained}});
    auto nan_safe = [](const std::vector<double>& v) {
        Json out = Json::array();
        for (double x : v) out.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
        return out;
    };
    write_json_file(dir / "adjustment.json",
                    {{"bins", maps},
                     {"warnings", rep.warnings},
                     {"interval_edges", rep.interval_edges},
                     {"mean_score_unadjusted", rep.mean_score_unadjusted},
                     {"mean_score_adjusted", rep.mean_score_adjusted},
                     {"interval_score_unadjusted", nan_safe(rep.interval_score_unadjusted)},
                     {"interval_score_adjusted", nan_safe(rep.interval_score_adjusted)}});
    // No bootstrap diagnostics for this example; header only.
    write_header_only_diagnostics(dir / "diagnostics.csv");
    auto out = open_out(dir / "scores.csv");
    write_scores_csv(out, rep);
}

} // namespace totvar::examples
