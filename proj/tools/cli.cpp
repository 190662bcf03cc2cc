#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "totvar/adjust.hpp"
#include "totvar/assess.hpp"
#include "totvar/conditioning.hpp"
#include "totvar/error.hpp"
#include "totvar/examples/conjugate.hpp"
#include "totvar/examples/fenton_wilkinson.hpp"
#include "totvar/examples/gp_adjust.hpp"
#include "totvar/examples/report.hpp"
#include "totvar/store.hpp"

namespace totvar::cli {

namespace fs = std::filesystem;
using namespace totvar::examples;

namespace {

constexpr std::uint64_t kObservedStream = 0x0b5e7edULL;

struct SimulateOptions {
    std::string model = "gaussian";
    std::size_t replicates = 100;
    std::size_t particles = 200;
    std::uint64_t seed = 1;
    std::string out;
    std::string observed;
    bool append = false;
    // gaussian
    std::size_t n_obs = 1;
    double noise_var = 1.0;
    double mean_shift = 0.0;
    double var_factor = 1.0;
    // fw
    int kappa = 10;
    std::size_t fw_n_obs = 10;
};

struct AssessOptions {
    std::string bundles;
    std::size_t bootstrap = 1000;
    std::uint64_t seed = 1;
    std::string out;
    bool plot = false;
};

struct AdjustOptions {
    std::string bundles;
    std::string observed;
    std::string out;
    std::size_t keep = 0;
    double tolerance = 0.0;
    double jitter = 0.0;
    std::vector<std::string> links;
};

struct GaussianExampleOptions {
    ConjugateConfig config;
    ConjugateRunOptions run;
    std::uint64_t seed = 1;
    std::string out = "report_gaussian";
    bool plot = false;
};

struct FwExampleOptions {
    FwExampleConfig config;
    std::uint64_t seed = 1;
    std::string out = "report_fw";
    bool plot = false;
};

struct GpExampleOptions {
    GpConfig config;
    std::string surrogate = "rff_ridge";
    double jitter = 0.0;
    std::uint64_t seed = 1;
    std::uint64_t input_seed = 0;  // 0: identity input covariance
    std::string out = "report_gp";
};

// --config: every key of the JSON object becomes "--key value" unless the
// flag is already on the command line. Arrays are comma-joined; true booleans
// become bare flags.
std::vector<std::string> merge_config(std::vector<std::string> args) {
    auto it = std::find(args.begin(), args.end(), "--config");
    std::string path;
    if (it != args.end()) {
        if (it + 1 == args.end()) throw CLI::ArgumentMismatch("--config needs a file path");
        path = *(it + 1);
        args.erase(it, it + 2);
    } else {
        for (auto a = args.begin(); a != args.end(); ++a) {
            if (a->rfind("--config=", 0) == 0) {
                path = a->substr(9);
                args.erase(a);
                break;
            }
        }
    }
    if (path.empty()) return args;

    const Json cfg = read_json_file(path);
    if (!cfg.is_object()) throw InvalidInput("config file must hold a JSON object");
    auto given = [&](const std::string& flag) {
        return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
    };
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        if (given(flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
            continue;
        }
        std::string text;
        if (value.is_array()) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (i) text += ',';
                text += value[i].is_string() ? value[i].get<std::string>() : value[i].dump();
            }
        } else if (value.is_string()) {
            text = value.get<std::string>();
        } else if (value.is_number() || value.is_null()) {
            text = value.dump();
        } else {
            throw InvalidInput("config key '" + key + "' has an unsupported value");
        }
        args.push_back(flag);
        args.push_back(text);
    }
    return args;
}

int run_simulate(const SimulateOptions& o) {
    if (o.out.empty()) throw InvalidInput("simulate needs --out");
    std::unique_ptr<JointModel> model;
    Approximator approximator;
    if (o.model == "gaussian") {
        ConjugateConfig c;
        c.n_obs = o.n_obs;
        c.noise_var = o.noise_var;
        c.mean_shift = o.mean_shift;
        c.var_factor = o.var_factor;
        c.particles = o.particles;
        model = std::make_unique<ConjugateGaussianModel>(c);
        approximator = conjugate_approximator(c);
    } else if (o.model == "fw") {
        model = std::make_unique<FwModel>(o.fw_n_obs, o.kappa, FwPrior{});
        Approximator laplace = fw_laplace_approximator(o.kappa, FwPrior{});
        if (o.particles > 0) {
            const auto count = static_cast<Index>(o.particles);
            approximator.concurrent = laplace.concurrent;
            approximator.approximate = [laplace, count](const Dataset& y, std::uint64_t seed) {
                Rng rng = make_rng(derive_seed(seed, 1));
                return to_particles(laplace.approximate(y, seed), count, rng);
            };
        } else {
            approximator = laplace;
        }
    } else {
        throw InvalidInput("unknown model '" + o.model + "' (expected gaussian or fw)");
    }

    std::size_t first = 0;
    std::vector<ReplicateBundle> existing;
    if (o.append && fs::exists(o.out)) {
        existing = read_store(fs::path(o.out));
        for (const auto& b : existing) first = std::max(first, b.index + 1);
    }
    const auto bundles = generate_replicates(*model, approximator, o.replicates, o.seed, first);
    if (o.append) append_store(o.out, bundles);
    else write_store(fs::path(o.out), bundles);
    std::cout << "wrote replicates " << first << ".." << first + bundles.size() - 1 << " to " << o.out << '\n';

    if (!o.observed.empty()) {
        const std::uint64_t obs_seed = derive_seed(o.seed, kObservedStream);
        const SimulatedReplicate obs = simulate_replicate(*model, obs_seed);
        const PosteriorApprox approx = approximator.approximate(obs.data, approximator_seed(obs_seed));
        write_json_file(o.observed, {{"theta", to_json(obs.theta)},
                                     {"summary", to_json(model->summarize(obs.data))},
                                     {"approx", to_json(approx)},
                                     {"seed", obs_seed}});
        std::cout << "wrote observed approximation to " << o.observed << '\n';
    }
    return 0;
}

int run_assess(const AssessOptions& o) {
    if (o.bundles.empty() || o.out.empty()) throw InvalidInput("assess needs --bundles and --out");
    const auto bundles = read_store(fs::path(o.bundles));
    const auto diag = bootstrap_diagnostics(bundles, o.bootstrap, o.seed);
    fs::create_directories(o.out);
    {
        std::ofstream out(fs::path(o.out) / "diagnostics.csv");
        out.precision(17);
        write_diagnostics_csv(out, diag);
    }
    const auto rows = diagnostic_summary(diag);
    {
        std::ofstream out(fs::path(o.out) / "summary.csv");
        out.precision(17);
        write_summary_csv(out, rows);
    }
    write_json_file(fs::path(o.out) / "moments.json", to_json(estimate_moments(bundles)));
    write_json_file(fs::path(o.out) / "config.json", {{"command", "assess"},
                                                      {"bundles", o.bundles},
                                                      {"bootstrap", o.bootstrap},
                                                      {"seed", o.seed},
                                                      {"plot", o.plot}});
    if (o.plot) write_scatter_svgs(fs::path(o.out) / "plots", diag);
    std::cout << "statistic,left_median,right_median,fraction_above\n";
    for (const auto& r : rows) {
        std::cout << r.name << ',' << r.left_median << ',' << r.right_median << ',' << r.fraction_above << '\n';
    }
    if (diag.redraws > 0) std::cout << "degenerate resamples redrawn: " << diag.redraws << '\n';
    return 0;
}

int run_adjust(const AdjustOptions& o) {
    if (o.bundles.empty() || o.observed.empty() || o.out.empty()) {
        throw InvalidInput("adjust needs --bundles, --observed and --out");
    }
    auto bundles = read_store(fs::path(o.bundles));
    const Json obs = read_json_file(o.observed);
    const bool wrapped = obs.is_object() && obs.contains("approx");
    PosteriorApprox observed = approx_from_json(wrapped ? obs.at("approx") : obs);
    observed.validate();

    if (o.keep > 0 || o.tolerance > 0.0) {
        if (!wrapped || !obs.contains("summary")) {
            throw InvalidInput("conditioning needs the observed summary: --observed must hold {\"summary\", \"approx\"}");
        }
        const Vector summary = vector_from_json(obs.at("summary"));
        std::vector<Vector> rows;
        for (const auto& b : bundles) rows.push_back(b.summary);
        ConditioningRule rule;
        rule.distance = weighted_euclidean(mean_absolute_deviation(rows));
        if (o.keep > 0) rule.retention = KeepCountRetention{o.keep};
        else rule.retention = ToleranceRetention{o.tolerance};
        bundles = apply_conditioning(bundles, rule, summary);
    }

    std::vector<Link> links;
    for (const auto& name : o.links) links.push_back(parse_link(name));
    if (!links.empty()) {
        bundles = apply_links(std::move(bundles), links);
        observed = apply_links(std::move(observed), links);
    }
    const Calibration cal = calibrate(bundles, o.jitter);
    PosteriorApprox adjusted = calibrate_observed(observed, cal.map);
    if (!links.empty()) adjusted = invert_links(std::move(adjusted), links);

    fs::create_directories(o.out);
    Json link_names = Json::array();
    for (Link l : links) link_names.push_back(link_name(l));
    write_json_file(fs::path(o.out) / "config.json", {{"command", "adjust"},
                                                      {"bundles", o.bundles},
                                                      {"observed", o.observed},
                                                      {"keep", o.keep},
                                                      {"tolerance", o.tolerance},
                                                      {"jitter", o.jitter},
                                                      {"links", link_names},
                                                      {"retained", cal.before.i_used}});
    write_json_file(fs::path(o.out) / "adjustment.json", to_json(cal.map));
    write_json_file(fs::path(o.out) / "adjusted.json", to_json(adjusted));
    write_json_file(fs::path(o.out) / "moments.json", {{"before", to_json(cal.before)}, {"after", to_json(cal.after)}});
    std::cout << "retained " << cal.before.i_used << " replicates; rho " << cal.map.rho << "; wrote " << o.out << '\n';
    return 0;
}

void print_rows(const char* title, const std::vector<DiagnosticRow>& rows) {
    if (rows.empty()) return;
    std::cout << title << '\n';
    for (const auto& r : rows) {
        std::cout << "  " << r.name << " left " << r.left_median << " right " << r.right_median << " above "
                  << r.fraction_above << '\n';
    }
}

int run_gaussian_example(const GaussianExampleOptions& o) {
    const auto report = conjugate_gaussian_example(o.config, o.run, o.seed);
    write_report(o.out, report, o.run);
    if (o.plot && o.run.bootstrap > 0) write_scatter_svgs(fs::path(o.out) / "plots", report.pre_diagnostics);
    print_rows("diagnostics before adjustment", report.pre_summary);
    print_rows("diagnostics after adjustment", report.post_summary);
    if (!report.unadjusted_sq_errors.empty()) {
        std::cout << "median squared error: unadjusted " << report.unadjusted_median << ", adjusted "
                  << report.adjusted_median << '\n';
    }
    std::cout << "report written to " << o.out << '\n';
    return 0;
}

int run_fw_example(const FwExampleOptions& o) {
    const auto report = fw_example(o.config, o.seed);
    write_report(o.out, report);
    if (o.plot && o.config.bootstrap > 0) write_scatter_svgs(fs::path(o.out) / "plots", report.diagnostics);
    auto show = [](const char* name, const MarginalSummary& s) {
        std::cout << name << ": mu mean " << s.mean(0) << " sd " << s.sd(0) << "; sigma mean " << s.mean(1) << " sd "
                  << s.sd(1) << '\n';
    };
    show("unadjusted", report.unadjusted);
    show("adjusted", report.adjusted);
    if (report.abc) show("rejection ABC", *report.abc);
    std::cout << "report written to " << o.out << '\n';
    return 0;
}

int run_gp_example(GpExampleOptions o) {
    if (o.input_seed != 0) o.config.input_chol = GpConfig::random_input_chol(o.input_seed);
    const auto surrogate = make_surrogate(o.surrogate);
    const GpRun run = gp_example(o.config, *surrogate, o.seed, o.jitter);
    write_report(o.out, o.config, run, o.seed);
    const auto& r = run.report;
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "mean log score (lower is better): unadjusted " << r.mean_score_unadjusted << ", adjusted "
              << r.mean_score_adjusted << '\n';
    for (std::size_t q = 0; q < r.interval_score_adjusted.size(); ++q) {
        std::cout << "  distance interval " << q << ": unadjusted " << r.interval_score_unadjusted[q]
                  << ", adjusted " << r.interval_score_adjusted[q] << '\n';
    }
    std::cout << "report written to " << o.out << '\n';
    return 0;
}

} // namespace

int run(const std::vector<std::string>& raw_args) {
    CLI::App app{"Total-variance calibration checks and adjustments for approximate posteriors"};
    app.name("totvar");
    app.require_subcommand(1);
    app.add_option("--config", "JSON file whose keys mirror the flags; flags on the command line win");

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Build or extend a replicate store from a built-in model");
    simulate->add_option("--model", sim.model, "gaussian or fw")->capture_default_str();
    simulate->add_option("--replicates", sim.replicates, "number of replicates I")->capture_default_str();
    simulate->add_option("--particles", sim.particles, "particles per replicate S (0: Gaussian moments)")
        ->capture_default_str();
    simulate->add_option("--seed", sim.seed, "master seed")->capture_default_str();
    simulate->add_option("--out", sim.out, "JSON Lines store")->required();
    simulate->add_option("--observed", sim.observed, "also write an observed-data approximation here");
    simulate->add_flag("--append", sim.append, "extend an existing store, continuing its indices");
    simulate->add_option("--n-obs", sim.n_obs, "gaussian: observations per dataset")->capture_default_str();
    simulate->add_option("--noise-var", sim.noise_var, "gaussian: observation noise variance")->capture_default_str();
    simulate->add_option("--mean-shift", sim.mean_shift, "gaussian: approximator mean corruption")->capture_default_str();
    simulate->add_option("--var-factor", sim.var_factor, "gaussian: approximator variance factor")->capture_default_str();
    simulate->add_option("--kappa", sim.kappa, "fw: lognormal terms per observation")->capture_default_str();
    simulate->add_option("--fw-n-obs", sim.fw_n_obs, "fw: observations per dataset")->capture_default_str();

    AssessOptions as;
    auto* assess = app.add_subcommand("assess", "Bootstrap diagnostics for a replicate store");
    assess->add_option("--bundles", as.bundles, "JSON Lines store")->required();
    assess->add_option("--bootstrap", as.bootstrap, "bootstrap replicates B")->capture_default_str();
    assess->add_option("--seed", as.seed, "bootstrap seed")->capture_default_str();
    assess->add_option("--out", as.out, "output directory")->required();
    assess->add_flag("--plot", as.plot, "write SVG scatter panels");

    AdjustOptions ad;
    auto* adjust = app.add_subcommand("adjust", "Fit the adjustment and apply it to an observed approximation");
    adjust->add_option("--bundles", ad.bundles, "JSON Lines store")->required();
    adjust->add_option("--observed", ad.observed, "observed approximation (JSON)")->required();
    adjust->add_option("--out", ad.out, "output directory")->required();
    auto* keep = adjust->add_option("--keep", ad.keep, "retain the nearest replicates by summary distance");
    auto* tol = adjust->add_option("--tolerance", ad.tolerance, "retain replicates with distance below this");
    keep->excludes(tol);
    adjust->add_option("--jitter", ad.jitter, "added to the within-replicate covariance before factoring")
        ->capture_default_str();
    adjust->add_option("--link", ad.links, "per-coordinate link: identity, log or logit")->delimiter(',');

    auto* example = app.add_subcommand("example", "Run a worked example end to end");
    example->require_subcommand(1);

    GaussianExampleOptions ge;
    auto* gaussian = example->add_subcommand("gaussian", "Conjugate Gaussian oracle");
    gaussian->add_option("--replicates", ge.run.replicates, "I")->capture_default_str();
    gaussian->add_option("--particles", ge.config.particles, "S (0: exact Gaussian moments)")->capture_default_str();
    gaussian->add_option("--bootstrap", ge.run.bootstrap, "B (0: skip diagnostics)")->capture_default_str();
    gaussian->add_option("--held-out", ge.run.held_out, "fresh replicates for squared errors")->capture_default_str();
    gaussian->add_option("--n-obs", ge.config.n_obs, "observations per dataset")->capture_default_str();
    gaussian->add_option("--noise-var", ge.config.noise_var, "observation noise variance")->capture_default_str();
    gaussian->add_option("--mean-shift", ge.config.mean_shift, "approximator mean corruption")->capture_default_str();
    gaussian->add_option("--var-factor", ge.config.var_factor, "approximator variance factor")->capture_default_str();
    gaussian->add_option("--jitter", ge.run.jitter, "covariance jitter")->capture_default_str();
    gaussian->add_option("--seed", ge.seed, "master seed")->capture_default_str();
    gaussian->add_option("--out", ge.out, "report directory")->capture_default_str();
    gaussian->add_flag("--plot", ge.plot, "write SVG scatter panels");

    FwExampleOptions fe;
    auto* fw = example->add_subcommand("fw", "Sum of lognormals with a Laplace auxiliary approximation");
    fw->add_option("--pool", fe.config.pool, "prior replicates")->capture_default_str();
    fw->add_option("--keep", fe.config.keep, "replicates retained nearest the observed summary")->capture_default_str();
    fw->add_option("--n-obs", fe.config.n_obs, "observations per dataset")->capture_default_str();
    fw->add_option("--kappa", fe.config.kappa, "lognormal terms per observation")->capture_default_str();
    fw->add_option("--abc-pool", fe.config.abc_pool, "rejection ABC reference size (0: none)")->capture_default_str();
    fw->add_option("--abc-accept", fe.config.abc_accept, "rejection ABC accepted draws")->capture_default_str();
    fw->add_option("--bootstrap", fe.config.bootstrap, "B (0: skip diagnostics)")->capture_default_str();
    fw->add_option("--report-particles", fe.config.report_particles, "draws for reported summaries")
        ->capture_default_str();
    fw->add_option("--jitter", fe.config.jitter, "covariance jitter")->capture_default_str();
    fw->add_option("--seed", fe.seed, "master seed")->capture_default_str();
    fw->add_option("--out", fe.out, "report directory")->capture_default_str();
    fw->add_flag("--plot", fe.plot, "write SVG scatter panels");

    GpExampleOptions gpe;
    auto* gp = example->add_subcommand("gp", "GP surrogate predictive adjustment by distance bin");
    gp->add_option("--replicates", gpe.config.replicates, "R")->capture_default_str();
    gp->add_option("--n", gpe.config.n, "training points per dataset")->capture_default_str();
    gp->add_option("--m", gpe.config.m, "test points per dataset")->capture_default_str();
    gp->add_option("--bins", gpe.config.bins, "distance bins K")->capture_default_str();
    gp->add_option("--keep", gpe.config.keep, "replicates retained by hyperparameter distance")->capture_default_str();
    gp->add_option("--surrogate", gpe.surrogate, "rff_ridge or exact_gp")->capture_default_str();
    gp->add_option("--input-seed", gpe.input_seed, "draw a random input covariance from this seed (0: identity)")
        ->capture_default_str();
    gp->add_option("--jitter", gpe.jitter, "covariance jitter")->capture_default_str();
    gp->add_option("--seed", gpe.seed, "master seed")->capture_default_str();
    gp->add_option("--out", gpe.out, "report directory")->capture_default_str();

    try {
        std::vector<std::string> args = merge_config(raw_args);
        std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*assess) return run_assess(as);
        if (*adjust) return run_adjust(ad);
        if (*gaussian) return run_gaussian_example(ge);
        if (*fw) return run_fw_example(fe);
        if (*gp) return run_gp_example(gpe);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace totvar::cli
