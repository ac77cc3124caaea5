// nvlab: configure, run, and report newsvendor policy experiments and
// minimax lower-bound computations. Subcommands:
//
//   simulate    run one Monte Carlo experiment, emit trace CSV + JSON summary
//   scaling     run a T/alpha/beta grid and fit the regret scaling law
//   lowerbound  evaluate the Bayesian Cramer-Rao (van Trees) machinery
//   verify      run the library's invariant suite, print pass/fail lines
//
// Every output directory receives a manifest.json sufficient to re-run the
// command bit-identically. Exit codes: 0 success, 1 runtime failure,
// 2 configuration validation failure.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nvlab/config.hpp"
#include "nvlab/experiment.hpp"
#include "nvlab/lowerbound.hpp"
#include "nvlab/verify.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kToolVersion = "0.1.0";

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw nvlab::ConfigError("config file '" + path + "' is not readable");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        // nlohmann's message carries the line/column of the syntax error
        throw nvlab::ConfigError(std::string("config file '") + path + "': " + e.what());
    }
}

void write_text_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

struct ManifestTimer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    long long elapsed_ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }
};

void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                    const json& resolved_config, std::uint64_t seed, int workers,
                    const std::vector<std::string>& outputs, const ManifestTimer& timer) {
    json manifest;
    manifest["tool"] = "nvlab";
    manifest["version"] = kToolVersion;
    manifest["subcommand"] = subcommand;
    manifest["config"] = resolved_config;
    manifest["seed"] = seed;
    manifest["workers"] = workers;
    manifest["outputs"] = outputs;
    manifest["duration_ms"] = timer.elapsed_ms();
    write_text_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

json fit_to_json(const nvlab::LogFit& fit) {
    return json{{"slope", fit.slope},
                {"intercept", fit.intercept},
                {"r_squared", fit.r_squared},
                {"points", fit.points}};
}

// Resolve seed/workers overrides into the config echo so the manifest alone
// reproduces the run.
json resolved_experiment_config(json config, std::optional<std::uint64_t> seed_override,
                                std::optional<int> workers_override) {
    if (seed_override) config["seed"] = *seed_override;
    if (workers_override) config["workers"] = *workers_override;
    return config;
}

json summarize_run(const nvlab::BuiltExperiment& built, const nvlab::RegretTrace& trace) {
    json summary;
    summary["config"] = json{{"demand", built.config.demand},
                             {"cost", built.config.cost},
                             {"policy", built.config.policy},
                             {"horizon", built.config.horizon},
                             {"replications", built.config.replications},
                             {"record_points", built.plan.record.size()}};
    summary["seed"] = built.config.seed;
    summary["x_star"] = trace.x_star;
    summary["cost_star"] = trace.cost_star;
    const auto& last = trace.points.back();
    summary["final"] = json{{"t", last.t},
                            {"cum_regret", last.cum_regret},
                            {"se_cum", last.se_cum},
                            {"mean_inst_regret", last.mean_inst_regret}};
    try {
        summary["fit"] = fit_to_json(nvlab::fit_log_slope(trace, 100.0));
    } catch (const std::invalid_argument&) {
        summary["fit"] = nullptr;  // fewer than 4 recorded periods past the burn-in
    }
    try {
        summary["gradient_decay"] =
            fit_to_json(nvlab::fit_gsq_decay(trace, 100.0, static_cast<double>(trace.horizon)));
    } catch (const std::invalid_argument&) {
        summary["gradient_decay"] = nullptr;
    }
    const double d_bar = built.demand->upper_support();
    const double B = built.cost->gradient_bound(d_bar);
    const auto k = nvlab::regret_bound_constants(B, built.cost->saa_slack(), built.config.c0, d_bar);
    summary["regret_bound_constants"] = json{{"c0", built.config.c0},
                                             {"B", B},
                                             {"C1", built.cost->saa_slack()},
                                             {"K1", k.k1},
                                             {"K2", k.k2},
                                             {"K3", k.k3},
                                             {"K4", k.k4}};
    return summary;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override, std::optional<int> workers_override) {
    ManifestTimer timer;
    const json raw = load_config(config_path);
    const json resolved = resolved_experiment_config(raw, seed_override, workers_override);
    nvlab::BuiltExperiment built = nvlab::build_experiment(resolved);
    const nvlab::RegretTrace trace = nvlab::run_experiment(built.plan);

    fs::create_directories(out_dir);
    write_text_atomic(fs::path(out_dir) / "trace.csv", nvlab::trace_to_csv(trace));
    write_text_atomic(fs::path(out_dir) / "summary.json",
                      summarize_run(built, trace).dump(2) + "\n");
    write_manifest(out_dir, "simulate", resolved, built.config.seed, built.plan.workers,
                   {"trace.csv", "summary.json"}, timer);
    std::cout << "simulate: T=" << built.config.horizon << " R=" << built.config.replications
              << " -> " << out_dir << "\n";
    return 0;
}

int cmd_scaling(const std::string& config_path, const std::string& out_dir,
                std::optional<std::uint64_t> seed_override, std::optional<int> workers_override) {
    ManifestTimer timer;
    const json raw = load_config(config_path);
    if (!raw.is_object() || !raw.contains("axis") || !raw.contains("values") ||
        !raw.contains("base"))
        throw nvlab::ConfigError("scaling config: need axis, values, base");
    const std::string axis_name = raw.at("axis").get<std::string>();
    nvlab::ScalingAxis axis;
    if (axis_name == "T")
        axis = nvlab::ScalingAxis::horizon;
    else if (axis_name == "alpha")
        axis = nvlab::ScalingAxis::alpha;
    else if (axis_name == "beta")
        axis = nvlab::ScalingAxis::beta;
    else
        throw nvlab::ConfigError("scaling config: axis must be one of T, alpha, beta");
    if (!raw.at("values").is_array() || raw.at("values").empty())
        throw nvlab::ConfigError("scaling config: values must be a nonempty array");
    const double t_min = raw.value("t_min", 100.0);

    fs::create_directories(out_dir);
    std::vector<std::pair<double, nvlab::RegretTrace>> runs;
    std::vector<std::string> outputs;
    json resolved = raw;
    resolved["base"] = resolved_experiment_config(raw.at("base"), seed_override, workers_override);
    for (const auto& v : raw.at("values")) {
        const double value = v.get<double>();
        json cfg = resolved.at("base");
        if (axis == nvlab::ScalingAxis::horizon) {
            cfg["horizon"] = static_cast<long long>(value);
        } else {
            const char* key = axis == nvlab::ScalingAxis::alpha ? "alpha" : "beta";
            if (!cfg.contains("demand") || !cfg.at("demand").is_object() ||
                !cfg.at("demand").contains(key))
                throw nvlab::ConfigError(std::string("scaling config: base.demand has no '") +
                                         key + "' to sweep");
            cfg["demand"][key] = value;
        }
        nvlab::BuiltExperiment built = nvlab::build_experiment(cfg);
        runs.emplace_back(value, nvlab::run_experiment(built.plan));
        std::ostringstream name;
        name << "trace_" << axis_name << "=" << value << ".csv";
        write_text_atomic(fs::path(out_dir) / name.str(), nvlab::trace_to_csv(runs.back().second));
        outputs.push_back(name.str());
    }

    std::vector<std::pair<double, const nvlab::RegretTrace*>> keyed;
    for (const auto& [key, trace] : runs) keyed.emplace_back(key, &trace);
    nvlab::ScalingReport report;
    try {
        report = nvlab::fit_scaling(axis, keyed, t_min);
    } catch (const std::invalid_argument& e) {
        // grid too sparse for the requested fit window
        throw nvlab::ConfigError(std::string("scaling config: ") + e.what());
    }

    json rj;
    rj["axis"] = axis_name;
    rj["t_min"] = report.t_min;
    rj["fits"] = json::array();
    for (const auto& row : report.fits)
        rj["fits"].push_back(json{{"key", row.key}, {"fit", fit_to_json(row.fit)}});
    rj["ratios"] = json::array();
    for (const auto& row : report.ratios)
        rj["ratios"].push_back(json{{"key", row.key},
                                    {"slope_ratio", row.slope_ratio},
                                    {"inverse_key_ratio", row.inverse_key_ratio}});
    write_text_atomic(fs::path(out_dir) / "scaling_report.json", rj.dump(2) + "\n");
    outputs.push_back("scaling_report.json");

    const std::uint64_t seed = resolved.at("base").value("seed", 0ull);
    write_manifest(out_dir, "scaling", resolved, seed,
                   resolved.at("base").value("workers", 0), outputs, timer);
    std::cout << "scaling: axis=" << axis_name << " runs=" << runs.size() << " -> " << out_dir
              << "\n";
    return 0;
}

int cmd_lowerbound(const std::string& config_path, const std::string& out_dir,
                   std::optional<std::uint64_t> seed_override) {
    ManifestTimer timer;
    json cfg = load_config(config_path);
    if (!cfg.is_object()) throw nvlab::ConfigError("lowerbound config: expected an object");
    nvlab::cfg::reject_unknown_keys(cfg, "lowerbound",
                                    {"horizon", "alpha", "rho", "h", "b", "seed", "bayes"});
    const long long horizon = static_cast<long long>(nvlab::cfg::get_number(cfg, "lowerbound", "horizon"));
    const double alpha = nvlab::cfg::get_number(cfg, "lowerbound", "alpha");
    const double rho = nvlab::cfg::get_number(cfg, "lowerbound", "rho");
    const double h = nvlab::cfg::get_number_or(cfg, "lowerbound", "h", 1.0);
    const double b = nvlab::cfg::get_number_or(cfg, "lowerbound", "b", 1.0);
    std::uint64_t seed = static_cast<std::uint64_t>(
        nvlab::cfg::get_number_or(cfg, "lowerbound", "seed", 20240801.0));
    if (seed_override) seed = *seed_override;

    nvlab::VanTreesReport report;
    try {
        report = nvlab::van_trees_bound(horizon, alpha, rho, h, b);
    } catch (const std::invalid_argument& e) {
        throw nvlab::ConfigError(std::string("lowerbound: ") + e.what());
    }

    fs::create_directories(out_dir);
    std::vector<std::string> outputs;

    json rj;
    rj["horizon"] = report.horizon;
    rj["alpha"] = report.alpha;
    rj["rho"] = report.rho;
    rj["h"] = report.h;
    rj["b"] = report.b;
    rj["min_curvature"] = report.min_curvature;
    rj["hprime_sq"] = report.hprime_sq;
    rj["fisher_rate"] = report.fisher_rate;
    rj["prior_info"] = report.prior_info;
    rj["fisher_single"] =
        nvlab::fisher_single(nvlab::hard_instance_breakpoints(alpha, rho, 0.0));
    rj["k6"] = report.k6;
    rj["cumulative"] = report.cumulative;
    rj["k6_log_bound"] = report.k6_log_bound;
    rj["horizon_condition"] = report.horizon_condition;
    rj["exceeds_k6_bound"] = report.exceeds_k6_bound;

    {  // per-period bound table
        std::string csv = "t,per_period_bound\n";
        for (std::size_t i = 0; i < report.per_period.size(); ++i)
            csv += std::to_string(i + 1) + "," + format_double(report.per_period[i]) + "\n";
        write_text_atomic(fs::path(out_dir) / "vantrees_per_period.csv", csv);
        outputs.push_back("vantrees_per_period.csv");
    }

    {  // verification sweep over theta: score mean, Fisher info, bracketing
        std::string csv = "theta,score_mean,fisher_single,cdf_l2,cdf_r2,xstar_error\n";
        const double half = nvlab::hard_instance_theta_bound(alpha);
        for (int i = 0; i < 21; ++i) {
            const double theta = -half + 2.0 * half * i / 20.0;
            const auto p = nvlab::hard_instance_breakpoints(alpha, rho, theta);
            const auto integrand = [&](double x) {
                return nvlab::hard_instance_score(x, p) * nvlab::hard_instance_pdf(x, p);
            };
            const double score_mean = nvlab::adaptive_simpson(integrand, p.l1, p.l2, 1e-10) +
                                      nvlab::adaptive_simpson(integrand, p.r2, p.r1, 1e-10);
            const double xerr = std::abs(nvlab::hard_instance_optimal(p) -
                                         nvlab::hard_instance_quantile(rho, p));
            csv += format_double(theta) + "," + format_double(score_mean) + "," +
                   format_double(nvlab::fisher_single(p)) + "," +
                   format_double(nvlab::hard_instance_cdf(p.l2, p)) + "," +
                   format_double(nvlab::hard_instance_cdf(p.r2, p)) + "," + format_double(xerr) +
                   "\n";
        }
        write_text_atomic(fs::path(out_dir) / "verification_sweep.csv", csv);
        outputs.push_back("verification_sweep.csv");
    }

    if (cfg.contains("bayes")) {
        const auto& bj = cfg.at("bayes");
        nvlab::cfg::require_object(bj, "lowerbound.bayes");
        nvlab::cfg::reject_unknown_keys(bj, "lowerbound.bayes", {"t", "reps"});
        if (!bj.contains("t") || !bj.at("t").is_array() || bj.at("t").empty())
            throw nvlab::ConfigError("lowerbound.bayes.t: expected a nonempty array of sample sizes");
        const int reps = static_cast<int>(nvlab::cfg::get_number_or(bj, "lowerbound.bayes", "reps", 2000.0));
        const nvlab::LinearCost cost(h, b);
        std::string csv = "t,floor,empirical_mse,se\n";
        std::cout << "  t        floor     empirical MSE\n";
        json bayes_rows = json::array();
        for (const auto& tv : bj.at("t")) {
            const long long t = tv.get<long long>();
            nvlab::BayesMseResult res;
            try {
                res = nvlab::bayes_mse_check(
                    [&](std::span<const double> hist) { return nvlab::saa_decide(hist, cost); },
                    t, alpha, rho, reps, seed);
            } catch (const std::invalid_argument& e) {
                throw nvlab::ConfigError(std::string("lowerbound.bayes: ") + e.what());
            }
            csv += std::to_string(t) + "," + format_double(res.floor) + "," +
                   format_double(res.empirical_mse) + "," + format_double(res.se) + "\n";
            std::printf("  %-8lld %-12.6g %-12.6g\n", t, res.floor, res.empirical_mse);
            bayes_rows.push_back(json{{"t", t},
                                      {"floor", res.floor},
                                      {"empirical_mse", res.empirical_mse},
                                      {"se", res.se},
                                      {"reps", res.reps}});
        }
        write_text_atomic(fs::path(out_dir) / "bayes_mse.csv", csv);
        outputs.push_back("bayes_mse.csv");
        rj["bayes"] = bayes_rows;
    }

    write_text_atomic(fs::path(out_dir) / "vantrees_report.json", rj.dump(2) + "\n");
    outputs.push_back("vantrees_report.json");
    write_manifest(out_dir, "lowerbound", cfg, seed, 1, outputs, timer);
    std::cout << "lowerbound: alpha=" << alpha << " rho=" << rho << " -> " << out_dir << "\n";
    return 0;
}

int cmd_verify(const std::string& scope, double perturb_breakpoints, long long ks_samples) {
    nvlab::VerifyOptions opt;
    opt.breakpoint_perturbation = perturb_breakpoints;
    if (ks_samples > 0) opt.ks_samples = ks_samples;

    std::vector<nvlab::CheckResult> results;
    if (scope == "all")
        results = nvlab::verify_all(opt);
    else if (scope == "demand")
        results = nvlab::verify_demand(opt);
    else if (scope == "policy")
        results = nvlab::verify_policy(opt);
    else if (scope == "lowerbound")
        results = nvlab::verify_lowerbound(opt);
    else
        throw nvlab::ConfigError("verify: scope must be one of all, demand, policy, lowerbound");

    int failures = 0;
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        if (!r.pass) ++failures;
    }
    std::cout << results.size() - failures << "/" << results.size() << " checks passed\n";
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"newsvendor policy simulation and lower-bound laboratory"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> workers_override;

    auto add_common = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--config", config_path, "JSON configuration file")
            ->required()
            ->check(CLI::ExistingFile);
        if (needs_out) sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t s) { seed_override = s; },
            "override the config seed");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "run one experiment");
    add_common(simulate, true);
    simulate->add_option_function<int>(
        "--workers", [&](int w) { workers_override = w; }, "worker thread count");

    CLI::App* scaling = app.add_subcommand("scaling", "run a scaling grid and fit slopes");
    add_common(scaling, true);
    scaling->add_option_function<int>(
        "--workers", [&](int w) { workers_override = w; }, "worker thread count");

    CLI::App* lowerbound = app.add_subcommand("lowerbound", "evaluate lower-bound arithmetic");
    add_common(lowerbound, true);

    std::string scope = "all";
    double perturb = 0.0;
    long long ks_samples = 0;
    CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
    verify->add_option("--scope", scope, "all, demand, policy, or lowerbound");
    verify->add_option("--perturb-breakpoints", perturb,
                       "self-test: inject a breakpoint shift that must be caught");
    verify->add_option("--ks-samples", ks_samples, "sample count for the KS check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed())
            return cmd_simulate(config_path, out_dir, seed_override, workers_override);
        if (scaling->parsed())
            return cmd_scaling(config_path, out_dir, seed_override, workers_override);
        if (lowerbound->parsed()) return cmd_lowerbound(config_path, out_dir, seed_override);
        if (verify->parsed()) return cmd_verify(scope, perturb, ks_samples);
    } catch (const nvlab::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
