#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "nvlab/cost.hpp"
#include "nvlab/demand.hpp"
#include "nvlab/experiment.hpp"
#include "nvlab/policy.hpp"

namespace nvlab {

// Configuration errors carry the offending key path so CLI users get a
// message that points at the bad entry. The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace cfg {

using nlohmann::json;

inline void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
}

inline void reject_unknown_keys(const json& j, const std::string& path,
                                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) { ok = true; break; }
        if (!ok) throw ConfigError(path + "." + key + ": unknown key");
    }
}

inline double get_number(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing required number");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return v.get<double>();
}

inline double get_number_or(const json& j, const std::string& path, const char* key,
                            double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return v.get<double>();
}

inline std::string get_string(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing required string");
    const auto& v = j.at(key);
    if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

} // namespace cfg

// ---------------------------------------------------------------------------
// Demand factory: {"kind": "uniform" | "hard_instance" | "local_flat", ...}
// ---------------------------------------------------------------------------

inline std::unique_ptr<DemandModel> make_demand(const nlohmann::json& spec,
                                                const std::string& path = "demand") {
    cfg::require_object(spec, path);
    const std::string kind = cfg::get_string(spec, path, "kind");
    try {
        if (kind == "uniform") {
            cfg::reject_unknown_keys(spec, path, {"kind", "a", "b"});
            const double a = cfg::get_number(spec, path, "a");
            const double b = cfg::get_number(spec, path, "b");
            if (!(b - a >= 1e-9))
                throw ConfigError(path + ": support width must be at least 1e-9");
            return std::make_unique<UniformDemand>(a, b);
        }
        if (kind == "hard_instance") {
            cfg::reject_unknown_keys(spec, path, {"kind", "alpha", "rho", "theta"});
            return std::make_unique<HardInstanceDemand>(
                cfg::get_number(spec, path, "alpha"), cfg::get_number(spec, path, "rho"),
                cfg::get_number_or(spec, path, "theta", 0.0));
        }
        if (kind == "local_flat") {
            cfg::reject_unknown_keys(spec, path, {"kind", "alpha", "beta", "rho", "outer_density"});
            return std::make_unique<LocalFlatDemand>(
                cfg::get_number(spec, path, "alpha"), cfg::get_number(spec, path, "beta"),
                cfg::get_number(spec, path, "rho"),
                cfg::get_number_or(spec, path, "outer_density", 0.0));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    throw ConfigError(path + ".kind: unknown demand kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Cost factory: {"kind": "linear" | "piecewise" | "quadratic_production", ...}
// ---------------------------------------------------------------------------

namespace cfg {

inline PiecewiseLinearFn parse_piecewise_fn(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty())
        throw ConfigError(path + ": expected a nonempty array of [breakpoint, slope] pairs");
    PiecewiseLinearFn fn;
    for (const auto& seg : j) {
        if (!seg.is_array() || seg.size() != 2 || !seg[0].is_number() || !seg[1].is_number())
            throw ConfigError(path + ": each segment must be a [breakpoint, slope] number pair");
        fn.start.push_back(seg[0].get<double>());
        fn.slope.push_back(seg[1].get<double>());
    }
    return fn;
}

} // namespace cfg

inline std::unique_ptr<CostModel> make_cost(const nlohmann::json& spec,
                                            const std::string& path = "cost") {
    cfg::require_object(spec, path);
    const std::string kind = cfg::get_string(spec, path, "kind");
    try {
        if (kind == "linear") {
            cfg::reject_unknown_keys(spec, path, {"kind", "h", "b"});
            return std::make_unique<LinearCost>(cfg::get_number(spec, path, "h"),
                                                cfg::get_number(spec, path, "b"));
        }
        if (kind == "piecewise") {
            cfg::reject_unknown_keys(spec, path, {"kind", "overage", "underage"});
            if (!spec.contains("overage") || !spec.contains("underage"))
                throw ConfigError(path + ": piecewise cost needs overage and underage segment lists");
            return std::make_unique<ConvexPiecewiseCost>(
                cfg::parse_piecewise_fn(spec.at("overage"), path + ".overage"),
                cfg::parse_piecewise_fn(spec.at("underage"), path + ".underage"));
        }
        if (kind == "quadratic_production") {
            cfg::reject_unknown_keys(spec, path, {"kind", "kappa", "p"});
            return std::make_unique<QuadraticProductionCost>(cfg::get_number(spec, path, "kappa"),
                                                             cfg::get_number(spec, path, "p"));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    throw ConfigError(path + ".kind: unknown cost kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Policy factory: {"kind": "saa" | "sgd" | "mle_uniform" | "clairvoyant", ...}
// ---------------------------------------------------------------------------

inline std::function<std::unique_ptr<Policy>()> make_policy_factory(const nlohmann::json& spec,
                                                                    const CostModel& cost,
                                                                    const DemandModel& demand,
                                                                    const std::string& path = "policy") {
    cfg::require_object(spec, path);
    const std::string kind = cfg::get_string(spec, path, "kind");
    if (kind == "saa") {
        cfg::reject_unknown_keys(spec, path, {"kind"});
        return [&cost] { return std::make_unique<SaaPolicy>(cost); };
    }
    if (kind == "sgd") {
        cfg::reject_unknown_keys(spec, path, {"kind", "strong_convexity", "d_bar"});
        const double sc = cfg::get_number(spec, path, "strong_convexity");
        const double d_bar = cfg::get_number_or(spec, path, "d_bar", demand.upper_support());
        if (!(sc > 0.0))
            throw ConfigError(path + ".strong_convexity: must be positive");
        if (!(d_bar > 0.0)) throw ConfigError(path + ".d_bar: must be positive");
        return [&cost, sc, d_bar] { return std::make_unique<SgdPolicy>(cost, sc, d_bar); };
    }
    if (kind == "mle_uniform") {
        cfg::reject_unknown_keys(spec, path, {"kind", "rho"});
        double rho;
        if (spec.contains("rho")) {
            rho = cfg::get_number(spec, path, "rho");
        } else if (const auto* lin = dynamic_cast<const LinearCost*>(&cost)) {
            rho = lin->critical_fractile();
        } else {
            throw ConfigError(path + ": mle_uniform needs rho unless the cost is linear");
        }
        if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError(path + ".rho: must lie in [0, 1]");
        return [rho] { return std::make_unique<MleUniformPolicy>(rho); };
    }
    if (kind == "clairvoyant") {
        cfg::reject_unknown_keys(spec, path, {"kind", "x"});
        const double x = cfg::get_number(spec, path, "x");
        return [x] { return std::make_unique<ClairvoyantPolicy>(x); };
    }
    throw ConfigError(path + ".kind: unknown policy kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Experiment configuration record
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    nlohmann::json demand;
    nlohmann::json cost;
    nlohmann::json policy;
    long long horizon = 0;
    int replications = 0;
    std::uint64_t seed = 0;
    nlohmann::json record;  // grid spec, may be null
    std::optional<GoodEventSpec> good_event;
    int workers = 0;
    double c0 = 1.0;  // concentration constant knob for reported K1..K4
};

inline std::vector<long long> build_record_grid(const nlohmann::json& record, long long horizon,
                                                int replications,
                                                const std::string& path = "record") {
    // the engine keeps per-replication samples at every recorded period
    const auto check_density = [&](const std::vector<long long>& grid) {
        if (static_cast<long long>(grid.size()) * replications > 2'000'000)
            throw ConfigError(path +
                              ": recording grid too dense, points x replications must stay "
                              "below 2e6");
        return grid;
    };
    if (record.is_null()) return check_density(log_record_grid(horizon));
    cfg::require_object(record, path);
    const std::string kind = cfg::get_string(record, path, "kind");
    if (kind == "log") {
        cfg::reject_unknown_keys(record, path, {"kind", "factor", "include"});
        const double factor = cfg::get_number_or(record, path, "factor", 1.25);
        if (!(factor > 1.0)) throw ConfigError(path + ".factor: must exceed 1");
        std::vector<long long> include;
        if (record.contains("include")) {
            if (!record.at("include").is_array())
                throw ConfigError(path + ".include: expected an array of periods");
            for (const auto& v : record.at("include")) include.push_back(v.get<long long>());
        }
        return check_density(log_record_grid(horizon, factor, include));
    }
    if (kind == "list") {
        cfg::reject_unknown_keys(record, path, {"kind", "points"});
        if (!record.contains("points") || !record.at("points").is_array() ||
            record.at("points").empty())
            throw ConfigError(path + ".points: expected a nonempty array of periods");
        std::vector<long long> pts;
        for (const auto& v : record.at("points")) pts.push_back(v.get<long long>());
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        if (pts.front() < 1 || pts.back() > horizon)
            throw ConfigError(path + ".points: periods must lie in [1, horizon]");
        return check_density(pts);
    }
    if (kind == "all") {
        cfg::reject_unknown_keys(record, path, {"kind"});
        std::vector<long long> pts(static_cast<std::size_t>(horizon));
        for (long long t = 1; t <= horizon; ++t) pts[static_cast<std::size_t>(t - 1)] = t;
        return check_density(pts);
    }
    throw ConfigError(path + ".kind: unknown record grid kind '" + kind + "'");
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                                const std::string& path = "config") {
    cfg::require_object(j, path);
    cfg::reject_unknown_keys(j, path,
                             {"demand", "cost", "policy", "horizon", "replications", "seed",
                              "record", "good_event", "workers", "c0"});
    for (const char* key : {"demand", "cost", "policy"})
        if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing required section");
    ExperimentConfig cfg_out;
    cfg_out.demand = j.at("demand");
    cfg_out.cost = j.at("cost");
    cfg_out.policy = j.at("policy");
    const double horizon = cfg::get_number(j, path, "horizon");
    const double reps = cfg::get_number(j, path, "replications");
    if (!(horizon >= 1.0)) throw ConfigError(path + ".horizon: must be >= 1");
    if (!(reps >= 1.0)) throw ConfigError(path + ".replications: must be >= 1");
    cfg_out.horizon = static_cast<long long>(horizon);
    cfg_out.replications = static_cast<int>(reps);
    if (!j.contains("seed") || !j.at("seed").is_number())
        throw ConfigError(path + ".seed: missing required integer");
    cfg_out.seed = j.at("seed").get<std::uint64_t>();
    cfg_out.record = j.contains("record") ? j.at("record") : nlohmann::json();
    if (j.contains("good_event")) {
        const auto& ge = j.at("good_event");
        cfg::require_object(ge, path + ".good_event");
        cfg::reject_unknown_keys(ge, path + ".good_event", {"alpha", "beta"});
        GoodEventSpec spec;
        spec.alpha = cfg::get_number(ge, path + ".good_event", "alpha");
        spec.beta = cfg::get_number(ge, path + ".good_event", "beta");
        if (!(spec.alpha > 0.0) || !(spec.beta > 0.0))
            throw ConfigError(path + ".good_event: alpha and beta must be positive");
        cfg_out.good_event = spec;
    }
    cfg_out.workers = static_cast<int>(cfg::get_number_or(j, path, "workers", 0.0));
    if (cfg_out.workers < 0) throw ConfigError(path + ".workers: must be nonnegative");
    cfg_out.c0 = cfg::get_number_or(j, path, "c0", 1.0);
    if (!(cfg_out.c0 > 0.0)) throw ConfigError(path + ".c0: must be positive");
    return cfg_out;
}

// Owning bundle of everything run_experiment needs, built from one config.
struct BuiltExperiment {
    ExperimentConfig config;
    std::unique_ptr<DemandModel> demand;
    std::unique_ptr<CostModel> cost;
    RunPlan plan;
};

inline BuiltExperiment build_experiment(const nlohmann::json& j) {
    BuiltExperiment built;
    built.config = parse_experiment_config(j);
    built.demand = make_demand(built.config.demand);
    built.cost = make_cost(built.config.cost);
    built.plan.demand = built.demand.get();
    built.plan.cost = built.cost.get();
    built.plan.make_policy =
        make_policy_factory(built.config.policy, *built.cost, *built.demand);
    built.plan.horizon = built.config.horizon;
    built.plan.replications = built.config.replications;
    built.plan.seed = built.config.seed;
    built.plan.record =
        build_record_grid(built.config.record, built.config.horizon, built.config.replications);
    built.plan.good_event = built.config.good_event;
    built.plan.workers = built.config.workers;
    return built;
}

} // namespace nvlab
