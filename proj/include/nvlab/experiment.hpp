#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nvlab/cost.hpp"
#include "nvlab/demand.hpp"
#include "nvlab/policy.hpp"
#include "nvlab/rng.hpp"

namespace nvlab {

// ---------------------------------------------------------------------------
// Monte Carlo regret engine
// ---------------------------------------------------------------------------

struct GoodEventSpec {
    double alpha = 0.0;
    double beta = 0.0;
};

// A fully resolved run: models, a factory producing a fresh policy per
// replication, horizon/replications/seed, and the recording grid.
// Replication r draws from the counter-based stream (seed, r), so results
// are independent of the worker count and of the total replication count.
struct RunPlan {
    const DemandModel* demand = nullptr;
    const CostModel* cost = nullptr;
    std::function<std::unique_ptr<Policy>()> make_policy;
    long long horizon = 0;
    int replications = 0;
    std::uint64_t seed = 0;
    std::vector<long long> record;  // ascending periods in [1, horizon]
    std::optional<GoodEventSpec> good_event;
    int workers = 0;                // 0 = hardware concurrency
};

struct TracePoint {
    long long t = 0;
    double mean_inst_regret = 0.0;
    double se_inst = 0.0;
    double cum_regret = 0.0;
    double se_cum = 0.0;
    double good_event_freq = std::numeric_limits<double>::quiet_NaN();
    double mean_g_sq = 0.0;
};

struct RegretTrace {
    std::vector<TracePoint> points;
    // Per-replication samples at the recorded periods, indexed [rep][point].
    std::vector<std::vector<double>> inst_rep;
    std::vector<std::vector<double>> cum_rep;
    std::vector<std::vector<double>> g_abs_rep;
    long long horizon = 0;
    int replications = 0;
    std::uint64_t seed = 0;
    double x_star = 0.0;
    double cost_star = 0.0;

    const TracePoint& at_t(long long t) const {
        for (const auto& pt : points)
            if (pt.t == t) return pt;
        throw std::invalid_argument("RegretTrace: period " + std::to_string(t) + " not recorded");
    }
};

// Default recording grid: rounded powers of `factor` up to T, T itself, and
// any explicitly requested periods.
inline std::vector<long long> log_record_grid(long long horizon, double factor = 1.25,
                                              std::span<const long long> include = {}) {
    if (horizon < 1) throw std::invalid_argument("log_record_grid: horizon must be >= 1");
    if (!(factor > 1.0)) throw std::invalid_argument("log_record_grid: factor must exceed 1");
    std::vector<long long> grid;
    for (long long t = 1; t < horizon;
         t = std::max(t + 1, std::llround(static_cast<double>(t) * factor)))
        grid.push_back(t);
    grid.push_back(horizon);
    for (long long t : include)
        if (t >= 1 && t <= horizon) grid.push_back(t);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

namespace detail {

inline void validate_plan(const RunPlan& plan) {
    if (plan.demand == nullptr || plan.cost == nullptr || !plan.make_policy)
        throw std::invalid_argument("run_experiment: demand, cost, and policy are required");
    if (plan.horizon < 1) throw std::invalid_argument("run_experiment: horizon must be >= 1");
    if (plan.replications < 1)
        throw std::invalid_argument("run_experiment: replications must be >= 1");
    if (plan.record.empty()) throw std::invalid_argument("run_experiment: empty recording grid");
    long long prev = 0;
    for (long long t : plan.record) {
        if (t <= prev || t > plan.horizon)
            throw std::invalid_argument("run_experiment: recording grid must be ascending in [1, horizon]");
        prev = t;
    }
    if (plan.good_event && (!(plan.good_event->alpha > 0.0) || !(plan.good_event->beta > 0.0)))
        throw std::invalid_argument("run_experiment: good-event alpha and beta must be positive");
}

} // namespace detail

// Runs R independent replications of T periods each. Every period the
// policy sees the new sample and commits a decision x_t; instantaneous
// regret uses the analytic expected cost C(x_t) - C(x*), never realized
// costs, so the only noise is in the decisions themselves. Replications
// run in parallel; aggregation is a fixed-order reduction over the
// replication index, so the worker count never changes the output.
inline RegretTrace run_experiment(const RunPlan& plan) {
    detail::validate_plan(plan);
    const DemandModel& demand = *plan.demand;
    const CostModel& cost = *plan.cost;
    const double x_star = optimal_quantity(cost, demand);
    const double c_star = cost.expected_cost(x_star, demand);

    const std::size_t n_rec = plan.record.size();
    const int reps = plan.replications;
    RegretTrace trace;
    trace.horizon = plan.horizon;
    trace.replications = reps;
    trace.seed = plan.seed;
    trace.x_star = x_star;
    trace.cost_star = c_star;
    trace.inst_rep.assign(reps, std::vector<double>(n_rec, 0.0));
    trace.cum_rep.assign(reps, std::vector<double>(n_rec, 0.0));
    trace.g_abs_rep.assign(reps, std::vector<double>(n_rec, 0.0));

    const auto run_range = [&](int r_begin, int r_end) {
        for (int r = r_begin; r < r_end; ++r) {
            Philox4x32 rng(plan.seed, static_cast<std::uint64_t>(r));
            auto policy = plan.make_policy();
            double cum = 0.0;
            std::size_t j = 0;
            for (long long t = 1; t <= plan.horizon; ++t) {
                const double d = demand.sample(rng);
                policy->observe(d);
                const double x = policy->decide();
                const double inst = cost.expected_cost(x, demand) - c_star;
                cum += inst;
                if (j < n_rec && t == plan.record[j]) {
                    trace.inst_rep[r][j] = inst;
                    trace.cum_rep[r][j] = cum;
                    trace.g_abs_rep[r][j] = std::abs(cost.expected_gradient(x, demand));
                    ++j;
                }
            }
        }
    };

    int workers = plan.workers > 0
                      ? plan.workers
                      : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, reps);
    if (workers <= 1) {
        run_range(0, reps);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const int chunk = (reps + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int lo = w * chunk;
            const int hi = std::min(reps, lo + chunk);
            if (lo < hi) pool.emplace_back(run_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    trace.points.resize(n_rec);
    const double n = static_cast<double>(reps);
    for (std::size_t j = 0; j < n_rec; ++j) {
        TracePoint& pt = trace.points[j];
        pt.t = plan.record[j];
        double sum_inst = 0.0, sum_cum = 0.0, sum_gsq = 0.0;
        long long good = 0;
        for (int r = 0; r < reps; ++r) {
            sum_inst += trace.inst_rep[r][j];
            sum_cum += trace.cum_rep[r][j];
            const double g = trace.g_abs_rep[r][j];
            sum_gsq += g * g;
            if (plan.good_event && g <= plan.good_event->alpha * plan.good_event->beta) ++good;
        }
        pt.mean_inst_regret = sum_inst / n;
        pt.cum_regret = sum_cum / n;
        pt.mean_g_sq = sum_gsq / n;
        if (plan.good_event) pt.good_event_freq = static_cast<double>(good) / n;
        if (reps > 1) {
            double ss_inst = 0.0, ss_cum = 0.0;
            for (int r = 0; r < reps; ++r) {
                const double di = trace.inst_rep[r][j] - pt.mean_inst_regret;
                const double dc = trace.cum_rep[r][j] - pt.cum_regret;
                ss_inst += di * di;
                ss_cum += dc * dc;
            }
            pt.se_inst = std::sqrt(ss_inst / (n - 1.0) / n);
            pt.se_cum = std::sqrt(ss_cum / (n - 1.0) / n);
        }
    }
    return trace;
}

// CSV rendering with a fixed format so identical runs are byte-identical.
inline std::string trace_to_csv(const RegretTrace& trace) {
    std::string out = "t,mean_inst_regret,se,cum_regret,good_event_freq,mean_g_sq\n";
    char line[256];
    for (const auto& pt : trace.points) {
        std::snprintf(line, sizeof(line), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n", pt.t,
                      pt.mean_inst_regret, pt.se_inst, pt.cum_regret, pt.good_event_freq,
                      pt.mean_g_sq);
        out += line;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scaling-law fits
// ---------------------------------------------------------------------------

struct LogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int points = 0;
};

namespace detail {

inline LogFit ols(std::span<const double> z, std::span<const double> y) {
    const int n = static_cast<int>(z.size());
    if (n < 4)
        throw std::invalid_argument(
            "fit: insufficient grid, need at least 4 points (got " + std::to_string(n) + ")");
    double zm = 0.0, ym = 0.0;
    for (int i = 0; i < n; ++i) {
        zm += z[i];
        ym += y[i];
    }
    zm /= n;
    ym /= n;
    double szz = 0.0, szy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        szz += (z[i] - zm) * (z[i] - zm);
        szy += (z[i] - zm) * (y[i] - ym);
        syy += (y[i] - ym) * (y[i] - ym);
    }
    if (szz == 0.0) throw std::invalid_argument("fit: degenerate abscissa grid");
    LogFit fit;
    fit.points = n;
    fit.slope = szy / szz;
    fit.intercept = ym - fit.slope * zm;
    const double ss_res = syy - fit.slope * szy;
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : (std::abs(ss_res) < 1e-30 ? 1.0 : 0.0);
    return fit;
}

} // namespace detail

// OLS of cumulative regret on ln t over recorded periods with t >= t_min.
inline LogFit fit_log_slope(const RegretTrace& trace, double t_min = 100.0) {
    std::vector<double> z, y;
    for (const auto& pt : trace.points) {
        if (static_cast<double>(pt.t) < t_min) continue;
        z.push_back(std::log(static_cast<double>(pt.t)));
        y.push_back(pt.cum_regret);
    }
    return detail::ols(z, y);
}

// OLS of log E|g(x_t)|^2 on log t over recorded periods in [t_min, t_max].
inline LogFit fit_gsq_decay(const RegretTrace& trace, double t_min, double t_max) {
    std::vector<double> z, y;
    for (const auto& pt : trace.points) {
        const double t = static_cast<double>(pt.t);
        if (t < t_min || t > t_max || !(pt.mean_g_sq > 0.0)) continue;
        z.push_back(std::log(t));
        y.push_back(std::log(pt.mean_g_sq));
    }
    return detail::ols(z, y);
}

enum class ScalingAxis { horizon, alpha, beta };

inline const char* to_string(ScalingAxis axis) {
    switch (axis) {
        case ScalingAxis::horizon: return "T";
        case ScalingAxis::alpha: return "alpha";
        default: return "beta";
    }
}

struct AxisFitRow {
    double key = 0.0;
    LogFit fit;
};

// Fitted-slope ratio of `key` against the largest key, next to the matching
// inverse-key ratio; for the alpha axis a 1/alpha law makes both equal.
struct SlopeRatioRow {
    double key = 0.0;
    double slope_ratio = 0.0;
    double inverse_key_ratio = 0.0;
};

struct ScalingReport {
    ScalingAxis axis = ScalingAxis::horizon;
    double t_min = 100.0;
    std::vector<AxisFitRow> fits;
    std::vector<SlopeRatioRow> ratios;  // empty on the horizon axis
};

inline ScalingReport fit_scaling(ScalingAxis axis,
                                 std::span<const std::pair<double, const RegretTrace*>> traces,
                                 double t_min = 100.0) {
    if (traces.empty()) throw std::invalid_argument("fit_scaling: no traces");
    ScalingReport report;
    report.axis = axis;
    report.t_min = t_min;
    for (const auto& [key, trace] : traces)
        report.fits.push_back({key, fit_log_slope(*trace, t_min)});
    if (axis != ScalingAxis::horizon) {
        if (report.fits.size() < 2)
            throw std::invalid_argument("fit_scaling: insufficient grid, need at least 2 traces "
                                        "on the alpha/beta axis");
        const auto base = std::max_element(
            report.fits.begin(), report.fits.end(),
            [](const AxisFitRow& a, const AxisFitRow& b) { return a.key < b.key; });
        for (const auto& row : report.fits)
            report.ratios.push_back(
                {row.key, row.fit.slope / base->fit.slope, base->key / row.key});
    }
    return report;
}

// ---------------------------------------------------------------------------
// Gradient concentration report
// ---------------------------------------------------------------------------

struct ConcentrationRow {
    long long t = 0;
    double lambda = 0.0;
    double empirical_tail = 0.0;  // P-hat[|g(x_t)| >= lambda + (4 C0 B + C1)/sqrt(t)]
    double bound = 0.0;           // exp(-t lambda^2 / (2 B^2))
};

struct ConcentrationReport {
    double offset_coeff = 0.0;  // 4 C0 B + C1
    std::vector<ConcentrationRow> rows;
    LogFit gsq_decay;
};

inline ConcentrationReport concentration_report(const RegretTrace& trace, double B, double C1,
                                                double C0, std::span<const double> lambdas,
                                                double t_min = 100.0,
                                                double t_max = std::numeric_limits<double>::max()) {
    if (!(B > 0.0)) throw std::invalid_argument("concentration_report: B must be positive");
    if (trace.g_abs_rep.empty())
        throw std::invalid_argument("concentration_report: trace has no gradient samples");
    ConcentrationReport report;
    report.offset_coeff = 4.0 * C0 * B + C1;
    const int reps = trace.replications;
    for (std::size_t j = 0; j < trace.points.size(); ++j) {
        const double t = static_cast<double>(trace.points[j].t);
        if (t < t_min || t > t_max) continue;
        const double offset = report.offset_coeff / std::sqrt(t);
        for (double lambda : lambdas) {
            int exceed = 0;
            for (int r = 0; r < reps; ++r)
                if (trace.g_abs_rep[r][j] >= lambda + offset) ++exceed;
            report.rows.push_back({trace.points[j].t, lambda,
                                   static_cast<double>(exceed) / static_cast<double>(reps),
                                   std::exp(-t * lambda * lambda / (2.0 * B * B))});
        }
    }
    try {
        report.gsq_decay = fit_gsq_decay(trace, t_min, t_max);
    } catch (const std::invalid_argument&) {
        // degenerate gradient stream (e.g. identically zero); leave points = 0
    }
    return report;
}

// ---------------------------------------------------------------------------
// Regret-bound constants K1..K4 for a user-supplied concentration constant C0
// ---------------------------------------------------------------------------
//
// K4 = (4 C0 B + C1)^2 + 2 B^2 + sqrt(2 pi) B (4 C0 B + C1)
// K3 = 2 K4
// K1 = 2 d_bar sqrt(K4)
// K2 = 8 sqrt(2) d_bar sqrt(K4) (4 C0 B + C1) + 8 d_bar sqrt(K4) / (4 C0 B + C1)
//
// C0 is non-constructive; these values are reported, never asserted tight.

struct RegretBoundConstants {
    double k1 = 0.0, k2 = 0.0, k3 = 0.0, k4 = 0.0;
};

inline RegretBoundConstants regret_bound_constants(double B, double C1, double C0, double d_bar) {
    const double a = 4.0 * C0 * B + C1;
    RegretBoundConstants k;
    k.k4 = a * a + 2.0 * B * B + std::sqrt(2.0 * std::numbers::pi) * B * a;
    k.k3 = 2.0 * k.k4;
    const double root = std::sqrt(k.k4);
    k.k1 = 2.0 * d_bar * root;
    k.k2 = a > 0.0 ? 8.0 * std::sqrt(2.0) * d_bar * root * a + 8.0 * d_bar * root / a
                   : std::numeric_limits<double>::infinity();
    return k;
}

} // namespace nvlab
