#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <vector>

#include "nvlab/experiment.hpp"

using namespace nvlab;

namespace {

RunPlan base_plan(const DemandModel& demand, const CostModel& cost, long long T, int R,
                  std::uint64_t seed) {
    RunPlan plan;
    plan.demand = &demand;
    plan.cost = &cost;
    plan.make_policy = [&cost] { return std::make_unique<SaaPolicy>(cost); };
    plan.horizon = T;
    plan.replications = R;
    plan.seed = seed;
    plan.record = log_record_grid(T);
    return plan;
}

// Synthetic trace with a prescribed cumulative-regret curve.
RegretTrace synthetic_trace(const std::vector<long long>& grid,
                            const std::function<double(double)>& cum_curve) {
    RegretTrace trace;
    trace.horizon = grid.back();
    trace.replications = 1;
    for (long long t : grid) {
        TracePoint pt;
        pt.t = t;
        pt.cum_regret = cum_curve(static_cast<double>(t));
        trace.points.push_back(pt);
    }
    return trace;
}

} // namespace

TEST_CASE("log record grid is ascending, unique, and anchored") {
    const auto grid = log_record_grid(1000);
    REQUIRE(grid.front() == 1);
    REQUIRE(grid.back() == 1000);
    for (std::size_t i = 1; i < grid.size(); ++i) REQUIRE(grid[i] > grid[i - 1]);
    const long long extra[] = {100, 500};
    const auto with_extra = log_record_grid(1000, 1.25, extra);
    REQUIRE(std::find(with_extra.begin(), with_extra.end(), 100) != with_extra.end());
    REQUIRE(std::find(with_extra.begin(), with_extra.end(), 500) != with_extra.end());
    REQUIRE_THROWS_AS(log_record_grid(0), std::invalid_argument);
    REQUIRE_THROWS_AS(log_record_grid(10, 1.0), std::invalid_argument);
}

TEST_CASE("clairvoyant policy earns zero regret") {
    const UniformDemand demand(0.0, 1.0);
    const LinearCost cost(1.0, 1.0);
    RunPlan plan = base_plan(demand, cost, 200, 5, 99);
    plan.make_policy = [] { return std::make_unique<ClairvoyantPolicy>(0.5); };
    const RegretTrace trace = run_experiment(plan);
    for (const auto& pt : trace.points) {
        REQUIRE(std::abs(pt.mean_inst_regret) < 1e-14);
        REQUIRE(std::abs(pt.cum_regret) < 1e-12);
    }
}

TEST_CASE("single-period saa regret on uniform demand matches the closed form") {
    // With h=b=1 and D ~ U(0,1): C(x) - C(1/2) = (x - 1/2)^2, and the t=1
    // SAA decision is d_1, so E[regret] = E[(d_1 - 1/2)^2] = 1/12.
    const UniformDemand demand(0.0, 1.0);
    const LinearCost cost(1.0, 1.0);
    RunPlan plan = base_plan(demand, cost, 1, 20000, 4242);
    const RegretTrace trace = run_experiment(plan);
    const auto& pt = trace.points.front();
    REQUIRE(pt.mean_inst_regret ==
            Catch::Approx(1.0 / 12.0).margin(3.0 * pt.se_inst + 1e-12));
}

TEST_CASE("near-point-mass demand keeps per-period regret below (h+b) width") {
    const double eps = 1e-4;
    const UniformDemand demand(0.5, 0.5 + eps);
    const LinearCost cost(1.0, 1.0);
    const RegretTrace trace = run_experiment(base_plan(demand, cost, 50, 10, 7));
    for (const auto& pt : trace.points) REQUIRE(pt.mean_inst_regret <= (1.0 + 1.0) * eps);
}

TEST_CASE("identical plans produce byte-identical traces") {
    const HardInstanceDemand demand(0.2, 0.5, 0.0);
    const LinearCost cost(1.0, 1.0);
    RunPlan plan = base_plan(demand, cost, 400, 16, 31337);
    plan.good_event = GoodEventSpec{0.4, 0.1};
    plan.workers = 2;
    const std::string csv_a = trace_to_csv(run_experiment(plan));
    const std::string csv_b = trace_to_csv(run_experiment(plan));
    REQUIRE(csv_a == csv_b);
}

TEST_CASE("worker count never changes the result") {
    const UniformDemand demand(0.0, 1.0);
    const LinearCost cost(1.0, 2.0);
    RunPlan plan = base_plan(demand, cost, 300, 9, 5);
    plan.workers = 1;
    const std::string serial = trace_to_csv(run_experiment(plan));
    plan.workers = 4;
    const std::string parallel = trace_to_csv(run_experiment(plan));
    REQUIRE(serial == parallel);
}

TEST_CASE("replication streams depend only on (seed, index)") {
    const UniformDemand demand(0.0, 1.0);
    const LinearCost cost(1.0, 1.0);
    RunPlan small = base_plan(demand, cost, 100, 3, 123);
    RunPlan large = base_plan(demand, cost, 100, 7, 123);
    const RegretTrace a = run_experiment(small);
    const RegretTrace b = run_experiment(large);
    for (int r = 0; r < 3; ++r)
        for (std::size_t j = 0; j < a.points.size(); ++j)
            REQUIRE(a.cum_rep[r][j] == b.cum_rep[r][j]);
}

TEST_CASE("cumulative saa regret is nonnegative and nondecreasing") {
    const LocalFlatDemand demand(0.4, 0.1, 0.6);
    const LinearCost cost(1.0, 1.5);
    const RegretTrace trace = run_experiment(base_plan(demand, cost, 2000, 40, 88));
    double prev = 0.0;
    for (const auto& pt : trace.points) {
        REQUIRE(pt.cum_regret >= prev - 1e-12);
        REQUIRE(pt.mean_inst_regret >= -1e-12);
        prev = pt.cum_regret;
    }
}

TEST_CASE("good-event frequency rises toward one") {
    const LocalFlatDemand demand(0.4, 0.1, 0.5);
    const LinearCost cost(1.0, 1.0);
    RunPlan plan = base_plan(demand, cost, 3000, 200, 2024);
    // C'' = (h+b) f, so the strong-convexity pair for the good event is
    // ((h+b) alpha, beta).
    plan.good_event = GoodEventSpec{2.0 * demand.alpha(), demand.beta()};
    const RegretTrace trace = run_experiment(plan);
    const auto& first = trace.points.front();
    const auto& last = trace.points.back();
    REQUIRE(last.good_event_freq >= 0.995);
    REQUIRE(last.good_event_freq >= first.good_event_freq);
}

TEST_CASE("experiment validates its plan") {
    const UniformDemand demand(0.0, 1.0);
    const LinearCost cost(1.0, 1.0);
    RunPlan plan = base_plan(demand, cost, 10, 2, 1);
    plan.horizon = 0;
    REQUIRE_THROWS_AS(run_experiment(plan), std::invalid_argument);
    plan = base_plan(demand, cost, 10, 0, 1);
    REQUIRE_THROWS_AS(run_experiment(plan), std::invalid_argument);
    plan = base_plan(demand, cost, 10, 2, 1);
    plan.record = {5, 20};
    REQUIRE_THROWS_AS(run_experiment(plan), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Scaling fits
// ---------------------------------------------------------------------------

TEST_CASE("log fit recovers an exact synthetic curve") {
    const auto grid = log_record_grid(10000);
    const RegretTrace trace =
        synthetic_trace(grid, [](double t) { return 7.0 * std::log(t) + 3.0; });
    const LogFit fit = fit_log_slope(trace, 100.0);
    REQUIRE(fit.slope == Catch::Approx(7.0).margin(1e-9));
    REQUIRE(fit.intercept == Catch::Approx(3.0).margin(1e-8));
    REQUIRE(fit.r_squared == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("log fit demands at least four points past the burn-in") {
    const std::vector<long long> grid{1, 50, 120, 180, 260};  // only 3 points >= 100
    const RegretTrace trace = synthetic_trace(grid, [](double t) { return std::log(t); });
    REQUIRE_THROWS_AS(fit_log_slope(trace, 100.0), std::invalid_argument);
}

TEST_CASE("scaling report ratios match a synthetic 1/alpha law") {
    const auto grid = log_record_grid(10000);
    const RegretTrace t1 =
        synthetic_trace(grid, [](double t) { return 10.0 * std::log(t) + 1.0; });
    const RegretTrace t2 =
        synthetic_trace(grid, [](double t) { return 5.0 * std::log(t) + 2.0; });
    const RegretTrace t3 =
        synthetic_trace(grid, [](double t) { return 2.5 * std::log(t) + 0.5; });
    const std::vector<std::pair<double, const RegretTrace*>> keyed{
        {0.1, &t1}, {0.2, &t2}, {0.4, &t3}};
    const ScalingReport report = fit_scaling(ScalingAxis::alpha, keyed, 100.0);
    REQUIRE(report.ratios.size() == 3);
    for (const auto& row : report.ratios)
        REQUIRE(row.slope_ratio == Catch::Approx(row.inverse_key_ratio).margin(1e-6));
}

TEST_CASE("scaling on the alpha axis needs at least two traces") {
    const auto grid = log_record_grid(1000);
    const RegretTrace t1 = synthetic_trace(grid, [](double t) { return std::log(t); });
    const std::vector<std::pair<double, const RegretTrace*>> keyed{{0.1, &t1}};
    REQUIRE_THROWS_AS(fit_scaling(ScalingAxis::alpha, keyed, 100.0), std::invalid_argument);
    REQUIRE_NOTHROW(fit_scaling(ScalingAxis::horizon, keyed, 100.0));
}

// ---------------------------------------------------------------------------
// Concentration report
// ---------------------------------------------------------------------------

TEST_CASE("concentration tail is zero for a zero-gradient stream") {
    RegretTrace trace;
    trace.replications = 50;
    trace.horizon = 1000;
    for (long long t : {100LL, 400LL, 1000LL}) {
        TracePoint pt;
        pt.t = t;
        trace.points.push_back(pt);
    }
    trace.g_abs_rep.assign(50, std::vector<double>(3, 0.0));
    const double lambdas[] = {0.05, 0.1, 0.5};
    const ConcentrationReport rep = concentration_report(trace, 1.0, 2.0, 1.0, lambdas, 0.0);
    REQUIRE(!rep.rows.empty());
    for (const auto& row : rep.rows) {
        REQUIRE(row.empirical_tail == 0.0);
        REQUIRE(row.bound > 0.0);
        REQUIRE(row.bound <= 1.0);
    }
}

TEST_CASE("gradient decay slope is near -1 for saa on uniform demand") {
    // Small-scale preview of the full acceptance check: E|g(x_t)|^2 ~ 1/t.
    const UniformDemand demand(0.0, 1.0);
    const LinearCost cost(1.0, 1.0);
    RunPlan plan = base_plan(demand, cost, 2000, 400, 909);
    const RegretTrace trace = run_experiment(plan);
    const LogFit fit = fit_gsq_decay(trace, 50.0, 2000.0);
    REQUIRE(fit.slope == Catch::Approx(-1.0).margin(0.2));
}

TEST_CASE("empirical exceedance stays below the concentration bound at large t") {
    const UniformDemand demand(0.0, 1.0);
    const LinearCost cost(1.0, 1.0);
    RunPlan plan = base_plan(demand, cost, 1000, 500, 10101);
    const RegretTrace trace = run_experiment(plan);
    const double lambdas[] = {0.1, 0.2};
    // C0 = 1 makes the offset (4 C0 B + C1)/sqrt(t) generous here
    const ConcentrationReport rep =
        concentration_report(trace, cost.gradient_bound(1.0), cost.saa_slack(), 1.0, lambdas,
                             100.0);
    for (const auto& row : rep.rows) REQUIRE(row.empirical_tail <= row.bound + 1e-12);
}

// ---------------------------------------------------------------------------
// Regret-bound constants
// ---------------------------------------------------------------------------

TEST_CASE("k-constant arithmetic") {
    // B=1, C1=2, C0=1: a = 6, K4 = 36 + 2 + sqrt(2 pi) * 6, K3 = 2 K4,
    // K1 = 2 sqrt(K4), K2 = 8 sqrt(2) sqrt(K4) 6 + 8 sqrt(K4)/6.
    const auto k = regret_bound_constants(1.0, 2.0, 1.0, 1.0);
    const double a = 6.0;
    const double k4 = 38.0 + std::sqrt(2.0 * std::numbers::pi) * a;
    REQUIRE(k.k4 == Catch::Approx(k4).epsilon(1e-14));
    REQUIRE(k.k3 == Catch::Approx(2.0 * k4).epsilon(1e-14));
    REQUIRE(k.k1 == Catch::Approx(2.0 * std::sqrt(k4)).epsilon(1e-14));
    REQUIRE(k.k2 == Catch::Approx(8.0 * std::sqrt(2.0) * std::sqrt(k4) * a +
                                  8.0 * std::sqrt(k4) / a)
                        .epsilon(1e-14));
    // K1 scales with the support bound
    REQUIRE(regret_bound_constants(1.0, 2.0, 1.0, 3.0).k1 == Catch::Approx(3.0 * k.k1));
}

// ---------------------------------------------------------------------------
// Uniform-demand plug-in policy and order-statistic facts (small-scale versions)
// ---------------------------------------------------------------------------

TEST_CASE("mle policy regret on uniform demand stays below the constant bound") {
    // Bound (rho^2 + (1-rho)^2)(h+b)(b_bar - a) = 1 for h=b=1 on U(0,1);
    // the true limit of the cumulative regret is 1/4.
    const UniformDemand demand(0.0, 1.0);
    const LinearCost cost(1.0, 1.0);
    RunPlan plan = base_plan(demand, cost, 2000, 400, 777);
    plan.make_policy = [] { return std::make_unique<MleUniformPolicy>(0.5); };
    const RegretTrace trace = run_experiment(plan);
    const auto& last = trace.points.back();
    REQUIRE(last.cum_regret <= 1.0 + 3.0 * last.se_cum);
}

TEST_CASE("mle bound also holds off the unit interval with asymmetric costs") {
    // rho = 0.75 on U(0.5, 2): bound (rho^2 + (1-rho)^2)(h+b)(b_bar - a)
    // = 0.625 * 4 * 1.5 = 3.75.
    const UniformDemand demand(0.5, 2.0);
    const LinearCost cost(1.0, 3.0);
    RunPlan plan = base_plan(demand, cost, 2000, 300, 515);
    plan.make_policy = [] { return std::make_unique<MleUniformPolicy>(0.75); };
    const RegretTrace trace = run_experiment(plan);
    const auto& last = trace.points.back();
    REQUIRE(last.cum_regret <= 3.75 + 3.0 * last.se_cum);
}

TEST_CASE("sgd baseline runs through the engine with sane regret") {
    // C'' = (h+b) f = 2 on [0,1], so the strong-convexity parameter is 2.
    const UniformDemand demand(0.0, 1.0);
    const LinearCost cost(1.0, 1.0);
    RunPlan plan = base_plan(demand, cost, 2000, 100, 616);
    plan.make_policy = [&cost] { return std::make_unique<SgdPolicy>(cost, 2.0, 1.0); };
    const RegretTrace trace = run_experiment(plan);
    double prev = 0.0;
    for (const auto& pt : trace.points) {
        REQUIRE(pt.cum_regret >= prev - 1e-12);
        prev = pt.cum_regret;
    }
    // 1/(alpha t) steps give O(log T) regret; 5 is a loose envelope here
    REQUIRE(trace.points.back().cum_regret < 5.0);
}

TEST_CASE("minimum order statistic second moment matches 2/((t+1)(t+2))") {
    Philox4x32 check_rng(33, 0);
    for (int t : {1, 5, 20}) {
        const int reps = 40000;
        double sum = 0.0, sum_sq = 0.0;
        for (int r = 0; r < reps; ++r) {
            double min_v = 1.0;
            for (int i = 0; i < t; ++i) min_v = std::min(min_v, check_rng.next_double());
            sum += min_v * min_v;
            sum_sq += min_v * min_v * min_v * min_v;
        }
        const double mean = sum / reps;
        const double se = std::sqrt((sum_sq / reps - mean * mean) / reps);
        const double expected = 2.0 / ((t + 1.0) * (t + 2.0));
        REQUIRE(mean == Catch::Approx(expected).margin(3.0 * se));
    }
}
