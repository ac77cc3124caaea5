// Minimal end-to-end run: SAA on uniform demand with linear cost, printed
// as a small regret table.

#include <cstdio>

#include "nvlab/experiment.hpp"

int main() {
    const nvlab::UniformDemand demand(0.0, 1.0);
    const nvlab::LinearCost cost(1.0, 1.0);

    nvlab::RunPlan plan;
    plan.demand = &demand;
    plan.cost = &cost;
    plan.make_policy = [&] { return std::make_unique<nvlab::SaaPolicy>(cost); };
    plan.horizon = 5000;
    plan.replications = 200;
    plan.seed = 7;
    plan.record = nvlab::log_record_grid(plan.horizon);

    const nvlab::RegretTrace trace = nvlab::run_experiment(plan);
    std::printf("%8s %14s %14s\n", "t", "cum regret", "mean |g|^2");
    for (const auto& pt : trace.points)
        std::printf("%8lld %14.6f %14.3e\n", pt.t, pt.cum_regret, pt.mean_g_sq);

    const nvlab::LogFit fit = nvlab::fit_log_slope(trace, 100.0);
    std::printf("\ncum regret ~ %.3f ln t + %.3f (R^2 = %.4f)\n", fit.slope, fit.intercept,
                fit.r_squared);
    return 0;
}
