// Prints the per-period Bayesian Cramer-Rao bound for the hard-instance
// family next to the measured Bayes MSE of the SAA rule.

#include <cstdio>
#include <span>

#include "nvlab/lowerbound.hpp"

int main() {
    const double alpha = 0.2, rho = 0.5;
    const nvlab::LinearCost cost(1.0, 1.0);
    const auto report = nvlab::van_trees_bound(10000, alpha, rho, cost.h(), cost.b());
    std::printf("alpha=%.2f rho=%.2f  I(q)=%.2f  K6=%.4e\n", alpha, rho, report.prior_info,
                report.k6);
    std::printf("cumulative bound %.4f vs K6 lnT/alpha = %.4f (holds: %s)\n\n", report.cumulative,
                report.k6_log_bound, report.exceeds_k6_bound ? "yes" : "no");

    std::printf("%8s %14s %14s %10s\n", "t", "floor", "SAA MSE", "se");
    for (long long t : {10LL, 100LL, 1000LL}) {
        const auto res = nvlab::bayes_mse_check(
            [&](std::span<const double> hist) { return nvlab::saa_decide(hist, cost); }, t,
            alpha, rho, 2000, 20240801);
        std::printf("%8lld %14.6e %14.6e %10.2e\n", t, res.floor, res.empirical_mse, res.se);
    }
    return 0;
}
