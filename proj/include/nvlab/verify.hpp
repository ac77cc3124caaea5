#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "nvlab/cost.hpp"
#include "nvlab/demand.hpp"
#include "nvlab/lowerbound.hpp"
#include "nvlab/numeric.hpp"
#include "nvlab/policy.hpp"
#include "nvlab/rng.hpp"

namespace nvlab {

// Self-contained invariant suite behind the `verify` CLI subcommand. Each
// check returns a named pass/fail result; a check covers a whole sweep and
// reports the worst offender in its detail string.

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyOptions {
    // Self-test hook: shifts the hard instance's l2 breakpoint by this
    // amount before the continuity check, which must then fail.
    double breakpoint_perturbation = 0.0;
    long long ks_samples = 1'000'000;
    std::uint64_t seed = 20240801;
};

namespace verify_detail {

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline CheckResult check(const std::string& name, bool pass, const std::string& detail) {
    return CheckResult{name, pass, detail};
}

inline std::vector<double> theta_grid(double alpha, int n = 21) {
    std::vector<double> grid;
    const double half = hard_instance_theta_bound(alpha);
    for (int i = 0; i < n; ++i)
        grid.push_back(-half + 2.0 * half * static_cast<double>(i) / (n - 1));
    return grid;
}

inline double ks_distance(std::vector<double> samples, const DemandModel& demand) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = demand.cdf(samples[i]);
        worst = std::max(worst, std::abs(f - static_cast<double>(i) / n));
        worst = std::max(worst, std::abs(f - static_cast<double>(i + 1) / n));
    }
    return worst;
}

struct NamedDemand {
    std::string name;
    std::unique_ptr<DemandModel> model;
};

inline std::vector<NamedDemand> canonical_demands() {
    std::vector<NamedDemand> out;
    out.push_back({"uniform(0,1)", std::make_unique<UniformDemand>(0.0, 1.0)});
    out.push_back({"uniform(0.2,1.7)", std::make_unique<UniformDemand>(0.2, 1.7)});
    out.push_back({"local_flat(0.4,0.05,0.5)",
                   std::make_unique<LocalFlatDemand>(0.4, 0.05, 0.5)});
    out.push_back({"local_flat(0.4,0.2,0.6)",
                   std::make_unique<LocalFlatDemand>(0.4, 0.2, 0.6)});
    out.push_back({"hard(0.2,0.5,0)", std::make_unique<HardInstanceDemand>(0.2, 0.5, 0.0)});
    out.push_back({"hard(0.2,0.5,0.01)", std::make_unique<HardInstanceDemand>(0.2, 0.5, 0.01)});
    out.push_back({"hard(0.1,0.25,-0.005)",
                   std::make_unique<HardInstanceDemand>(0.1, 0.25, -0.005)});
    return out;
}

} // namespace verify_detail

// ---------------------------------------------------------------------------
// Demand-scope checks
// ---------------------------------------------------------------------------

inline std::vector<CheckResult> verify_demand(const VerifyOptions& opt = {}) {
    using namespace verify_detail;
    std::vector<CheckResult> results;
    const auto demands = canonical_demands();

    {  // pdf integrates to 1 over the support
        double worst = 0.0;
        std::string where = "-";
        for (const auto& nd : demands) {
            const auto knots = nd.model->pieces();
            const double mass =
                integrate_pieces([&](double x) { return nd.model->pdf(x); }, knots, 1e-11);
            if (std::abs(mass - 1.0) > worst) {
                worst = std::abs(mass - 1.0);
                where = nd.name;
            }
        }
        results.push_back(check("demand.normalization", worst <= 1e-8,
                                "max |mass - 1| = " + fmt(worst) + " at " + where));
    }

    {  // cdf nondecreasing on a 10^4-point grid
        bool ok = true;
        std::string where = "-";
        for (const auto& nd : demands) {
            const double hi = nd.model->upper_support();
            double prev = -1.0;
            for (int i = 0; i <= 10000; ++i) {
                const double x = hi * static_cast<double>(i) / 10000.0;
                const double f = nd.model->cdf(x);
                if (f < prev) {
                    ok = false;
                    where = nd.name + " at x = " + fmt(x);
                    break;
                }
                prev = f;
            }
        }
        results.push_back(check("demand.cdf_monotone", ok, ok ? "10^4-point grid" : where));
    }

    {  // quantile inverts cdf where the density is positive
        double worst = 0.0;
        std::string where = "-";
        for (const auto& nd : demands) {
            const double hi = nd.model->upper_support();
            for (int i = 1; i < 1000; ++i) {
                const double x = hi * static_cast<double>(i) / 1000.0;
                if (nd.model->pdf(x) <= 0.0) continue;
                const double err = std::abs(nd.model->quantile(nd.model->cdf(x)) - x);
                if (err > worst) {
                    worst = err;
                    where = nd.name;
                }
            }
        }
        results.push_back(check("demand.quantile_inverts_cdf", worst <= 1e-10,
                                "max |Q(F(x)) - x| = " + fmt(worst) + " at " + where));
    }

    const double alphas[] = {0.1, 0.2, 0.4};
    const double rhos[] = {0.25, 0.5, 0.75};

    {  // hard instance: density floor alpha on a 10^4-point grid
        double worst = 1.0;
        std::string where = "-";
        for (double alpha : alphas)
            for (double rho : rhos)
                for (double theta : theta_grid(alpha)) {
                    const auto p = hard_instance_breakpoints(alpha, rho, theta);
                    for (int i = 0; i <= 10000; ++i) {
                        const double x = static_cast<double>(i) / 10000.0;
                        const double slack = hard_instance_pdf(x, p) - alpha;
                        if (slack < worst) {
                            worst = slack;
                            where = "alpha=" + fmt(alpha) + ", rho=" + fmt(rho) +
                                    ", theta=" + fmt(theta);
                        }
                    }
                }
        results.push_back(check("demand.hard_floor", worst >= -1e-12,
                                "min pdf - alpha = " + fmt(worst) + " at " + where));
    }

    {  // hard instance: two-sided continuity at the four breakpoints
        double worst = 0.0;
        std::string where = "-";
        for (double alpha : alphas)
            for (double rho : rhos)
                for (double theta : theta_grid(alpha)) {
                    auto p = hard_instance_breakpoints(alpha, rho, theta);
                    p.l2 += opt.breakpoint_perturbation;
                    const double bps[] = {p.l1, p.l2, p.r2, p.r1};
                    for (int k = 0; k < 4; ++k) {
                        const double gap = std::abs(hard_instance_piece_pdf(k, bps[k], p) -
                                                    hard_instance_piece_pdf(k + 1, bps[k], p));
                        if (gap > worst) {
                            worst = gap;
                            where = "breakpoint " + std::to_string(k + 1) + " at alpha=" +
                                    fmt(alpha) + ", rho=" + fmt(rho) + ", theta=" + fmt(theta);
                        }
                    }
                }
        results.push_back(check("demand.hard_breakpoint_continuity", worst <= 1e-12,
                                "max two-sided pdf gap = " + fmt(worst) + " at " + where));
    }

    {  // hard instance: F(l2) < rho < F(r2) and closed-form optimum = Q(rho)
        bool bracket_ok = true;
        double worst_opt = 0.0;
        std::string where = "-";
        for (double alpha : alphas)
            for (double rho : rhos)
                for (double theta : theta_grid(alpha)) {
                    const auto p = hard_instance_breakpoints(alpha, rho, theta);
                    if (!(hard_instance_cdf(p.l2, p) < rho && rho < hard_instance_cdf(p.r2, p)))
                        bracket_ok = false;
                    const double err =
                        std::abs(hard_instance_optimal(p) - hard_instance_quantile(rho, p));
                    if (err > worst_opt) {
                        worst_opt = err;
                        where = "alpha=" + fmt(alpha) + ", rho=" + fmt(rho);
                    }
                }
        results.push_back(check("demand.hard_cdf_bracketing", bracket_ok,
                                "F(l2) < rho < F(r2) over the theta sweep"));
        results.push_back(check("demand.hard_optimal_matches_quantile", worst_opt <= 1e-9,
                                "max |x* - Q(rho)| = " + fmt(worst_opt) + " at " + where));
    }

    {  // empirical cdf of inverse-transform samples vs analytic cdf
        const HardInstanceDemand hard(0.2, 0.5, 0.01);
        Philox4x32 rng(opt.seed, 0);
        std::vector<double> samples(static_cast<std::size_t>(opt.ks_samples));
        for (auto& s : samples) s = hard.sample(rng);
        const double d = ks_distance(std::move(samples), hard);
        // contract threshold 0.002 at n = 10^6; KS scales as 1/sqrt(n)
        const double threshold =
            0.002 * std::sqrt(1e6 / static_cast<double>(opt.ks_samples));
        results.push_back(check("demand.sampling_ks", d <= threshold,
                                "KS distance = " + fmt(d) + " with n = " +
                                    std::to_string(opt.ks_samples)));
    }

    {  // local flat: plateau height, F(1/2) = rho, feasible block heights
        const LocalFlatDemand lf(0.4, 0.05, 0.5);
        const bool ok = std::abs(lf.cdf(0.5) - lf.rho()) <= 1e-12 &&
                        lf.pdf(0.5 - lf.beta()) == lf.alpha() &&
                        lf.pdf(0.5 + lf.beta()) == lf.alpha() &&
                        lf.left_height() >= lf.outer_density() &&
                        lf.right_height() >= lf.outer_density();
        results.push_back(check("demand.local_flat_construction", ok,
                                "F(1/2) = " + fmt(lf.cdf(0.5)) + ", plateau = alpha"));
    }

    return results;
}

// ---------------------------------------------------------------------------
// Policy-scope checks
// ---------------------------------------------------------------------------

inline std::vector<CheckResult> verify_policy(const VerifyOptions& opt = {}) {
    using namespace verify_detail;
    std::vector<CheckResult> results;
    Philox4x32 rng(opt.seed, 1);

    {  // SAA equals the brute-force empirical minimizer on random instances
        double worst = 0.0;
        const int instances = 200;
        const int grid_n = 100000;
        for (int i = 0; i < instances; ++i) {
            const int t = 1 + static_cast<int>(rng.next_double() * 12.0);
            std::vector<double> history(t);
            for (auto& d : history) d = 0.05 + 0.95 * rng.next_double();
            std::unique_ptr<CostModel> cost;
            const double u = rng.next_double();
            if (u < 0.4) {
                cost = std::make_unique<LinearCost>(0.1 + 3.0 * rng.next_double(),
                                                    0.1 + 3.0 * rng.next_double());
            } else if (u < 0.7) {
                PiecewiseLinearFn over;
                over.start = {0.0, 0.3};
                over.slope = {0.5 + rng.next_double(), 2.0 + rng.next_double()};
                PiecewiseLinearFn under;
                under.start = {0.0, 0.4};
                under.slope = {0.5 + rng.next_double(), 1.5 + rng.next_double()};
                cost = std::make_unique<ConvexPiecewiseCost>(over, under);
            } else {
                cost = std::make_unique<QuadraticProductionCost>(0.5 + rng.next_double(),
                                                                 0.5 + rng.next_double());
            }
            const double x_hat = saa_decide(history, *cost);
            const double hi = *std::max_element(history.begin(), history.end());
            double best = empirical_cost(0.0, history, *cost);
            for (int gridpoint = 1; gridpoint <= grid_n; ++gridpoint) {
                const double x = hi * static_cast<double>(gridpoint) / grid_n;
                best = std::min(best, empirical_cost(x, history, *cost));
            }
            const double tol = 1e-9 + cost->gradient_bound(hi) * hi / grid_n;
            worst = std::max(worst, empirical_cost(x_hat, history, *cost) - best - tol);
        }
        results.push_back(check("policy.saa_brute_force_equivalence", worst <= 0.0,
                                "max excess over grid minimum (after tolerance) = " + fmt(worst)));
    }

    {  // SAA first-order slack along full trajectories
        double worst_ratio = 0.0;
        for (int traj = 0; traj < 10; ++traj) {
            std::unique_ptr<CostModel> cost;
            if (traj % 2 == 0)
                cost = std::make_unique<LinearCost>(1.0, 1.0 + traj);
            else
                cost = std::make_unique<QuadraticProductionCost>(1.0, 1.0 + 0.2 * traj);
            std::vector<double> history;
            for (int t = 1; t <= 150; ++t) {
                history.push_back(rng.next_double());
                const double slack =
                    std::abs(empirical_subgradient(saa_decide(history, *cost), history, *cost));
                const double budget = cost->saa_slack() / std::sqrt(static_cast<double>(t)) + 1e-12;
                worst_ratio = std::max(worst_ratio, slack - budget);
            }
        }
        results.push_back(check("policy.saa_slack_bound", worst_ratio <= 0.0,
                                "max |ghat(xhat)| - C1/sqrt(t) = " + fmt(worst_ratio)));
    }

    {  // mle_uniform translation/scale equivariance
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const int t = 1 + static_cast<int>(rng.next_double() * 10.0);
            std::vector<double> history(t), mapped(t);
            const double rho = rng.next_double();
            const double shift = 2.0 * rng.next_double() - 1.0;
            const double scale = 0.1 + 3.0 * rng.next_double();
            for (int s = 0; s < t; ++s) {
                history[s] = rng.next_double();
                mapped[s] = shift + scale * history[s];
            }
            const double lhs = mle_uniform_decide(mapped, rho);
            const double rhs = shift + scale * mle_uniform_decide(history, rho);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        results.push_back(check("policy.mle_equivariance", worst <= 1e-12,
                                "max |decide(a+sH) - (a+s decide(H))| = " + fmt(worst)));
    }

    return results;
}

// ---------------------------------------------------------------------------
// Lower-bound-scope checks (score, Fisher information, prior)
// ---------------------------------------------------------------------------

inline std::vector<CheckResult> verify_lowerbound(const VerifyOptions& = {}) {
    using namespace verify_detail;
    std::vector<CheckResult> results;
    const double pi = std::numbers::pi;
    const double alphas[] = {0.1, 0.2, 0.4};
    const double rhos[] = {0.25, 0.5, 0.75};

    {  // E_theta[score] = 0 by quadrature over the bridges
        double worst = 0.0;
        std::string where = "-";
        for (double alpha : alphas)
            for (double rho : rhos)
                for (double theta : theta_grid(alpha)) {
                    const auto p = hard_instance_breakpoints(alpha, rho, theta);
                    const auto integrand = [&](double x) {
                        return hard_instance_score(x, p) * hard_instance_pdf(x, p);
                    };
                    const double m = adaptive_simpson(integrand, p.l1, p.l2, 1e-10) +
                                     adaptive_simpson(integrand, p.r2, p.r1, 1e-10);
                    if (std::abs(m) > worst) {
                        worst = std::abs(m);
                        where = "alpha=" + fmt(alpha) + ", rho=" + fmt(rho);
                    }
                }
        results.push_back(check("lowerbound.score_mean_zero", worst <= 2e-6,
                                "max |E[score]| = " + fmt(worst) + " at " + where));
    }

    {  // Fisher information bounds and theta-invariance
        double worst_margin = -std::numeric_limits<double>::infinity();
        double worst_spread = 0.0;
        std::string where = "-";
        for (double alpha : alphas)
            for (double rho : rhos) {
                double lo = std::numeric_limits<double>::max();
                double hi = 0.0;
                for (double theta : theta_grid(alpha)) {
                    const auto p = hard_instance_breakpoints(alpha, rho, theta);
                    const double info = fisher_single(p);
                    lo = std::min(lo, info);
                    hi = std::max(hi, info);
                    const double cap = std::min(2.0 * pi * (1.0 - alpha) * (p.w1 + p.w2),
                                                4.0 * pi * pi / (rho * (1.0 - rho)));
                    if (info - cap > worst_margin) {
                        worst_margin = info - cap;
                        where = "alpha=" + fmt(alpha) + ", rho=" + fmt(rho);
                    }
                }
                worst_spread = std::max(worst_spread, hi - lo);
            }
        results.push_back(check("lowerbound.fisher_bounds", worst_margin <= 0.0,
                                "max I_1 - bound = " + fmt(worst_margin) + " at " + where));
        results.push_back(check("lowerbound.fisher_theta_invariance", worst_spread <= 1e-6,
                                "max spread over theta = " + fmt(worst_spread)));
    }

    {  // prior Fisher information: closed form vs quadrature
        double worst = 0.0;
        for (double alpha : alphas) {
            const double closed = prior_fisher(alpha);
            const double quad = prior_fisher_quadrature(alpha);
            worst = std::max(worst, std::abs(quad - closed) / closed);
        }
        results.push_back(check("lowerbound.prior_fisher_quadrature", worst <= 1e-6,
                                "max relative gap = " + fmt(worst)));
    }

    {  // prior density vanishes at the endpoints of Theta
        double worst = 0.0;
        for (double alpha : alphas) {
            const double half = hard_instance_theta_bound(alpha);
            worst = std::max({worst, prior_pdf(half, alpha), prior_pdf(-half, alpha)});
        }
        results.push_back(check("lowerbound.prior_endpoint_zero", worst <= 1e-9,
                                "max q(+-alpha/20) = " + fmt(worst)));
    }

    {  // likelihood continuity in theta: sup_x |f(x|theta+d) - f(x|theta)| = O(d)
        bool ok = true;
        std::string detail;
        const double alpha = 0.2, rho = 0.5;
        const double lipschitz =
            (1.0 - alpha) * std::max(2.0 * pi / rho, 2.0 * pi / (1.0 - rho));
        for (double delta : {1e-3, 1e-4, 1e-5}) {
            const auto p0 = hard_instance_breakpoints(alpha, rho, 0.0);
            const auto p1 = hard_instance_breakpoints(alpha, rho, delta);
            double sup = 0.0;
            for (int i = 0; i <= 20000; ++i) {
                const double x = static_cast<double>(i) / 20000.0;
                sup = std::max(sup, std::abs(hard_instance_pdf(x, p1) - hard_instance_pdf(x, p0)));
            }
            if (!(sup <= 1.05 * lipschitz * delta)) {
                ok = false;
                detail = "sup gap " + fmt(sup) + " exceeds Lipschitz slope at delta = " + fmt(delta);
            }
        }
        results.push_back(check("lowerbound.likelihood_theta_continuity", ok,
                                ok ? "sup-norm gap decays linearly in the shift" : detail));
    }

    return results;
}

inline std::vector<CheckResult> verify_all(const VerifyOptions& opt = {}) {
    std::vector<CheckResult> results = verify_demand(opt);
    for (auto& r : verify_policy(opt)) results.push_back(std::move(r));
    for (auto& r : verify_lowerbound(opt)) results.push_back(std::move(r));
    return results;
}

} // namespace nvlab
