#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "nvlab/demand.hpp"
#include "nvlab/numeric.hpp"
#include "nvlab/policy.hpp"
#include "nvlab/rng.hpp"

namespace nvlab {

// ---------------------------------------------------------------------------
// Fisher information of the hard-instance family
// ---------------------------------------------------------------------------

// Per-sample Fisher information I_1(theta): quadrature of score^2 * f over
// the two cosine bridges (the score vanishes elsewhere). The bridges are
// translates of each other in theta, so the value does not depend on theta.
// Bounds: I_1 <= 2 pi (1 - alpha)(w1 + w2) and, since
// w1 + w2 = 2 pi / (rho (1 - rho)), also I_1 <= 4 pi^2 / (rho (1 - rho)).
inline double fisher_single(const HardInstanceParams& p, double tol = 1e-8) {
    const auto integrand = [&](double x) {
        const double s = hard_instance_score(x, p);
        return s * s * hard_instance_pdf(x, p);
    };
    return adaptive_simpson(integrand, p.l1, p.l2, 0.5 * tol) +
           adaptive_simpson(integrand, p.r2, p.r1, 0.5 * tol);
}

// Fisher information of t i.i.d. samples: additive, t * I_1.
inline double fisher_t(long long t, const HardInstanceParams& p, double tol = 1e-8) {
    if (t < 1) throw std::invalid_argument("fisher_t: t must be >= 1");
    return static_cast<double>(t) * fisher_single(p, tol);
}

// ---------------------------------------------------------------------------
// Fisher information of the prior I(q) = 400 pi^2 / alpha^2
// ---------------------------------------------------------------------------

inline double prior_fisher(double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("prior_fisher: alpha must be positive");
    const double pi = std::numbers::pi;
    return 400.0 * pi * pi / (alpha * alpha);
}

// Independent route: quadrature of (q'/q)^2 q with the analytic derivative
// q'(theta) = -(400 pi / alpha^2) cos(10 pi theta/alpha) sin(10 pi theta/alpha).
inline double prior_fisher_quadrature(double alpha, double tol = 1e-10) {
    if (!(alpha > 0.0)) throw std::invalid_argument("prior_fisher_quadrature: alpha must be positive");
    const double pi = std::numbers::pi;
    const double half = hard_instance_theta_bound(alpha);
    const auto integrand = [&](double theta) {
        const double u = 10.0 * pi * theta / alpha;
        const double q = 20.0 / alpha * std::cos(u) * std::cos(u);
        const double dq = -400.0 * pi / (alpha * alpha) * std::cos(u) * std::sin(u);
        if (q < 1e-280) {
            // removable 0/0 at the endpoints: (q'/q)^2 q -> (8000 pi^2/alpha^3) sin^2
            return 8000.0 * pi * pi / (alpha * alpha * alpha) * std::sin(u) * std::sin(u);
        }
        return dq * dq / q;
    };
    return adaptive_simpson(integrand, -half, half, tol);
}

// ---------------------------------------------------------------------------
// Bayesian Cramer-Rao (van Trees) arithmetic
// ---------------------------------------------------------------------------

// Per-period minimax ingredients and bounds for the hard-instance family:
//
//   per_period[t-1] = (min C'' / 2) * h'(theta)^2 / (E[I_t(theta)] + I(q))
//
// with min C'' >= (h+b) alpha, h'(theta)^2 = (2/alpha - 2)^2, the analytic
// information rate E[I_t] <= 4 pi^2 t / (rho (1-rho)), and
// I(q) = 400 pi^2 / alpha^2. The cumulative sum is compared against
// K6 ln T / alpha with K6 = min{rho(1-rho)/(4 pi^2), 1/(400 pi^2)} (h+b)/12,
// which is claimed only for horizons T >= max{alpha^-3, 64}.
struct VanTreesReport {
    long long horizon = 0;
    double alpha = 0.0, rho = 0.0, h = 0.0, b = 0.0;
    double min_curvature = 0.0;   // (h+b) alpha
    double hprime_sq = 0.0;       // (2/alpha - 2)^2
    double fisher_rate = 0.0;     // 4 pi^2 / (rho (1-rho)), per sample
    double prior_info = 0.0;      // I(q)
    double k6 = 0.0;
    std::vector<double> per_period;
    double cumulative = 0.0;
    bool horizon_condition = false;
    double k6_log_bound = 0.0;    // K6 ln T / alpha
    bool exceeds_k6_bound = false;
};

inline VanTreesReport van_trees_bound(long long horizon, double alpha, double rho, double h,
                                      double b) {
    if (horizon < 1) throw std::invalid_argument("van_trees_bound: horizon must be >= 1");
    if (!(h >= 0.0) || !(b >= 0.0) || !(h + b > 0.0))
        throw std::invalid_argument("van_trees_bound: need h >= 0, b >= 0, h + b > 0");
    (void)hard_instance_breakpoints(alpha, rho, 0.0);  // parameter-domain checks

    const double pi = std::numbers::pi;
    VanTreesReport rep;
    rep.horizon = horizon;
    rep.alpha = alpha;
    rep.rho = rho;
    rep.h = h;
    rep.b = b;
    rep.min_curvature = (h + b) * alpha;
    rep.hprime_sq = (2.0 / alpha - 2.0) * (2.0 / alpha - 2.0);
    rep.fisher_rate = 4.0 * pi * pi / (rho * (1.0 - rho));
    rep.prior_info = prior_fisher(alpha);
    rep.k6 = std::min(rho * (1.0 - rho) / (4.0 * pi * pi), 1.0 / (400.0 * pi * pi)) * (h + b) / 12.0;

    rep.per_period.reserve(static_cast<std::size_t>(horizon));
    const double numerator = 0.5 * rep.min_curvature * rep.hprime_sq;
    for (long long t = 1; t <= horizon; ++t) {
        const double bound = numerator / (rep.fisher_rate * static_cast<double>(t) + rep.prior_info);
        rep.per_period.push_back(bound);
        rep.cumulative += bound;
    }
    rep.horizon_condition =
        static_cast<double>(horizon) >= std::max(std::pow(alpha, -3.0), 64.0);
    rep.k6_log_bound = rep.k6 * std::log(static_cast<double>(horizon)) / alpha;
    rep.exceeds_k6_bound = rep.cumulative >= rep.k6_log_bound;
    return rep;
}

// ---------------------------------------------------------------------------
// Empirical Bayes MSE against the van Trees floor
// ---------------------------------------------------------------------------

struct BayesMseResult {
    long long t = 0;
    int reps = 0;
    double empirical_mse = 0.0;
    double se = 0.0;
    double floor = 0.0;  // h'(theta)^2 / (t I_1 + I(q)), with the numeric I_1
};

// Draws theta ~ q, streams t samples from f(.|theta), applies an estimator
// that sees only the samples, and averages the squared error against the
// closed-form optimum x*(theta). The floor uses the sharp numeric Fisher
// information rather than its analytic upper bound, giving the tightest
// valid comparison. Estimators that peek at theta are outside the
// inequality's scope and must not be passed here.
template <class PolicyFn>
BayesMseResult bayes_mse_check(PolicyFn&& estimator, long long t, double alpha, double rho,
                               int reps, std::uint64_t seed) {
    if (t < 1) throw std::invalid_argument("bayes_mse_check: t must be >= 1");
    if (reps < 1000) throw std::invalid_argument("bayes_mse_check: need at least 1000 replications");
    const HardInstanceParams centered = hard_instance_breakpoints(alpha, rho, 0.0);
    const double info = static_cast<double>(t) * fisher_single(centered) + prior_fisher(alpha);
    const double hprime_sq = (2.0 / alpha - 2.0) * (2.0 / alpha - 2.0);

    double sum = 0.0, sum_sq = 0.0;
    std::vector<double> history(static_cast<std::size_t>(t));
    for (int r = 0; r < reps; ++r) {
        Philox4x32 rng(seed, static_cast<std::uint64_t>(r));
        const double theta = prior_sample(rng, alpha);
        const HardInstanceParams p = hard_instance_breakpoints(alpha, rho, theta);
        const HardInstanceAnchors anchors = hard_instance_anchors(p);
        for (auto& d : history) d = hard_instance_quantile(rng.next_double(), p, anchors);
        const double x_hat = estimator(std::span<const double>(history));
        const double err = x_hat - hard_instance_optimal(p);
        sum += err * err;
        sum_sq += err * err * err * err;
    }
    BayesMseResult res;
    res.t = t;
    res.reps = reps;
    res.empirical_mse = sum / reps;
    res.se = std::sqrt(std::max(0.0, sum_sq / reps - res.empirical_mse * res.empirical_mse) /
                       static_cast<double>(reps));
    res.floor = hprime_sq / info;
    return res;
}

} // namespace nvlab
