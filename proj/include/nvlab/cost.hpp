#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "nvlab/demand.hpp"
#include "nvlab/numeric.hpp"

namespace nvlab {

// Single-period newsvendor cost c(x, d), convex in the order quantity x for
// every demand d, with a chosen subgradient element that is nondecreasing
// and right-continuous in x. Models also report
//   gradient_bound(d_bar): B with |c'(x, d)| <= B on [0, d_bar]^2,
//   saa_slack():           C1 with |ghat_t(xhat_t)| <= C1 / sqrt(t),
// and closed-form expected cost / gradient under a DemandModel in terms of
// cdf_integral and mean.
class CostModel {
public:
    virtual ~CostModel() = default;

    virtual double cost(double x, double d) const = 0;
    virtual double subgradient(double x, double d) const = 0;
    virtual double gradient_bound(double d_bar) const = 0;
    virtual double saa_slack() const = 0;

    virtual double expected_cost(double x, const DemandModel& demand) const = 0;
    virtual double expected_gradient(double x, const DemandModel& demand) const = 0;

    // Kink locations of d -> cost(x, d); quadrature over demand splits here.
    virtual std::vector<double> demand_kinks(double x) const { return {x}; }
};

// ---------------------------------------------------------------------------
// Linear overage/underage cost  c(x,d) = h (x-d)^+ + b (d-x)^+
// ---------------------------------------------------------------------------

class LinearCost final : public CostModel {
public:
    LinearCost(double h, double b) : h_(h), b_(b) {
        if (!(h >= 0.0) || !(b >= 0.0) || !(h + b > 0.0))
            throw std::invalid_argument("LinearCost: need h >= 0, b >= 0, h + b > 0");
    }

    double cost(double x, double d) const override {
        return x >= d ? h_ * (x - d) : b_ * (d - x);
    }

    // Kink convention: value h at x = d, so the subgradient is
    // right-continuous and the empirical left rho-quantile is the smallest
    // minimizer.
    double subgradient(double x, double d) const override { return x >= d ? h_ : -b_; }

    double gradient_bound(double) const override { return std::max(h_, b_); }

    // One sample's subgradient jumps by h + b at its kink.
    double saa_slack() const override { return h_ + b_; }

    double expected_cost(double x, const DemandModel& demand) const override {
        // E[(x-D)^+] = G(x), E[(D-x)^+] = E[D] - x + G(x), G = cdf_integral
        const double g = demand.cdf_integral(x);
        return (h_ + b_) * g - b_ * x + b_ * demand.mean();
    }

    double expected_gradient(double x, const DemandModel& demand) const override {
        return (h_ + b_) * demand.cdf(x) - b_;
    }

    double h() const { return h_; }
    double b() const { return b_; }
    double critical_fractile() const { return b_ / (h_ + b_); }

private:
    double h_;
    double b_;
};

// ---------------------------------------------------------------------------
// Convex piecewise-linear overage/underage cost
// ---------------------------------------------------------------------------

// One-sided convex piecewise-linear function: value(0) = 0 and slope
// slope[i] on [start[i], start[i+1]). Slopes must be nonnegative and
// nondecreasing; start[0] must be 0.
struct PiecewiseLinearFn {
    std::vector<double> start;
    std::vector<double> slope;

    void validate(const char* what) const {
        if (start.empty() || start.size() != slope.size())
            throw std::invalid_argument(std::string(what) + ": need matching nonempty breakpoint/slope lists");
        if (start.front() != 0.0)
            throw std::invalid_argument(std::string(what) + ": first breakpoint must be 0");
        for (std::size_t i = 0; i < start.size(); ++i) {
            if (i > 0 && !(start[i] > start[i - 1]))
                throw std::invalid_argument(std::string(what) + ": breakpoints must be strictly increasing");
            if (!(slope[i] >= 0.0) || (i > 0 && slope[i] < slope[i - 1]))
                throw std::invalid_argument(std::string(what) + ": slopes must be nonnegative and nondecreasing");
        }
    }

    double value(double u) const {
        if (u <= 0.0) return 0.0;
        double v = 0.0;
        std::size_t i = 0;
        for (; i + 1 < start.size() && u > start[i + 1]; ++i)
            v += slope[i] * (start[i + 1] - start[i]);
        return v + slope[i] * (u - start[i]);
    }

    // Slope of the piece containing u, right-continuous (u >= 0).
    double slope_right(double u) const {
        std::size_t i = 0;
        while (i + 1 < start.size() && u >= start[i + 1]) ++i;
        return slope[i];
    }

    // Slope just below u (u > 0).
    double slope_left(double u) const {
        std::size_t i = 0;
        while (i + 1 < start.size() && u > start[i + 1]) ++i;
        return slope[i];
    }

    double max_slope() const { return slope.back(); }
};

class ConvexPiecewiseCost final : public CostModel {
public:
    ConvexPiecewiseCost(PiecewiseLinearFn overage, PiecewiseLinearFn underage)
        : over_(std::move(overage)), under_(std::move(underage)) {
        over_.validate("ConvexPiecewiseCost overage");
        under_.validate("ConvexPiecewiseCost underage");
    }

    double cost(double x, double d) const override {
        return x >= d ? over_.value(x - d) : under_.value(d - x);
    }

    double subgradient(double x, double d) const override {
        return x >= d ? over_.slope_right(x - d) : -under_.slope_left(d - x);
    }

    double gradient_bound(double) const override {
        return std::max(over_.max_slope(), under_.max_slope());
    }

    double saa_slack() const override { return over_.max_slope() + under_.max_slope(); }

    // Hinge decomposition: value(u) = sum_i ds_i (u - start_i)^+ with
    // ds_i = slope_i - slope_{i-1}, so expected costs reduce to
    // E[(y - D)^+] = G(y) and E[(D - c)^+] = E[D] - c + G(c).
    double expected_cost(double x, const DemandModel& demand) const override {
        const double mu = demand.mean();
        double total = 0.0;
        for (std::size_t i = 0; i < over_.start.size(); ++i) {
            const double ds = over_.slope[i] - (i > 0 ? over_.slope[i - 1] : 0.0);
            if (ds == 0.0) continue;
            const double y = x - over_.start[i];
            if (y > 0.0) total += ds * demand.cdf_integral(y);
        }
        for (std::size_t i = 0; i < under_.start.size(); ++i) {
            const double ds = under_.slope[i] - (i > 0 ? under_.slope[i - 1] : 0.0);
            if (ds == 0.0) continue;
            const double c = x + under_.start[i];
            total += ds * (c >= 0.0 ? mu - c + demand.cdf_integral(c) : mu - c);
        }
        return total;
    }

    double expected_gradient(double x, const DemandModel& demand) const override {
        double g = 0.0;
        for (std::size_t i = 0; i < over_.start.size(); ++i) {
            const double ds = over_.slope[i] - (i > 0 ? over_.slope[i - 1] : 0.0);
            if (ds != 0.0) g += ds * demand.cdf(x - over_.start[i]);
        }
        for (std::size_t i = 0; i < under_.start.size(); ++i) {
            const double ds = under_.slope[i] - (i > 0 ? under_.slope[i - 1] : 0.0);
            if (ds != 0.0) g -= ds * (1.0 - demand.cdf(x + under_.start[i]));
        }
        return g;
    }

    std::vector<double> demand_kinks(double x) const override {
        std::vector<double> kinks;
        for (double u : over_.start) kinks.push_back(x - u);
        for (double u : under_.start) kinks.push_back(x + u);
        return kinks;
    }

    const PiecewiseLinearFn& overage() const { return over_; }
    const PiecewiseLinearFn& underage() const { return under_; }

private:
    PiecewiseLinearFn over_;
    PiecewiseLinearFn under_;
};

// ---------------------------------------------------------------------------
// Quadratic production cost minus revenue  c(x,d) = kappa x^2 - p min(x, d)
// ---------------------------------------------------------------------------

class QuadraticProductionCost final : public CostModel {
public:
    QuadraticProductionCost(double kappa, double p) : kappa_(kappa), p_(p) {
        if (!(kappa > 0.0)) throw std::invalid_argument("QuadraticProductionCost: kappa must be positive");
        if (!(p >= 0.0)) throw std::invalid_argument("QuadraticProductionCost: p must be nonnegative");
    }

    double cost(double x, double d) const override {
        return kappa_ * x * x - p_ * std::min(x, d);
    }

    double subgradient(double x, double d) const override {
        return 2.0 * kappa_ * x - (x < d ? p_ : 0.0);
    }

    // Envelope of the two subgradient terms on [0, d_bar].
    double gradient_bound(double d_bar) const override { return 2.0 * kappa_ * d_bar + p_; }

    // The per-sample subgradient jumps by p at x = d, so the revenue term
    // is not smooth and the first-order slack is p rather than 0.
    double saa_slack() const override { return p_; }

    double expected_cost(double x, const DemandModel& demand) const override {
        // E[min(x, D)] = x - G(x)
        return kappa_ * x * x - p_ * (x - demand.cdf_integral(x));
    }

    double expected_gradient(double x, const DemandModel& demand) const override {
        return 2.0 * kappa_ * x - p_ * (1.0 - demand.cdf(x));
    }

    double kappa() const { return kappa_; }
    double p() const { return p_; }

private:
    double kappa_;
    double p_;
};

// ---------------------------------------------------------------------------
// Empirical (sample-average) cost and subgradient
// ---------------------------------------------------------------------------

inline double empirical_cost(double x, std::span<const double> history, const CostModel& cost) {
    if (history.empty()) throw std::invalid_argument("empirical_cost: history must be nonempty");
    double sum = 0.0;
    for (double d : history) sum += cost.cost(x, d);
    return sum / static_cast<double>(history.size());
}

inline double empirical_subgradient(double x, std::span<const double> history,
                                    const CostModel& cost) {
    if (history.empty()) throw std::invalid_argument("empirical_subgradient: history must be nonempty");
    double sum = 0.0;
    for (double d : history) sum += cost.subgradient(x, d);
    return sum / static_cast<double>(history.size());
}

// ---------------------------------------------------------------------------
// True expected cost / gradient and the optimal order quantity
// ---------------------------------------------------------------------------

inline double true_expected_cost(double x, const CostModel& cost, const DemandModel& demand) {
    return cost.expected_cost(x, demand);
}

inline double true_gradient(double x, const CostModel& cost, const DemandModel& demand) {
    return cost.expected_gradient(x, demand);
}

// Independent quadrature route for E[c(x, D)]: piecewise-aware integration
// of c(x, d) f(d), never across a demand knot or a cost kink. Kept separate
// from the closed forms above so the two can cross-check each other.
inline double expected_cost_quadrature(double x, const CostModel& cost,
                                       const DemandModel& demand, double tol = 1e-10) {
    const auto base = demand.pieces();
    std::vector<double> knots(base.begin(), base.end());
    for (double k : cost.demand_kinks(x)) knots.push_back(k);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    const double lo = base.front();
    const double hi = base.back();
    std::erase_if(knots, [&](double k) { return k < lo || k > hi; });
    return integrate_pieces([&](double d) { return cost.cost(x, d) * demand.pdf(d); }, knots, tol);
}

inline double expected_gradient_quadrature(double x, const CostModel& cost,
                                           const DemandModel& demand, double tol = 1e-10) {
    const auto base = demand.pieces();
    std::vector<double> knots(base.begin(), base.end());
    for (double k : cost.demand_kinks(x)) knots.push_back(k);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    const double lo = base.front();
    const double hi = base.back();
    std::erase_if(knots, [&](double k) { return k < lo || k > hi; });
    return integrate_pieces([&](double d) { return cost.subgradient(x, d) * demand.pdf(d); },
                            knots, tol);
}

// argmin_x E[c(x, D)]. Linear costs take the critical-fractile quantile;
// for other costs the nondecreasing expected gradient is bisected on
// [0, d_bar]. The result satisfies |g| <= 1e-8 or sits on the boundary.
inline double optimal_quantity(const CostModel& cost, const DemandModel& demand) {
    if (const auto* lin = dynamic_cast<const LinearCost*>(&cost))
        return demand.quantile(lin->critical_fractile());
    const double d_bar = demand.upper_support();
    const auto g = [&](double x) { return cost.expected_gradient(x, demand); };
    if (g(0.0) >= 0.0) return 0.0;
    if (g(d_bar) <= 0.0) return d_bar;
    return bisect_root(g, 0.0, d_bar, 1e-12, 200);
}

} // namespace nvlab
