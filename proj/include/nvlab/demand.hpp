#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvlab/numeric.hpp"
#include "nvlab/rng.hpp"

namespace nvlab {

// Demand distribution on [0, upper_support()] with exact pdf/cdf/quantile
// and inverse-transform sampling. cdf_integral(x) = int_0^x F(u) du is the
// quantity the cost module needs for closed-form expected costs; concrete
// models supply it analytically.
//
// All models are immutable after construction and safe to share across
// threads; RNG state is owned by the caller.
class DemandModel {
public:
    virtual ~DemandModel() = default;

    virtual double pdf(double x) const = 0;
    virtual double cdf(double x) const = 0;
    virtual double quantile(double p) const = 0;
    virtual double upper_support() const = 0;

    // Ascending knots bounding the analytic pieces; first 0, last
    // upper_support(). Quadrature must never integrate across a knot.
    virtual std::vector<double> pieces() const = 0;

    // int_0^x F(u) du, extended linearly past the upper support.
    virtual double cdf_integral(double x) const = 0;

    virtual double mean() const { return upper_support() - cdf_integral(upper_support()); }

    virtual double sample(Philox4x32& rng) const { return quantile(rng.next_double()); }
};

// ---------------------------------------------------------------------------
// Uniform demand on [a, b_bar]
// ---------------------------------------------------------------------------

class UniformDemand final : public DemandModel {
public:
    UniformDemand(double a, double b_bar) : a_(a), b_(b_bar) {
        if (!(a >= 0.0) || !(b_bar > a))
            throw std::invalid_argument("UniformDemand: need 0 <= a < b_bar");
    }

    double pdf(double x) const override {
        return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0;
    }

    double cdf(double x) const override {
        if (x <= a_) return 0.0;
        if (x >= b_) return 1.0;
        return (x - a_) / (b_ - a_);
    }

    double quantile(double p) const override {
        return a_ + std::clamp(p, 0.0, 1.0) * (b_ - a_);
    }

    double upper_support() const override { return b_; }

    std::vector<double> pieces() const override {
        if (a_ > 0.0) return {0.0, a_, b_};
        return {0.0, b_};
    }

    double cdf_integral(double x) const override {
        if (x <= a_) return 0.0;
        if (x >= b_) return 0.5 * (b_ - a_) + (x - b_);
        const double s = x - a_;
        return 0.5 * s * s / (b_ - a_);
    }

    double mean() const override { return 0.5 * (a_ + b_); }

    double a() const { return a_; }
    double b_bar() const { return b_; }

private:
    double a_;
    double b_;
};

// ---------------------------------------------------------------------------
// Inverted-hat hard instance family on [0, 1]
// ---------------------------------------------------------------------------
//
// Piecewise density with an alpha-deep central well of width 1/4, outer
// shoulders of height 2 - alpha, and two half-period cosine bridges:
//
//   f(x) = 2 - alpha                                 on [0, l1] u [r1, 1]
//   f(x) = 1 + (1 - alpha) cos(w1 (x - l1))          on [l1, l2]
//   f(x) = alpha                                     on (l2, r2]
//   f(x) = 1 + (1 - alpha) cos(w2 (r1 - x))          on [r2, r1]
//
// with l1 = (4 rho - alpha)/(16 - 8 alpha) + theta, l2 = l1 + rho/2,
// r2 = l2 + 1/4, r1 = r2 + (1 - rho)/2, w1 = 2 pi / rho,
// w2 = 2 pi / (1 - rho). The shift theta moves the rho-quantile by
// -(2/alpha - 2) theta while perturbing the likelihood only O(theta), which
// is what makes the family hard to learn.

struct HardInstanceParams {
    double alpha = 0.0;   // density floor
    double rho = 0.0;     // critical fractile b/(h+b)
    double theta = 0.0;   // shift parameter, |theta| <= alpha/20
    double l1 = 0.0, l2 = 0.0, r2 = 0.0, r1 = 0.0;
    double w1 = 0.0, w2 = 0.0;
};

inline double hard_instance_theta_bound(double alpha) { return alpha / 20.0; }

inline HardInstanceParams hard_instance_breakpoints(double alpha, double rho, double theta) {
    if (!(alpha > 0.0))
        throw std::invalid_argument("hard instance: density floor alpha must be positive");
    if (!(rho > 0.0 && rho < 1.0))
        throw std::invalid_argument("hard instance: critical fractile rho must lie in (0, 1)");
    const double alpha_max = std::min({0.5, 2.0 * rho, 2.0 * (1.0 - rho)});
    if (alpha > alpha_max)
        throw std::invalid_argument(
            "hard instance: validity condition alpha <= min{1/2, 2*rho, 2*(1-rho)} violated "
            "(alpha = " + std::to_string(alpha) + ", bound = " + std::to_string(alpha_max) + ")");
    if (std::abs(theta) > hard_instance_theta_bound(alpha))
        throw std::invalid_argument("hard instance: shift must satisfy |theta| <= alpha/20");

    HardInstanceParams p;
    p.alpha = alpha;
    p.rho = rho;
    p.theta = theta;
    p.l1 = (4.0 * rho - alpha) / (16.0 - 8.0 * alpha) + theta;
    p.l2 = p.l1 + 0.5 * rho;
    p.r2 = p.l2 + 0.25;
    p.r1 = p.r2 + 0.5 * (1.0 - rho);
    p.w1 = 2.0 * std::numbers::pi / rho;
    p.w2 = 2.0 * std::numbers::pi / (1.0 - rho);
    return p;
}

// Density of analytic piece k in {0..4}, evaluated at x with the piece's
// formula regardless of whether x lies inside the piece. Used for the
// two-sided breakpoint continuity checks.
inline double hard_instance_piece_pdf(int k, double x, const HardInstanceParams& p) {
    switch (k) {
        case 0:
        case 4: return 2.0 - p.alpha;
        case 1: return 1.0 + (1.0 - p.alpha) * std::cos(p.w1 * (x - p.l1));
        case 2: return p.alpha;
        default: return 1.0 + (1.0 - p.alpha) * std::cos(p.w2 * (p.r1 - x));
    }
}

inline double hard_instance_pdf(double x, const HardInstanceParams& p) {
    if (x < 0.0 || x > 1.0) return 0.0;
    if (x <= p.l1 || x >= p.r1) return 2.0 - p.alpha;
    if (x <= p.l2) return hard_instance_piece_pdf(1, x, p);
    if (x <= p.r2) return p.alpha;
    return hard_instance_piece_pdf(3, x, p);
}

// CDF and int_0^x F values at the piece boundaries; shared by the cdf,
// quantile and cdf_integral evaluators.
struct HardInstanceAnchors {
    double F1 = 0, F2 = 0, F3 = 0, F4 = 0;
    double G1 = 0, G2 = 0, G3 = 0, G4 = 0;
};

inline HardInstanceAnchors hard_instance_anchors(const HardInstanceParams& p) {
    const double k = 1.0 - p.alpha;
    const double s2 = 0.5 * p.rho;          // width of the left bridge
    const double s4 = 0.5 * (1.0 - p.rho);  // width of the right bridge
    HardInstanceAnchors a;
    a.F1 = (2.0 - p.alpha) * p.l1;
    a.F2 = a.F1 + s2;  // the sine term vanishes: w1 * s2 = pi
    a.F3 = a.F2 + 0.25 * p.alpha;
    a.F4 = a.F3 + s4;
    a.G1 = 0.5 * (2.0 - p.alpha) * p.l1 * p.l1;
    a.G2 = a.G1 + a.F1 * s2 + 0.5 * s2 * s2 + k / (p.w1 * p.w1) * (1.0 - std::cos(p.w1 * s2));
    a.G3 = a.G2 + 0.25 * a.F2 + p.alpha / 32.0;
    a.G4 = a.G3 + a.F3 * s4 + 0.5 * s4 * s4 -
           k / (p.w2 * p.w2) * (1.0 - std::cos(p.w2 * s4));
    return a;
}

inline double hard_instance_cdf(double x, const HardInstanceParams& p,
                                const HardInstanceAnchors& a) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double k = 1.0 - p.alpha;
    if (x <= p.l1) return (2.0 - p.alpha) * x;
    if (x <= p.l2) {
        const double s = x - p.l1;
        return a.F1 + s + k / p.w1 * std::sin(p.w1 * s);
    }
    if (x <= p.r2) return a.F2 + p.alpha * (x - p.l2);
    if (x <= p.r1) {
        const double s = x - p.r2;
        return a.F3 + s - k / p.w2 * std::sin(p.w2 * (p.r1 - x));
    }
    return a.F4 + (2.0 - p.alpha) * (x - p.r1);
}

inline double hard_instance_cdf(double x, const HardInstanceParams& p) {
    return hard_instance_cdf(x, p, hard_instance_anchors(p));
}

inline double hard_instance_cdf_integral(double x, const HardInstanceParams& p,
                                         const HardInstanceAnchors& a) {
    if (x <= 0.0) return 0.0;
    const double k = 1.0 - p.alpha;
    if (x <= p.l1) return 0.5 * (2.0 - p.alpha) * x * x;
    if (x <= p.l2) {
        const double s = x - p.l1;
        return a.G1 + a.F1 * s + 0.5 * s * s + k / (p.w1 * p.w1) * (1.0 - std::cos(p.w1 * s));
    }
    if (x <= p.r2) {
        const double s = x - p.l2;
        return a.G2 + a.F2 * s + 0.5 * p.alpha * s * s;
    }
    if (x <= p.r1) {
        const double s = x - p.r2;
        const double s4 = 0.5 * (1.0 - p.rho);
        return a.G3 + a.F3 * s + 0.5 * s * s -
               k / (p.w2 * p.w2) * (std::cos(p.w2 * (s4 - s)) - std::cos(p.w2 * s4));
    }
    if (x <= 1.0) {
        const double s = x - p.r1;
        return a.G4 + a.F4 * s + 0.5 * (2.0 - p.alpha) * s * s;
    }
    const double g1 = a.G4 + a.F4 * (1.0 - p.r1) + 0.5 * (2.0 - p.alpha) * (1.0 - p.r1) * (1.0 - p.r1);
    return g1 + (x - 1.0);
}

inline double hard_instance_cdf_integral(double x, const HardInstanceParams& p) {
    return hard_instance_cdf_integral(x, p, hard_instance_anchors(p));
}

// Inverse CDF. Linear pieces invert in closed form; the cosine bridges are
// solved by bisection on the per-piece CDF (absolute tolerance 1e-12, at
// most 200 iterations).
inline double hard_instance_quantile(double prob, const HardInstanceParams& p,
                                     const HardInstanceAnchors& a) {
    if (prob <= 0.0) return 0.0;
    if (prob >= 1.0) return 1.0;
    const double k = 1.0 - p.alpha;
    if (prob <= a.F1) return prob / (2.0 - p.alpha);
    if (prob <= a.F2) {
        const auto piece_cdf_geq = [&](double x) {
            const double s = x - p.l1;
            return a.F1 + s + k / p.w1 * std::sin(p.w1 * s) >= prob;
        };
        return bisect_first_true(piece_cdf_geq, p.l1, p.l2);
    }
    if (prob <= a.F3) return p.l2 + (prob - a.F2) / p.alpha;
    if (prob <= a.F4) {
        const auto piece_cdf_geq = [&](double x) {
            const double s = x - p.r2;
            return a.F3 + s - k / p.w2 * std::sin(p.w2 * (p.r1 - x)) >= prob;
        };
        return bisect_first_true(piece_cdf_geq, p.r2, p.r1);
    }
    // rounding in the anchors can push the last piece a few ulp past 1
    return std::min(1.0, p.r1 + (prob - a.F4) / (2.0 - p.alpha));
}

inline double hard_instance_quantile(double prob, const HardInstanceParams& p) {
    return hard_instance_quantile(prob, p, hard_instance_anchors(p));
}

// Closed-form rho-quantile: x*(theta) = rho/2 + (4 rho - alpha)/(16 - 8 alpha)
// + 1/8 - (2/alpha - 2) theta. Always interior to the flat-alpha piece.
inline double hard_instance_optimal(const HardInstanceParams& p) {
    return 0.5 * p.rho + (4.0 * p.rho - p.alpha) / (16.0 - 8.0 * p.alpha) + 0.125 -
           (2.0 / p.alpha - 2.0) * p.theta;
}

// Score d/dtheta log f(x|theta). The breakpoints shift rigidly with theta,
// so the score vanishes on the flat pieces and equals
// +- (1-alpha) w sin(.) / f on the bridges.
inline double hard_instance_score(double x, const HardInstanceParams& p) {
    if (x <= p.l1 || x >= p.r1) return 0.0;
    const double k = 1.0 - p.alpha;
    if (x < p.l2) {
        const double s = p.w1 * (x - p.l1);
        return k * p.w1 * std::sin(s) / (1.0 + k * std::cos(s));
    }
    if (x <= p.r2) return 0.0;
    const double s = p.w2 * (p.r1 - x);
    return -k * p.w2 * std::sin(s) / (1.0 + k * std::cos(s));
}

class HardInstanceDemand final : public DemandModel {
public:
    explicit HardInstanceDemand(const HardInstanceParams& p)
        : p_(p), anchors_(hard_instance_anchors(p)) {}

    HardInstanceDemand(double alpha, double rho, double theta)
        : HardInstanceDemand(hard_instance_breakpoints(alpha, rho, theta)) {}

    double pdf(double x) const override { return hard_instance_pdf(x, p_); }
    double cdf(double x) const override { return hard_instance_cdf(x, p_, anchors_); }
    double quantile(double p) const override { return hard_instance_quantile(p, p_, anchors_); }
    double upper_support() const override { return 1.0; }

    std::vector<double> pieces() const override {
        return {0.0, p_.l1, p_.l2, p_.r2, p_.r1, 1.0};
    }

    double cdf_integral(double x) const override {
        return hard_instance_cdf_integral(x, p_, anchors_);
    }

    double optimal_quantity() const { return hard_instance_optimal(p_); }
    const HardInstanceParams& params() const { return p_; }

private:
    HardInstanceParams p_;
    HardInstanceAnchors anchors_;
};

// ---------------------------------------------------------------------------
// Prior over the shift parameter: q(theta) = (20/alpha) cos^2(10 pi theta/alpha)
// on [-alpha/20, alpha/20]. The density vanishes at both endpoints.
// ---------------------------------------------------------------------------

inline double prior_pdf(double theta, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("prior_pdf: alpha must be positive");
    if (std::abs(theta) > hard_instance_theta_bound(alpha)) return 0.0;
    const double c = std::cos(10.0 * std::numbers::pi * theta / alpha);
    return 20.0 / alpha * c * c;
}

// Antiderivative of q: Q(theta) = 10 theta/alpha + 1/2 + sin(20 pi theta/alpha)/(2 pi).
inline double prior_cdf(double theta, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("prior_cdf: alpha must be positive");
    const double half = hard_instance_theta_bound(alpha);
    if (theta <= -half) return 0.0;
    if (theta >= half) return 1.0;
    return 10.0 * theta / alpha + 0.5 +
           std::sin(20.0 * std::numbers::pi * theta / alpha) / (2.0 * std::numbers::pi);
}

inline double prior_quantile(double p, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("prior_quantile: alpha must be positive");
    const double half = hard_instance_theta_bound(alpha);
    if (p <= 0.0) return -half;
    if (p >= 1.0) return half;
    return bisect_first_true([&](double t) { return prior_cdf(t, alpha) >= p; }, -half, half);
}

inline double prior_sample(Philox4x32& rng, double alpha) {
    return prior_quantile(rng.next_double(), alpha);
}

// ---------------------------------------------------------------------------
// Locally flat demand on [0, 1]
// ---------------------------------------------------------------------------
//
// Piecewise-constant density with an exact-alpha plateau of half-width beta
// centered at m = 1/2, thin gap density delta on (1/4, 1/2 - beta) and
// (1/2 + beta, 3/4), and outer blocks on [0, 1/4], [3/4, 1] whose heights
// solve F(1/2) = rho. The rho-quantile is then exactly 1/2 and the density
// clears alpha only on [1/2 - beta, 1/2 + beta], so the induced cost is
// strongly convex only locally.

class LocalFlatDemand final : public DemandModel {
public:
    // outer_density <= 0 selects the default delta = alpha * beta.
    LocalFlatDemand(double alpha, double beta, double rho, double outer_density = 0.0)
        : alpha_(alpha), beta_(beta), rho_(rho) {
        if (!(alpha > 0.0)) throw std::invalid_argument("LocalFlatDemand: alpha must be positive");
        if (!(beta > 0.0 && beta <= 0.25))
            throw std::invalid_argument("LocalFlatDemand: beta must lie in (0, 1/4]");
        if (!(rho > 0.0 && rho < 1.0))
            throw std::invalid_argument("LocalFlatDemand: rho must lie in (0, 1)");
        delta_ = outer_density > 0.0 ? outer_density : alpha * beta;
        const double gap_mass = delta_ * (0.25 - beta);
        h_left_ = 4.0 * (rho - alpha * beta - gap_mass);
        h_right_ = 4.0 * (1.0 - rho - alpha * beta - gap_mass);
        if (h_left_ < delta_ || h_right_ < delta_)
            throw std::invalid_argument(
                "LocalFlatDemand: infeasible (alpha, beta, rho, delta): block heights "
                "4*(rho - alpha*beta - delta*(1/4 - beta)) and "
                "4*(1 - rho - alpha*beta - delta*(1/4 - beta)) must be >= delta");
        knots_ = {0.0, 0.25, 0.5 - beta, 0.5 + beta, 0.75, 1.0};
        dens_ = {h_left_, delta_, alpha, delta_, h_right_};
        cum_f_.assign(knots_.size(), 0.0);
        cum_g_.assign(knots_.size(), 0.0);
        for (std::size_t i = 1; i < knots_.size(); ++i) {
            const double w = knots_[i] - knots_[i - 1];
            cum_f_[i] = cum_f_[i - 1] + dens_[i - 1] * w;
            cum_g_[i] = cum_g_[i - 1] + cum_f_[i - 1] * w + 0.5 * dens_[i - 1] * w * w;
        }
    }

    double pdf(double x) const override {
        if (x < 0.0 || x > 1.0) return 0.0;
        // the alpha plateau is the closed interval [1/2 - beta, 1/2 + beta]
        if (x >= 0.5 - beta_ && x <= 0.5 + beta_) return alpha_;
        return dens_[piece_index(x)];
    }

    double cdf(double x) const override {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return 1.0;
        const std::size_t i = piece_index(x);
        return cum_f_[i] + dens_[i] * (x - knots_[i]);
    }

    double quantile(double p) const override {
        if (p <= 0.0) return 0.0;
        if (p >= 1.0) return 1.0;
        std::size_t i = 0;
        while (i + 2 < cum_f_.size() && p > cum_f_[i + 1]) ++i;
        return std::min(1.0, knots_[i] + (p - cum_f_[i]) / dens_[i]);
    }

    double upper_support() const override { return 1.0; }

    std::vector<double> pieces() const override { return knots_; }

    double cdf_integral(double x) const override {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return cum_g_.back() + (x - 1.0);
        const std::size_t i = piece_index(x);
        const double s = x - knots_[i];
        return cum_g_[i] + cum_f_[i] * s + 0.5 * dens_[i] * s * s;
    }

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double rho() const { return rho_; }
    double outer_density() const { return delta_; }
    double left_height() const { return h_left_; }
    double right_height() const { return h_right_; }

private:
    std::size_t piece_index(double x) const {
        std::size_t i = 0;
        while (i + 2 < knots_.size() && x > knots_[i + 1]) ++i;
        return i;
    }

    double alpha_, beta_, rho_, delta_;
    double h_left_ = 0.0, h_right_ = 0.0;
    std::vector<double> knots_;
    std::vector<double> dens_;
    std::vector<double> cum_f_;  // F at knots
    std::vector<double> cum_g_;  // int_0^knot F
};

} // namespace nvlab
