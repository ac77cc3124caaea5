#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "nvlab/cost.hpp"

namespace nvlab {

// ---------------------------------------------------------------------------
// One-shot decision rules
// ---------------------------------------------------------------------------

// Sample-average-approximation decision: argmin of the empirical cost over
// the observed history. For linear costs this is the left rho-quantile of
// the empirical distribution, i.e. the ceil(rho t)-th order statistic; for
// general convex costs the nondecreasing empirical subgradient step
// function is bisected on [0, max(history)], which lands on the smallest
// minimizer and keeps |ghat_t(xhat_t)| within one subgradient jump,
// <= saa_slack()/t.
inline double saa_decide(std::span<const double> history, const CostModel& cost) {
    if (history.empty()) throw std::invalid_argument("saa_decide: history must be nonempty");
    const auto t = history.size();
    if (const auto* lin = dynamic_cast<const LinearCost*>(&cost)) {
        const double rho = lin->critical_fractile();
        if (rho <= 0.0) return 0.0;
        const auto k = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(t)));
        std::vector<double> scratch(history.begin(), history.end());
        std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end());
        return scratch[k - 1];
    }
    const double hi0 = *std::max_element(history.begin(), history.end());
    const auto ghat_nonneg = [&](double x) {
        return empirical_subgradient(x, history, cost) >= 0.0;
    };
    if (hi0 <= 0.0 || ghat_nonneg(0.0)) return 0.0;
    return bisect_first_true(ghat_nonneg, 0.0, hi0, 1e-12 * std::max(1.0, hi0));
}

// Projected stochastic subgradient step. On the i-th sample the iterate
// moves by -subgradient/(strong_convexity * i) and is clamped to [0, d_bar].
struct SgdState {
    double x = 0.0;
    long long steps = 0;
};

inline SgdState sgd_initial_state(double d_bar) {
    if (!(d_bar > 0.0)) throw std::invalid_argument("sgd: d_bar must be positive");
    return SgdState{0.5 * d_bar, 0};
}

inline double sgd_decide(SgdState& state, double new_sample, const CostModel& cost,
                         double strong_convexity, double d_bar) {
    if (!(strong_convexity > 0.0))
        throw std::invalid_argument("sgd: strong convexity parameter must be positive");
    if (!(d_bar > 0.0)) throw std::invalid_argument("sgd: d_bar must be positive");
    ++state.steps;
    const double eta = 1.0 / (strong_convexity * static_cast<double>(state.steps));
    state.x = std::clamp(state.x - eta * cost.subgradient(state.x, new_sample), 0.0, d_bar);
    return state.x;
}

// Uniform-demand policy (1 - rho) min(history) + rho max(history); the
// plug-in rho-quantile of the fitted uniform distribution.
inline double mle_uniform_decide(std::span<const double> history, double rho) {
    if (history.empty()) throw std::invalid_argument("mle_uniform_decide: history must be nonempty");
    if (!(rho >= 0.0 && rho <= 1.0))
        throw std::invalid_argument("mle_uniform_decide: rho must lie in [0, 1]");
    const auto [lo, hi] = std::minmax_element(history.begin(), history.end());
    return (1.0 - rho) * *lo + rho * *hi;
}

// ---------------------------------------------------------------------------
// Streaming policies
// ---------------------------------------------------------------------------

// Policies consume one demand sample per period via observe() and report the
// current order quantity via decide(). The period-t decision sees t samples,
// so decide() requires at least one observation. SAA and MLE policies are
// pure functions of the observed multiset; SGD carries per-trajectory state
// and must not be shared across replications.
class Policy {
public:
    virtual ~Policy() = default;
    virtual void observe(double d) = 0;
    virtual double decide() const = 0;
};

// Streaming tracker of the k-th smallest element with a per-step target k:
// a max-heap of the k smallest and a min-heap of the rest.
class RunningQuantile {
public:
    void insert(double d, std::size_t k) {
        if (low_.empty() || d <= low_.top())
            low_.push(d);
        else
            high_.push(d);
        while (low_.size() > k) {
            high_.push(low_.top());
            low_.pop();
        }
        while (low_.size() < k && !high_.empty()) {
            low_.push(high_.top());
            high_.pop();
        }
    }

    // k-th smallest of everything inserted so far (k >= 1 required).
    double kth() const {
        if (low_.empty()) throw std::logic_error("RunningQuantile: empty");
        return low_.top();
    }

    std::size_t size() const { return low_.size() + high_.size(); }

private:
    std::priority_queue<double> low_;
    std::priority_queue<double, std::vector<double>, std::greater<>> high_;
};

class SaaPolicy final : public Policy {
public:
    explicit SaaPolicy(const CostModel& cost) : cost_(&cost) {
        if (const auto* lin = dynamic_cast<const LinearCost*>(cost_))
            rho_ = lin->critical_fractile();
        else
            rho_ = -1.0;
    }

    void observe(double d) override {
        ++count_;
        if (rho_ >= 0.0)
            quantile_.insert(d, order_target());
        else
            history_.push_back(d);
    }

    double decide() const override {
        if (count_ == 0) throw std::logic_error("SaaPolicy: decide before any observation");
        if (rho_ >= 0.0) {
            const std::size_t k = order_target();
            return k == 0 ? 0.0 : quantile_.kth();
        }
        return saa_decide(history_, *cost_);
    }

private:
    std::size_t order_target() const {
        if (rho_ <= 0.0) return 0;
        return static_cast<std::size_t>(std::ceil(rho_ * static_cast<double>(count_)));
    }

    const CostModel* cost_;
    double rho_ = -1.0;
    std::size_t count_ = 0;
    RunningQuantile quantile_;
    std::vector<double> history_;
};

class SgdPolicy final : public Policy {
public:
    SgdPolicy(const CostModel& cost, double strong_convexity, double d_bar)
        : cost_(&cost), strong_convexity_(strong_convexity), d_bar_(d_bar),
          state_(sgd_initial_state(d_bar)) {
        if (!(strong_convexity > 0.0))
            throw std::invalid_argument("sgd: strong convexity parameter must be positive");
    }

    void observe(double d) override {
        sgd_decide(state_, d, *cost_, strong_convexity_, d_bar_);
    }

    double decide() const override {
        if (state_.steps == 0) throw std::logic_error("SgdPolicy: decide before any observation");
        return state_.x;
    }

private:
    const CostModel* cost_;
    double strong_convexity_;
    double d_bar_;
    SgdState state_;
};

class MleUniformPolicy final : public Policy {
public:
    explicit MleUniformPolicy(double rho) : rho_(rho) {
        if (!(rho >= 0.0 && rho <= 1.0))
            throw std::invalid_argument("mle_uniform: rho must lie in [0, 1]");
    }

    void observe(double d) override {
        if (count_ == 0) {
            min_ = max_ = d;
        } else {
            min_ = std::min(min_, d);
            max_ = std::max(max_, d);
        }
        ++count_;
    }

    double decide() const override {
        if (count_ == 0) throw std::logic_error("MleUniformPolicy: decide before any observation");
        return (1.0 - rho_) * min_ + rho_ * max_;
    }

private:
    double rho_;
    double min_ = 0.0, max_ = 0.0;
    std::size_t count_ = 0;
};

// Fixed decision; used as the zero-regret reference policy in tests.
class ClairvoyantPolicy final : public Policy {
public:
    explicit ClairvoyantPolicy(double x) : x_(x) {}
    void observe(double) override {}
    double decide() const override { return x_; }

private:
    double x_;
};

} // namespace nvlab
