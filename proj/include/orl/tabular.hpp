#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "orl/ordinal.hpp"
#include "orl/rng.hpp"

namespace orl {

struct DiscretizerDim {
    double lower = 0.0;
    double upper = 1.0;
    int buckets = 1;
};

// Equal-width bucketing per state feature, combined into one table index by
// mixed-radix encoding (first dimension most significant). Out-of-range
// features are clipped to their bounds.
class Discretizer {
public:
    explicit Discretizer(std::vector<DiscretizerDim> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) {
            throw std::invalid_argument("discretizer needs at least one dimension");
        }
        long total = 1;
        for (const auto& d : dims_) {
            if (d.buckets < 1 || !(d.lower < d.upper)) {
                throw std::invalid_argument("bad discretizer dimension");
            }
            total *= d.buckets;
            if (total > (1L << 31)) {
                throw std::invalid_argument("state space too large");
            }
        }
        states_ = static_cast<int>(total);
    }

    int dims() const { return static_cast<int>(dims_.size()); }
    int states() const { return states_; }

    int index_of(std::span<const double> state) const {
        if (state.size() != dims_.size()) {
            throw std::invalid_argument("state dimension mismatch");
        }
        int index = 0;
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            const auto& d = dims_[i];
            double x = std::clamp(state[i], d.lower, d.upper);
            int bucket = static_cast<int>((x - d.lower) / (d.upper - d.lower) *
                                          static_cast<double>(d.buckets));
            bucket = std::clamp(bucket, 0, d.buckets - 1);
            index = index * d.buckets + bucket;
        }
        return index;
    }

private:
    std::vector<DiscretizerDim> dims_;
    int states_ = 1;
};

// Ten buckets per feature over clipped position, velocity, angle and
// angular velocity; 10^4 states.
inline Discretizer cartpole_discretizer() {
    return Discretizer({{-2.4, 2.4, 10}, {-3.0, 3.0, 10}, {-0.21, 0.21, 10}, {-3.5, 3.5, 10}});
}

// Six buckets per feature over the cos/sin pairs and the clipped angular
// velocities; 6^6 states.
inline Discretizer acrobot_discretizer() {
    const double v1 = 4.0 * std::numbers::pi;
    const double v2 = 9.0 * std::numbers::pi;
    return Discretizer({{-1.0, 1.0, 6},
                        {-1.0, 1.0, 6},
                        {-1.0, 1.0, 6},
                        {-1.0, 1.0, 6},
                        {-v1, v1, 6},
                        {-v2, v2, 6}});
}

// The chain state is already an integer index.
inline Discretizer chain_discretizer() {
    return Discretizer({{0.0, 5.0, 5}});
}

class NumericQTable {
public:
    NumericQTable(int states, int actions)
        : states_(states), actions_(actions),
          q_(static_cast<std::size_t>(states) * actions, 0.0) {
        if (states < 1 || actions < 1) {
            throw std::invalid_argument("table shape must be positive");
        }
    }

    int states() const { return states_; }
    int actions() const { return actions_; }

    double at(int s, int a) const { return q_[offset(s, a)]; }
    double& at(int s, int a) { return q_[offset(s, a)]; }

    std::span<const double> row(int s) const {
        return std::span<const double>(q_).subspan(offset(s, 0), static_cast<std::size_t>(actions_));
    }

    std::span<const double> raw() const { return q_; }

private:
    std::size_t offset(int s, int a) const {
        return static_cast<std::size_t>(s) * actions_ + a;
    }

    int states_;
    int actions_;
    std::vector<double> q_;
};

class OrdinalQTable {
public:
    OrdinalQTable(int states, int actions, int tiers)
        : states_(states), actions_(actions), tiers_(tiers),
          mass_(static_cast<std::size_t>(states) * actions * tiers, 0.0) {
        if (states < 1 || actions < 1 || tiers < 1) {
            throw std::invalid_argument("table shape must be positive");
        }
    }

    int states() const { return states_; }
    int actions() const { return actions_; }
    int tiers() const { return tiers_; }

    std::span<double> distribution(int s, int a) {
        return std::span<double>(mass_).subspan(offset(s, a), static_cast<std::size_t>(tiers_));
    }
    std::span<const double> distribution(int s, int a) const {
        return std::span<const double>(mass_).subspan(offset(s, a),
                                                      static_cast<std::size_t>(tiers_));
    }

    std::span<const double> raw() const { return mass_; }

private:
    std::size_t offset(int s, int a) const {
        return (static_cast<std::size_t>(s) * actions_ + a) * tiers_;
    }

    int states_;
    int actions_;
    int tiers_;
    std::vector<double> mass_;
};

inline void numeric_q_update(NumericQTable& table, int s, int a, double reward, int s_next,
                             bool terminal, double alpha, double gamma) {
    check_learning_rates(alpha, gamma);
    double target = reward;
    if (!terminal) {
        const auto next_row = table.row(s_next);
        double best = next_row[0];
        for (double q : next_row) {
            best = std::max(best, q);
        }
        target += gamma * best;
    }
    double& q = table.at(s, a);
    q += alpha * (target - q);
}

// Superiority scores of every action in state s, from the normalized stored
// distributions.
inline void ordinal_action_scores(const OrdinalQTable& table, int s, std::span<double> out) {
    const int k = table.actions();
    const int n = table.tiers();
    std::vector<double> probs(static_cast<std::size_t>(k) * n);
    for (int a = 0; a < k; ++a) {
        normalize_into(table.distribution(s, a),
                       std::span<double>(probs).subspan(static_cast<std::size_t>(a) * n,
                                                        static_cast<std::size_t>(n)));
    }
    superiority_scores_into(probs, k, n, out);
}

// One learning step: pick the successor action greedily by statistical
// superiority, then interpolate D(s, a) toward the bootstrapped target.
inline void ordinal_q_step(OrdinalQTable& table, int s, int a, int tier, int s_next,
                           bool terminal, double alpha, double gamma, Rng& rng) {
    check_learning_rates(alpha, gamma);
    if (terminal) {
        ordinal_update_inplace(table.distribution(s, a), tier, {}, alpha, gamma, true);
        return;
    }
    std::vector<double> scores(static_cast<std::size_t>(table.actions()));
    ordinal_action_scores(table, s_next, scores);
    const int best = greedy_action(scores, rng);
    if (s == s_next && a == best) {
        // Self-bootstrap aliases the updated row; work on a copy.
        std::vector<double> next(table.distribution(s_next, best).begin(),
                                 table.distribution(s_next, best).end());
        ordinal_update_inplace(table.distribution(s, a), tier, next, alpha, gamma, false);
        return;
    }
    ordinal_update_inplace(table.distribution(s, a), tier,
                           table.distribution(s_next, best), alpha, gamma, false);
}

inline int act(const NumericQTable& table, int s, double epsilon, Rng& rng) {
    return epsilon_greedy_action(table.row(s), epsilon, rng);
}

inline int act(const OrdinalQTable& table, int s, double epsilon, Rng& rng) {
    std::vector<double> scores(static_cast<std::size_t>(table.actions()));
    ordinal_action_scores(table, s, scores);
    return epsilon_greedy_action(scores, epsilon, rng);
}

namespace detail {

inline std::pair<double, double> top_two(std::span<const double> values) {
    if (values.size() < 2) {
        throw std::invalid_argument("need at least two actions");
    }
    double best = -std::numeric_limits<double>::infinity();
    double second = best;
    for (double v : values) {
        if (v > best) {
            second = best;
            best = v;
        } else if (v > second) {
            second = v;
        }
    }
    return {best, second};
}

} // namespace detail

// Gap between the best and second-best action values. The numeric variant is
// relative to the best Q magnitude; the superiority scale is already
// normalized, so the ordinal variant is absolute.
inline double value_margin(const NumericQTable& table, int s) {
    const auto [best, second] = detail::top_two(table.row(s));
    return (best - second) / (std::abs(best) + 1e-12);
}

inline double value_margin(const OrdinalQTable& table, int s) {
    std::vector<double> scores(static_cast<std::size_t>(table.actions()));
    ordinal_action_scores(table, s, scores);
    const auto [best, second] = detail::top_two(scores);
    return best - second;
}

} // namespace orl
