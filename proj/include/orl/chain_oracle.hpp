#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "orl/envs.hpp"
#include "orl/ordinal.hpp"

namespace orl {

// Fully tabulated deterministic MDP, small enough for exact answers.
struct SmallMdp {
    int states = 0;
    int actions = 0;
    int start = 0;
    std::vector<int> next;          // states x actions
    std::vector<double> reward;     // states x actions
    std::vector<std::uint8_t> terminal; // per state

    int next_state(int s, int a) const { return next[static_cast<std::size_t>(s) * actions + a]; }
    double reward_of(int s, int a) const {
        return reward[static_cast<std::size_t>(s) * actions + a];
    }
    bool is_terminal(int s) const { return terminal[static_cast<std::size_t>(s)] != 0; }

    void validate() const {
        if (states < 1 || actions < 1) {
            throw std::invalid_argument("non-deterministic or empty mdp spec");
        }
        if (next.size() != static_cast<std::size_t>(states) * actions ||
            reward.size() != next.size() ||
            terminal.size() != static_cast<std::size_t>(states)) {
            throw std::invalid_argument("non-deterministic or malformed mdp spec");
        }
        for (int n : next) {
            if (n < 0 || n >= states) {
                throw std::invalid_argument("transition out of range");
            }
        }
    }
};

// Tabulation of the ChainMdp environment dynamics.
inline SmallMdp chain_mdp() {
    SmallMdp mdp;
    mdp.states = ChainMdp::kStates;
    mdp.actions = 2;
    mdp.start = 0;
    mdp.next.resize(static_cast<std::size_t>(mdp.states) * 2);
    mdp.reward.resize(mdp.next.size());
    mdp.terminal.assign(static_cast<std::size_t>(mdp.states), 0);
    mdp.terminal[ChainMdp::kGoal] = 1;
    for (int s = 0; s < mdp.states; ++s) {
        for (int a = 0; a < 2; ++a) {
            const int n = a == 1 ? std::min(s + 1, mdp.states - 1) : std::max(s - 1, 0);
            mdp.next[static_cast<std::size_t>(s) * 2 + a] = n;
            mdp.reward[static_cast<std::size_t>(s) * 2 + a] = n == ChainMdp::kGoal ? 10.0 : -1.0;
        }
    }
    return mdp;
}

struct ValueIterationResult {
    std::vector<double> q;      // states x actions; zero for terminal states
    std::vector<double> values; // per state
    std::vector<int> policy;    // greedy, first maximizer
    int iterations = 0;
};

inline ValueIterationResult value_iteration(const SmallMdp& mdp, double gamma,
                                            double tolerance = 1e-10,
                                            int max_iterations = 1000000) {
    mdp.validate();
    ValueIterationResult result;
    result.values.assign(static_cast<std::size_t>(mdp.states), 0.0);
    std::vector<double> updated(result.values);
    for (result.iterations = 0; result.iterations < max_iterations; ++result.iterations) {
        double change = 0.0;
        for (int s = 0; s < mdp.states; ++s) {
            if (mdp.is_terminal(s)) {
                updated[static_cast<std::size_t>(s)] = 0.0;
                continue;
            }
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < mdp.actions; ++a) {
                const int n = mdp.next_state(s, a);
                const double q = mdp.reward_of(s, a) +
                                 (mdp.is_terminal(n) ? 0.0
                                                     : gamma * result.values[static_cast<std::size_t>(n)]);
                best = std::max(best, q);
            }
            updated[static_cast<std::size_t>(s)] = best;
            change = std::max(change, std::abs(best - result.values[static_cast<std::size_t>(s)]));
        }
        result.values.swap(updated);
        if (change <= tolerance) {
            break;
        }
    }

    result.q.assign(static_cast<std::size_t>(mdp.states) * mdp.actions, 0.0);
    result.policy.assign(static_cast<std::size_t>(mdp.states), 0);
    for (int s = 0; s < mdp.states; ++s) {
        if (mdp.is_terminal(s)) {
            continue;
        }
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.actions; ++a) {
            const int n = mdp.next_state(s, a);
            const double q = mdp.reward_of(s, a) +
                             (mdp.is_terminal(n) ? 0.0
                                                 : gamma * result.values[static_cast<std::size_t>(n)]);
            result.q[static_cast<std::size_t>(s) * mdp.actions + a] = q;
            if (q > best) {
                best = q;
                result.policy[static_cast<std::size_t>(s)] = a;
            }
        }
    }
    return result;
}

// Exact discounted tier-count vectors D(s, a) for taking `a` in `s` once and
// following the fixed deterministic policy afterwards. Paths that never
// reach a terminal state settle into a cycle, whose contribution is the
// closed-form geometric tail.
inline std::vector<std::vector<double>> exact_policy_distributions(
    const SmallMdp& mdp, const TierMap& tiers, std::span<const int> policy, double gamma) {
    mdp.validate();
    if (static_cast<int>(policy.size()) != mdp.states) {
        throw std::invalid_argument("policy size mismatch");
    }
    if (gamma < 0.0 || !(gamma < 1.0)) {
        throw std::invalid_argument("discount factor out of [0, 1)");
    }
    const int n = tiers.tiers();

    // On-policy vectors X[s]: discounted tier counts from state s onward.
    std::vector<std::vector<double>> on_policy(static_cast<std::size_t>(mdp.states));
    for (int s0 = 0; s0 < mdp.states; ++s0) {
        std::vector<double> total(static_cast<std::size_t>(n), 0.0);
        if (mdp.is_terminal(s0)) {
            on_policy[static_cast<std::size_t>(s0)] = std::move(total);
            continue;
        }
        // Walk the policy path, recording each transition's tier until a
        // terminal state or a revisited state (the start of a cycle).
        std::vector<int> first_seen_at(static_cast<std::size_t>(mdp.states), -1);
        std::vector<int> tier_at_step;
        int cur = s0;
        int cycle_start = -1;
        while (!mdp.is_terminal(cur)) {
            if (first_seen_at[static_cast<std::size_t>(cur)] >= 0) {
                cycle_start = first_seen_at[static_cast<std::size_t>(cur)];
                break;
            }
            first_seen_at[static_cast<std::size_t>(cur)] = static_cast<int>(tier_at_step.size());
            const int a = policy[static_cast<std::size_t>(cur)];
            tier_at_step.push_back(tiers.tier_of(mdp.reward_of(cur, a)));
            cur = mdp.next_state(cur, a);
        }
        double discount = 1.0;
        for (std::size_t t = 0; t < tier_at_step.size(); ++t) {
            total[static_cast<std::size_t>(tier_at_step[t] - 1)] += discount;
            discount *= gamma;
        }
        if (cycle_start >= 0) {
            // The first cycle pass is already in `total`; repeated passes
            // multiply its contribution by gamma^L each, a geometric tail.
            const int cycle_len = static_cast<int>(tier_at_step.size()) - cycle_start;
            const double gamma_l = std::pow(gamma, cycle_len);
            const double extra = gamma_l / (1.0 - gamma_l);
            double d = std::pow(gamma, cycle_start);
            for (int step = cycle_start; step < static_cast<int>(tier_at_step.size()); ++step) {
                total[static_cast<std::size_t>(tier_at_step[static_cast<std::size_t>(step)] - 1)] +=
                    extra * d;
                d *= gamma;
            }
        }
        on_policy[static_cast<std::size_t>(s0)] = std::move(total);
    }

    std::vector<std::vector<double>> result(
        static_cast<std::size_t>(mdp.states) * mdp.actions,
        std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int s = 0; s < mdp.states; ++s) {
        if (mdp.is_terminal(s)) {
            continue;
        }
        for (int a = 0; a < mdp.actions; ++a) {
            auto& d = result[static_cast<std::size_t>(s) * mdp.actions + a];
            const int tier = tiers.tier_of(mdp.reward_of(s, a));
            d[static_cast<std::size_t>(tier - 1)] += 1.0;
            const int nxt = mdp.next_state(s, a);
            if (!mdp.is_terminal(nxt)) {
                const auto& cont = on_policy[static_cast<std::size_t>(nxt)];
                for (int i = 0; i < n; ++i) {
                    d[static_cast<std::size_t>(i)] += gamma * cont[static_cast<std::size_t>(i)];
                }
            }
        }
    }
    return result;
}

inline std::vector<std::vector<int>> all_deterministic_policies(const SmallMdp& mdp) {
    mdp.validate();
    std::vector<int> free_states;
    for (int s = 0; s < mdp.states; ++s) {
        if (!mdp.is_terminal(s)) {
            free_states.push_back(s);
        }
    }
    std::vector<std::vector<int>> policies;
    std::vector<int> policy(static_cast<std::size_t>(mdp.states), 0);
    const long combos = static_cast<long>(std::pow(mdp.actions, free_states.size()));
    for (long index = 0; index < combos; ++index) {
        long rest = index;
        for (int s : free_states) {
            policy[static_cast<std::size_t>(s)] = static_cast<int>(rest % mdp.actions);
            rest /= mdp.actions;
        }
        policies.push_back(policy);
    }
    return policies;
}

// Policies that are fixed points of ordinal policy improvement: in every
// non-terminal state the policy's own action maximizes statistical
// superiority among the exact one-step-deviation distributions.
inline std::vector<std::vector<int>> ordinal_optimal_policies(const SmallMdp& mdp,
                                                              const TierMap& tiers,
                                                              double gamma) {
    std::vector<std::vector<int>> consistent;
    for (const auto& policy : all_deterministic_policies(mdp)) {
        const auto dists = exact_policy_distributions(mdp, tiers, policy, gamma);
        bool ok = true;
        for (int s = 0; s < mdp.states && ok; ++s) {
            if (mdp.is_terminal(s)) {
                continue;
            }
            std::vector<ProbabilityVector> probs;
            for (int a = 0; a < mdp.actions; ++a) {
                probs.push_back(normalize(
                    std::span<const double>(dists[static_cast<std::size_t>(s) * mdp.actions + a])));
            }
            const auto scores = superiority_scores(probs);
            double best = scores[0];
            for (double v : scores) best = std::max(best, v);
            if (scores[static_cast<std::size_t>(policy[static_cast<std::size_t>(s)])] <
                best - 1e-12) {
                ok = false;
            }
        }
        if (ok) {
            consistent.push_back(policy);
        }
    }
    return consistent;
}

} // namespace orl
