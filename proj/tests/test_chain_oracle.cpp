#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "orl/chain_oracle.hpp"
#include "orl/envs.hpp"
#include "orl/ordinal.hpp"

using namespace orl;
using Catch::Approx;

namespace {

// Independent route: evaluate a fixed policy by walking the transition
// table directly and accumulating discounted rewards.
double simulate_policy_return(const SmallMdp& mdp, std::span<const int> policy, int start,
                              double gamma, int horizon) {
    double total = 0.0;
    double discount = 1.0;
    int cur = start;
    for (int t = 0; t < horizon && !mdp.is_terminal(cur); ++t) {
        const int action = policy[static_cast<std::size_t>(cur)];
        total += discount * mdp.reward_of(cur, action);
        discount *= gamma;
        cur = mdp.next_state(cur, action);
    }
    return total;
}

std::vector<double> simulate_tier_distribution(const SmallMdp& mdp, const TierMap& tiers,
                                               std::span<const int> policy, int s, int a,
                                               double gamma, int horizon) {
    std::vector<double> d(static_cast<std::size_t>(tiers.tiers()), 0.0);
    int cur = s;
    int action = a;
    double discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
        d[static_cast<std::size_t>(tiers.tier_of(mdp.reward_of(cur, action)) - 1)] += discount;
        discount *= gamma;
        cur = mdp.next_state(cur, action);
        if (mdp.is_terminal(cur)) {
            break;
        }
        action = policy[static_cast<std::size_t>(cur)];
    }
    return d;
}

} // namespace

TEST_CASE("chain tabulation mirrors the environment dynamics") {
    const auto mdp = chain_mdp();
    ChainMdp env;
    for (int s = 0; s < mdp.states - 1; ++s) {
        for (int a = 0; a < 2; ++a) {
            env.reset(0);
            for (int i = 0; i < s; ++i) {
                env.step(1);
            }
            auto res = env.step(a);
            REQUIRE(static_cast<int>(res.next_state[0]) == mdp.next_state(s, a));
            REQUIRE(res.reward == mdp.reward_of(s, a));
            REQUIRE(res.terminal == mdp.is_terminal(mdp.next_state(s, a)));
        }
    }
}

TEST_CASE("value iteration matches hand-derived optimal values") {
    const auto mdp = chain_mdp();
    const auto vi = value_iteration(mdp, 0.9);

    // Always-right values: V(3) = 10, V(s) = -1 + 0.9 V(s+1).
    REQUIRE(vi.values[3] == Approx(10.0).margin(1e-9));
    REQUIRE(vi.values[2] == Approx(8.0).margin(1e-9));
    REQUIRE(vi.values[1] == Approx(6.2).margin(1e-9));
    REQUIRE(vi.values[0] == Approx(4.58).margin(1e-9));
    for (int s = 0; s < 4; ++s) {
        REQUIRE(vi.policy[static_cast<std::size_t>(s)] == 1);
    }
    REQUIRE(vi.q[0 * 2 + 0] == Approx(-1.0 + 0.9 * 4.58).margin(1e-9));
    REQUIRE(vi.q[3 * 2 + 1] == Approx(10.0).margin(1e-9));
}

TEST_CASE("value iteration agrees with exhaustive policy evaluation by rollout") {
    const auto mdp = chain_mdp();
    const double gamma = 0.9;
    const auto vi = value_iteration(mdp, gamma);

    double best_start_value = -1e18;
    for (const auto& policy : all_deterministic_policies(mdp)) {
        const double v = simulate_policy_return(mdp, policy, 0, gamma, 400);
        best_start_value = std::max(best_start_value, v);
    }
    REQUIRE(vi.values[0] == Approx(best_start_value).margin(1e-8));
}

TEST_CASE("exact policy distributions match geometric accumulation and rollout") {
    const auto mdp = chain_mdp();
    const TierMap tiers({-1.0, 10.0});
    const double gamma = 0.9;

    const std::vector<int> always_right{1, 1, 1, 1, 1};
    const auto dists = exact_policy_distributions(mdp, tiers, always_right, gamma);

    // Hand-derived: X_3 = e2, X_2 = e1 + 0.9 X_3, ...
    REQUIRE(dists[3 * 2 + 1] == std::vector<double>{0.0, 1.0});
    REQUIRE(dists[2 * 2 + 1][0] == Approx(1.0).margin(1e-12));
    REQUIRE(dists[2 * 2 + 1][1] == Approx(0.9).margin(1e-12));
    REQUIRE(dists[1 * 2 + 1][0] == Approx(1.9).margin(1e-12));
    REQUIRE(dists[1 * 2 + 1][1] == Approx(0.81).margin(1e-12));
    REQUIRE(dists[0 * 2 + 1][0] == Approx(2.71).margin(1e-12));
    REQUIRE(dists[0 * 2 + 1][1] == Approx(0.729).margin(1e-12));

    // Compare every state-action pair against the simulated rollout.
    for (int s = 0; s < 4; ++s) {
        for (int a = 0; a < 2; ++a) {
            const auto sim = simulate_tier_distribution(mdp, tiers, always_right, s, a, gamma, 400);
            const auto& exact = dists[static_cast<std::size_t>(s) * 2 + a];
            for (int i = 0; i < 2; ++i) {
                REQUIRE(exact[static_cast<std::size_t>(i)] ==
                        Approx(sim[static_cast<std::size_t>(i)]).margin(1e-9));
            }
        }
    }

    // gamma = 0 collapses every distribution to its own tier indicator.
    const auto myopic = exact_policy_distributions(mdp, tiers, always_right, 0.0);
    for (int s = 0; s < 4; ++s) {
        for (int a = 0; a < 2; ++a) {
            const auto& d = myopic[static_cast<std::size_t>(s) * 2 + a];
            double mass = d[0] + d[1];
            REQUIRE(mass == Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("terminal-adjacent pairs are pure tier indicators") {
    const auto mdp = chain_mdp();
    const TierMap tiers({-1.0, 10.0});
    const std::vector<int> always_right{1, 1, 1, 1, 1};
    const auto dists = exact_policy_distributions(mdp, tiers, always_right, 0.9);
    REQUIRE(dists[3 * 2 + 1] == std::vector<double>{0.0, 1.0});
}

TEST_CASE("distribution mass follows the geometric identity") {
    const auto mdp = chain_mdp();
    const TierMap tiers({-1.0, 10.0});
    const double gamma = 0.9;
    for (const auto& policy : all_deterministic_policies(mdp)) {
        const auto dists = exact_policy_distributions(mdp, tiers, policy, gamma);
        for (int s = 0; s < mdp.states; ++s) {
            if (mdp.is_terminal(s)) {
                continue;
            }
            for (int a = 0; a < 2; ++a) {
                const auto& d = dists[static_cast<std::size_t>(s) * 2 + a];
                const double mass = d[0] + d[1];

                // Realized horizon by walking the path directly.
                int cur = mdp.next_state(s, a);
                int horizon = 1;
                std::vector<int> seen;
                bool infinite = false;
                while (!mdp.is_terminal(cur)) {
                    if (std::find(seen.begin(), seen.end(), cur) != seen.end()) {
                        infinite = true;
                        break;
                    }
                    seen.push_back(cur);
                    cur = mdp.next_state(cur, policy[static_cast<std::size_t>(cur)]);
                    ++horizon;
                }
                const double expected =
                    infinite ? 1.0 / (1.0 - gamma)
                             : (1.0 - std::pow(gamma, horizon)) / (1.0 - gamma);
                REQUIRE(mass == Approx(expected).margin(1e-9));
            }
        }
    }
}

TEST_CASE("always-right is the unique ordinal-consistent chain policy") {
    const auto mdp = chain_mdp();
    const TierMap tiers({-1.0, 10.0});
    const auto consistent = ordinal_optimal_policies(mdp, tiers, 0.9);
    REQUIRE(consistent.size() == 1);
    for (int s = 0; s < 4; ++s) {
        REQUIRE(consistent[0][static_cast<std::size_t>(s)] == 1);
    }
}

TEST_CASE("policy enumeration covers the action product") {
    const auto mdp = chain_mdp();
    const auto policies = all_deterministic_policies(mdp);
    REQUIRE(policies.size() == 16); // 2^4 non-terminal states
}
