#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "orl/envs.hpp"

using namespace orl;
using Catch::Approx;

namespace {

double run_episode_return(Env& env, std::uint64_t seed, int action_period) {
    env.reset(seed);
    double total = 0.0;
    for (int t = 0;; ++t) {
        auto res = env.step((t / action_period) % 2);
        total += res.reward;
        if (res.terminal || res.truncated) {
            return total;
        }
    }
}

} // namespace

TEST_CASE("cartpole survives alternating pushes from a quiet start") {
    CartPole env;
    env.reset(3);
    int survived = 0;
    for (int t = 0; t < 200; ++t) {
        auto res = env.step(t % 2);
        if (res.terminal) {
            break;
        }
        ++survived;
    }
    REQUIRE(survived > 20);
}

TEST_CASE("cartpole terminates immediately past the angle threshold") {
    // A 0.3 rad pole is already past 12 degrees; one step ends the episode
    // regardless of the applied force.
    for (int action = 0; action < 2; ++action) {
        CartPole env;
        env.set_state(0.0, 0.0, 0.3, 0.0);
        auto res = env.step(action);
        REQUIRE(res.terminal);
        REQUIRE(res.reward == 0.0);
    }
}

TEST_CASE("cartpole truncates at 200 steps with a full score") {
    // A crude balance controller: push in the direction the pole leans.
    CartPole env;
    auto state = env.reset(1);
    double total = 0.0;
    int steps = 0;
    while (true) {
        const int action = state[2] + 0.25 * state[3] > 0.0 ? 1 : 0;
        auto res = env.step(action);
        total += res.reward;
        ++steps;
        state = res.next_state;
        if (res.terminal || res.truncated) {
            REQUIRE(res.truncated);
            REQUIRE_FALSE(res.terminal);
            break;
        }
    }
    REQUIRE(steps == 200);
    REQUIRE(total == 200.0);
    REQUIRE(env.is_win(false, true));
}

TEST_CASE("acrobot stays below the goal line without torque") {
    Acrobot env;
    env.reset(5);
    for (int t = 0; t < 10; ++t) {
        auto res = env.step(1);
        REQUIRE_FALSE(res.terminal);
    }
}

TEST_CASE("acrobot conserves mechanical energy under torque-free integration") {
    Acrobot env;
    // In-phase swing (the slow linearized mode, theta2 ~ 2.79 theta1); the
    // counter-phase mode is too fast for a clean check at dt = 0.2.
    env.set_state(0.15, 0.4185, 0.0, 0.0);
    const double initial = env.mechanical_energy();
    REQUIRE(initial > 0.1);
    for (int t = 0; t < 100; ++t) {
        env.step(1); // zero torque
        REQUIRE(std::abs(env.mechanical_energy() - initial) < 0.01 * initial);
    }
}

TEST_CASE("acrobot clips angular velocities") {
    Acrobot env;
    env.reset(9);
    Rng rng(9);
    for (int t = 0; t < 2000; ++t) {
        env.step(rng.below(3));
        REQUIRE(std::abs(env.omega1()) <= Acrobot::kMaxVel1 + 1e-12);
        REQUIRE(std::abs(env.omega2()) <= Acrobot::kMaxVel2 + 1e-12);
    }
}

TEST_CASE("chain returns match the path structure") {
    ChainMdp env;
    env.reset(0);
    double total = 0.0;
    int steps = 0;
    StepResult res;
    do {
        res = env.step(1);
        total += res.reward;
        ++steps;
    } while (!res.terminal && !res.truncated);
    REQUIRE(steps == 4);
    REQUIRE(res.terminal);
    REQUIRE(total == 7.0);

    env.reset(0);
    total = 0.0;
    do {
        res = env.step(0);
        total += res.reward;
    } while (!res.terminal && !res.truncated);
    REQUIRE(res.truncated);
    REQUIRE(total == -20.0);
}

TEST_CASE("environments emit only declared rewards") {
    for (const auto* name : {"cartpole", "acrobot", "chain"}) {
        auto env = make_env(name);
        const auto spec = env->spec();
        const std::set<double> declared(spec.rewards.begin(), spec.rewards.end());
        Rng rng(71);
        env->reset(rng.next_u64());
        for (long t = 0; t < 100000; ++t) {
            auto res = env->step(rng.below(spec.actions));
            REQUIRE(declared.count(res.reward) == 1);
            if (res.terminal || res.truncated) {
                env->reset(rng.next_u64());
            }
        }
    }
}

TEST_CASE("environments are deterministic under a fixed seed") {
    for (const auto* name : {"cartpole", "acrobot", "chain"}) {
        auto a = make_env(name);
        auto b = make_env(name);
        const int actions = a->spec().actions;
        REQUIRE(a->reset(42) == b->reset(42));
        Rng action_rng(5);
        for (int t = 0; t < 500; ++t) {
            const int action = action_rng.below(actions);
            auto ra = a->step(action);
            auto rb = b->step(action);
            REQUIRE(ra.next_state == rb.next_state);
            REQUIRE(ra.reward == rb.reward);
            REQUIRE(ra.terminal == rb.terminal);
            REQUIRE(ra.truncated == rb.truncated);
            if (ra.terminal || ra.truncated) {
                REQUIRE(a->reset(static_cast<std::uint64_t>(t)) ==
                        b->reset(static_cast<std::uint64_t>(t)));
            }
        }
    }
}

TEST_CASE("cartpole never continues past its limits") {
    CartPole env;
    Rng rng(123);
    auto state = env.reset(rng.next_u64());
    for (long t = 0; t < 20000; ++t) {
        auto res = env.step(rng.below(2));
        if (!res.terminal && !res.truncated) {
            REQUIRE(std::abs(res.next_state[0]) <= CartPole::kPositionLimit);
            REQUIRE(std::abs(res.next_state[2]) <= CartPole::kAngleLimit);
        } else {
            state = env.reset(rng.next_u64());
        }
    }
    (void)state;
}

TEST_CASE("make_env rejects unknown names") {
    REQUIRE_THROWS_WITH(make_env("taxi"), "unknown environment 'taxi'");
    REQUIRE_THROWS_AS(make_env("cartpole")->step(7), std::invalid_argument);
}

TEST_CASE("alternating-push episode return is reproducible") {
    CartPole env;
    const double first = run_episode_return(env, 99, 3);
    const double second = run_episode_return(env, 99, 3);
    REQUIRE(first == second);
}
