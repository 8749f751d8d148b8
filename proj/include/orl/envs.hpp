#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "orl/rng.hpp"

namespace orl {

struct StepResult {
    std::vector<double> next_state;
    double reward = 0.0;
    bool terminal = false;  // environment-defined end state
    bool truncated = false; // time limit hit; not a death, bootstrap continues
};

struct EnvSpec {
    int state_dim = 0;
    int actions = 0;
    std::vector<double> rewards; // every value the dynamics can emit
    int max_steps = 0;
    std::string win_predicate;
};

// Minimal episodic environment. All dynamics are deterministic given state
// and action; randomness only enters through reset(seed).
class Env {
public:
    virtual ~Env() = default;
    virtual EnvSpec spec() const = 0;
    virtual std::vector<double> reset(std::uint64_t seed) = 0;
    virtual StepResult step(int action) = 0;
    virtual bool is_win(bool terminal, bool truncated) const = 0;
};

// Cart with a balancing pole. Force +-10 N, Euler integration at dt = 0.02;
// the episode fails once the pole passes 12 degrees or the cart leaves
// +-2.4 m. Reward 1 per surviving step, 0 on the step entering failure;
// 200 surviving steps truncate the episode at the maximum score of 200.
class CartPole final : public Env {
public:
    static constexpr double kGravity = 9.8;
    static constexpr double kCartMass = 1.0;
    static constexpr double kPoleMass = 0.1;
    static constexpr double kHalfLength = 0.5;
    static constexpr double kForceMag = 10.0;
    static constexpr double kTau = 0.02;
    static constexpr double kAngleLimit = 12.0 * std::numbers::pi / 180.0;
    static constexpr double kPositionLimit = 2.4;
    static constexpr int kMaxSteps = 200;

    EnvSpec spec() const override {
        return EnvSpec{4, 2, {0.0, 1.0}, kMaxSteps,
                       "episode reaches the 200-step limit without failing"};
    }

    std::vector<double> reset(std::uint64_t seed) override {
        Rng rng(seed);
        x_ = rng.uniform(-0.05, 0.05);
        x_dot_ = rng.uniform(-0.05, 0.05);
        theta_ = rng.uniform(-0.05, 0.05);
        theta_dot_ = rng.uniform(-0.05, 0.05);
        steps_ = 0;
        return state();
    }

    StepResult step(int action) override {
        if (action < 0 || action > 1) {
            throw std::invalid_argument("invalid action");
        }
        const double force = action == 1 ? kForceMag : -kForceMag;
        const double cos_t = std::cos(theta_);
        const double sin_t = std::sin(theta_);
        const double total_mass = kCartMass + kPoleMass;
        const double pole_mass_length = kPoleMass * kHalfLength;

        const double temp =
            (force + pole_mass_length * theta_dot_ * theta_dot_ * sin_t) / total_mass;
        const double theta_acc =
            (kGravity * sin_t - cos_t * temp) /
            (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
        const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

        x_ += kTau * x_dot_;
        x_dot_ += kTau * x_acc;
        theta_ += kTau * theta_dot_;
        theta_dot_ += kTau * theta_acc;
        ++steps_;

        StepResult result;
        result.terminal =
            std::abs(x_) > kPositionLimit || std::abs(theta_) > kAngleLimit;
        result.truncated = !result.terminal && steps_ >= kMaxSteps;
        result.reward = result.terminal ? 0.0 : 1.0;
        result.next_state = state();
        return result;
    }

    bool is_win(bool terminal, bool truncated) const override {
        return truncated && !terminal;
    }

    void set_state(double x, double x_dot, double theta, double theta_dot) {
        x_ = x;
        x_dot_ = x_dot;
        theta_ = theta;
        theta_dot_ = theta_dot;
        steps_ = 0;
    }

private:
    std::vector<double> state() const { return {x_, x_dot_, theta_, theta_dot_}; }

    double x_ = 0.0, x_dot_ = 0.0, theta_ = 0.0, theta_dot_ = 0.0;
    int steps_ = 0;
};

// Two-link underactuated pendulum; torque on the inner joint must swing the
// tip above the bar. Book dynamics, RK4 at dt = 0.2, velocities clipped to
// +-4pi and +-9pi. Reward -1 per step, 0 on the terminal step; 500 steps
// truncate. Angles are exposed through cos/sin so the observation stays
// continuous.
class Acrobot final : public Env {
public:
    static constexpr double kLinkMass = 1.0;
    static constexpr double kLinkLength = 1.0;
    static constexpr double kLinkCom = 0.5;
    static constexpr double kLinkInertia = 1.0;
    static constexpr double kGravity = 9.8;
    static constexpr double kDt = 0.2;
    static constexpr double kMaxVel1 = 4.0 * std::numbers::pi;
    static constexpr double kMaxVel2 = 9.0 * std::numbers::pi;
    static constexpr int kMaxSteps = 500;

    EnvSpec spec() const override {
        return EnvSpec{6, 3, {-1.0, 0.0}, kMaxSteps,
                       "tip raised above the bar before the 500-step limit"};
    }

    std::vector<double> reset(std::uint64_t seed) override {
        Rng rng(seed);
        theta1_ = rng.uniform(-0.1, 0.1);
        theta2_ = rng.uniform(-0.1, 0.1);
        omega1_ = rng.uniform(-0.1, 0.1);
        omega2_ = rng.uniform(-0.1, 0.1);
        steps_ = 0;
        return state();
    }

    StepResult step(int action) override {
        if (action < 0 || action > 2) {
            throw std::invalid_argument("invalid action");
        }
        const double torque = static_cast<double>(action - 1);

        double y[4] = {theta1_, theta2_, omega1_, omega2_};
        double k1[4], k2[4], k3[4], k4[4], tmp[4];
        derivatives(y, torque, k1);
        for (int i = 0; i < 4; ++i) tmp[i] = y[i] + 0.5 * kDt * k1[i];
        derivatives(tmp, torque, k2);
        for (int i = 0; i < 4; ++i) tmp[i] = y[i] + 0.5 * kDt * k2[i];
        derivatives(tmp, torque, k3);
        for (int i = 0; i < 4; ++i) tmp[i] = y[i] + kDt * k3[i];
        derivatives(tmp, torque, k4);
        for (int i = 0; i < 4; ++i) {
            y[i] += kDt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        theta1_ = y[0];
        theta2_ = y[1];
        omega1_ = std::clamp(y[2], -kMaxVel1, kMaxVel1);
        omega2_ = std::clamp(y[3], -kMaxVel2, kMaxVel2);
        ++steps_;

        StepResult result;
        result.terminal = -std::cos(theta1_) - std::cos(theta1_ + theta2_) > 1.0;
        result.truncated = !result.terminal && steps_ >= kMaxSteps;
        result.reward = result.terminal ? 0.0 : -1.0;
        result.next_state = state();
        return result;
    }

    bool is_win(bool terminal, bool /*truncated*/) const override { return terminal; }

    // Total mechanical energy relative to the hanging rest pose; conserved
    // by the torque-free dynamics, used for integration sanity checks.
    double mechanical_energy() const {
        const double d1 = inertia_d1(theta2_);
        const double d2 = inertia_d2(theta2_);
        const double kinetic = 0.5 * (d1 * omega1_ * omega1_ +
                                      2.0 * d2 * omega1_ * omega2_ +
                                      (kLinkMass * kLinkCom * kLinkCom + kLinkInertia) *
                                          omega2_ * omega2_);
        const double h1 = -kLinkCom * std::cos(theta1_);
        const double h2 =
            -kLinkLength * std::cos(theta1_) - kLinkCom * std::cos(theta1_ + theta2_);
        const double rest = -kLinkCom - (kLinkLength + kLinkCom);
        const double potential = kGravity * (kLinkMass * h1 + kLinkMass * h2 - kLinkMass * rest);
        return kinetic + potential;
    }

    void set_state(double theta1, double theta2, double omega1, double omega2) {
        theta1_ = theta1;
        theta2_ = theta2;
        omega1_ = omega1;
        omega2_ = omega2;
        steps_ = 0;
    }

    double omega1() const { return omega1_; }
    double omega2() const { return omega2_; }

private:
    static double inertia_d1(double theta2) {
        return kLinkMass * kLinkCom * kLinkCom +
               kLinkMass * (kLinkLength * kLinkLength + kLinkCom * kLinkCom +
                            2.0 * kLinkLength * kLinkCom * std::cos(theta2)) +
               2.0 * kLinkInertia;
    }

    static double inertia_d2(double theta2) {
        return kLinkMass * (kLinkCom * kLinkCom + kLinkLength * kLinkCom * std::cos(theta2)) +
               kLinkInertia;
    }

    static void derivatives(const double y[4], double torque, double out[4]) {
        const double theta1 = y[0];
        const double theta2 = y[1];
        const double omega1 = y[2];
        const double omega2 = y[3];
        const double m = kLinkMass;
        const double l1 = kLinkLength;
        const double lc = kLinkCom;
        const double inertia = kLinkInertia;
        const double g = kGravity;
        const double half_pi = std::numbers::pi / 2.0;

        const double d1 = inertia_d1(theta2);
        const double d2 = inertia_d2(theta2);
        const double phi2 = m * lc * g * std::cos(theta1 + theta2 - half_pi);
        const double phi1 = -m * l1 * lc * omega2 * omega2 * std::sin(theta2) -
                            2.0 * m * l1 * lc * omega2 * omega1 * std::sin(theta2) +
                            (m * lc + m * l1) * g * std::cos(theta1 - half_pi) + phi2;
        const double acc2 =
            (torque + d2 / d1 * phi1 - m * l1 * lc * omega1 * omega1 * std::sin(theta2) -
             phi2) /
            (m * lc * lc + inertia - d2 * d2 / d1);
        const double acc1 = -(d2 * acc2 + phi1) / d1;

        out[0] = omega1;
        out[1] = omega2;
        out[2] = acc1;
        out[3] = acc2;
    }

    std::vector<double> state() const {
        return {std::cos(theta1_), std::sin(theta1_), std::cos(theta2_),
                std::sin(theta2_), omega1_, omega2_};
    }

    double theta1_ = 0.0, theta2_ = 0.0, omega1_ = 0.0, omega2_ = 0.0;
    int steps_ = 0;
};

// Five states in a line; start at 0, state 4 terminal. Stepping costs -1,
// entering the goal pays +10, 20 steps truncate. Small enough for exact
// oracles, so it anchors the learner equivalence tests.
class ChainMdp final : public Env {
public:
    static constexpr int kStates = 5;
    static constexpr int kGoal = 4;
    static constexpr int kMaxSteps = 20;

    EnvSpec spec() const override {
        return EnvSpec{1, 2, {-1.0, 10.0}, kMaxSteps,
                       "goal state reached before the 20-step limit"};
    }

    std::vector<double> reset(std::uint64_t /*seed*/) override {
        state_ = 0;
        steps_ = 0;
        return {static_cast<double>(state_)};
    }

    StepResult step(int action) override {
        if (action < 0 || action > 1) {
            throw std::invalid_argument("invalid action");
        }
        state_ = action == 1 ? state_ + 1 : std::max(0, state_ - 1);
        ++steps_;

        StepResult result;
        result.terminal = state_ == kGoal;
        result.truncated = !result.terminal && steps_ >= kMaxSteps;
        result.reward = result.terminal ? 10.0 : -1.0;
        result.next_state = {static_cast<double>(state_)};
        return result;
    }

    bool is_win(bool terminal, bool /*truncated*/) const override { return terminal; }

private:
    int state_ = 0;
    int steps_ = 0;
};

inline std::unique_ptr<Env> make_env(const std::string& name) {
    if (name == "cartpole") return std::make_unique<CartPole>();
    if (name == "acrobot") return std::make_unique<Acrobot>();
    if (name == "chain") return std::make_unique<ChainMdp>();
    throw std::invalid_argument("unknown environment '" + name + "'");
}

} // namespace orl
