#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "orl/rng.hpp"

namespace orl {

// Absolute tolerance for matching a numeric reward against a declared reward
// value. Environment rewards are exact constants; this only absorbs
// representation noise.
inline constexpr double kRewardMatchTolerance = 1e-9;

// Order-preserving map from an environment's finite set of numeric rewards to
// ordinal tiers 1..n (1 = worst, n = best).
class TierMap {
public:
    explicit TierMap(std::vector<double> rewards) {
        if (rewards.empty()) {
            throw std::invalid_argument("no rewards");
        }
        for (double r : rewards) {
            if (!std::isfinite(r)) {
                throw std::invalid_argument("invalid reward");
            }
        }
        std::sort(rewards.begin(), rewards.end());
        rewards.erase(std::unique(rewards.begin(), rewards.end()), rewards.end());
        sorted_rewards_ = std::move(rewards);
    }

    int tiers() const { return static_cast<int>(sorted_rewards_.size()); }

    const std::vector<double>& rewards() const { return sorted_rewards_; }

    // 1-based rank of r within the reward set.
    int tier_of(double r) const {
        auto it = std::lower_bound(sorted_rewards_.begin(), sorted_rewards_.end(),
                                   r - kRewardMatchTolerance);
        if (it == sorted_rewards_.end() || std::abs(*it - r) > kRewardMatchTolerance) {
            throw std::invalid_argument("reward not in tier map");
        }
        return static_cast<int>(it - sorted_rewards_.begin()) + 1;
    }

private:
    std::vector<double> sorted_rewards_; // strictly ascending, no duplicates
};

// Reward degradation r -> (r - min) / 100. Order-preserving, minimum maps
// to zero; used to emulate environments with unengineered reward values.
class ChangeOfRewards {
public:
    explicit ChangeOfRewards(std::vector<double> rewards) {
        if (rewards.empty()) {
            throw std::invalid_argument("no rewards");
        }
        for (double r : rewards) {
            if (!std::isfinite(r)) {
                throw std::invalid_argument("invalid reward");
            }
        }
        std::sort(rewards.begin(), rewards.end());
        rewards.erase(std::unique(rewards.begin(), rewards.end()), rewards.end());
        from_ = std::move(rewards);
        to_.reserve(from_.size());
        const double lo = from_.front();
        for (double r : from_) {
            to_.push_back((r - lo) / 100.0);
        }
    }

    const std::vector<double>& original() const { return from_; }
    const std::vector<double>& transformed() const { return to_; }

    double apply(double r) const {
        auto it = std::lower_bound(from_.begin(), from_.end(), r - kRewardMatchTolerance);
        if (it == from_.end() || std::abs(*it - r) > kRewardMatchTolerance) {
            throw std::invalid_argument("reward not in change-of-rewards map");
        }
        return to_[static_cast<std::size_t>(it - from_.begin())];
    }

private:
    std::vector<double> from_;
    std::vector<double> to_;
};

// Accumulated (unnormalized) per-tier reward frequencies for one
// state-action pair.
struct OrdinalDistribution {
    explicit OrdinalDistribution(int tiers) : mass(static_cast<std::size_t>(tiers), 0.0) {
        if (tiers < 1) {
            throw std::invalid_argument("tier count must be positive");
        }
    }

    int tiers() const { return static_cast<int>(mass.size()); }

    std::vector<double> mass;
};

struct ProbabilityVector {
    std::vector<double> probs;

    int tiers() const { return static_cast<int>(probs.size()); }
};

// Normalizes nonnegative mass to probabilities. An all-zero vector maps to
// the uniform distribution so that unvisited state-actions compare as
// indifferent (score 0.5) under the superiority measure.
inline void normalize_into(std::span<const double> mass, std::span<double> out) {
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    if (total > 0.0) {
        for (std::size_t i = 0; i < mass.size(); ++i) {
            out[i] = mass[i] / total;
        }
    } else {
        const double uniform = 1.0 / static_cast<double>(mass.size());
        std::fill(out.begin(), out.end(), uniform);
    }
}

inline ProbabilityVector normalize(std::span<const double> mass) {
    ProbabilityVector p;
    p.probs.resize(mass.size());
    normalize_into(mass, p.probs);
    return p;
}

inline ProbabilityVector normalize(const OrdinalDistribution& d) {
    return normalize(std::span<const double>(d.mass));
}

// Probability that a draw from `a` beats a draw from `b` on the ordinal
// scale, ties counting half.
inline double win_probability(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("tier count mismatch");
    }
    double below = 0.0; // cumulative probability of b strictly below tier o
    double win = 0.0;
    for (std::size_t o = 0; o < a.size(); ++o) {
        win += a[o] * (below + 0.5 * b[o]);
        below += b[o];
    }
    return win;
}

inline double win_probability(const ProbabilityVector& a, const ProbabilityVector& b) {
    return win_probability(std::span<const double>(a.probs), std::span<const double>(b.probs));
}

// Statistical superiority of each of k actions: the winning probability
// averaged against the other k-1 actions. probs holds k stacked probability
// vectors of length n, row-major. Complementary pairs are filled from a
// single pairwise evaluation, so the scores always sum to exactly k/2.
inline void superiority_scores_into(std::span<const double> probs, int k, int n,
                                    std::span<double> out) {
    if (k < 2) {
        throw std::invalid_argument("need at least two actions");
    }
    std::fill(out.begin(), out.begin() + k, 0.0);
    for (int i = 0; i < k; ++i) {
        const auto pi = probs.subspan(static_cast<std::size_t>(i) * n, n);
        for (int j = i + 1; j < k; ++j) {
            const auto pj = probs.subspan(static_cast<std::size_t>(j) * n, n);
            const double w = win_probability(pi, pj);
            out[i] += w;
            out[j] += 1.0 - w;
        }
    }
    const double scale = 1.0 / static_cast<double>(k - 1);
    for (int i = 0; i < k; ++i) {
        out[i] *= scale;
    }
}

inline std::vector<double> superiority_scores(const std::vector<ProbabilityVector>& all) {
    if (all.size() < 2) {
        throw std::invalid_argument("need at least two actions");
    }
    const int k = static_cast<int>(all.size());
    const int n = all.front().tiers();
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(k) * n);
    for (const auto& p : all) {
        if (p.tiers() != n) {
            throw std::invalid_argument("tier count mismatch");
        }
        flat.insert(flat.end(), p.probs.begin(), p.probs.end());
    }
    std::vector<double> scores(static_cast<std::size_t>(k));
    superiority_scores_into(flat, k, n, scores);
    return scores;
}

inline void check_learning_rates(double alpha, double gamma) {
    if (!(alpha >= 0.0) || alpha > 1.0) {
        throw std::invalid_argument("learning rate out of [0, 1]");
    }
    if (gamma < 0.0 || !(gamma < 1.0)) {
        throw std::invalid_argument("discount factor out of [0, 1)");
    }
}

// Bellman-style interpolation of a tier distribution toward the target
// e_tier + gamma * d_next. Terminal transitions have no continuation, so the
// discounted term is dropped. With nonnegative inputs the result stays
// nonnegative (it is a convex combination of nonnegative vectors).
inline void ordinal_update_inplace(std::span<double> d, int tier,
                                   std::span<const double> d_next, double alpha,
                                   double gamma, bool terminal) {
    check_learning_rates(alpha, gamma);
    if (!terminal && d.size() != d_next.size()) {
        throw std::invalid_argument("tier count mismatch");
    }
    if (tier < 1 || tier > static_cast<int>(d.size())) {
        throw std::invalid_argument("tier out of range");
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
        double target = (static_cast<int>(i) == tier - 1) ? 1.0 : 0.0;
        if (!terminal) {
            target += gamma * d_next[i];
        }
        d[i] += alpha * (target - d[i]);
    }
}

inline OrdinalDistribution ordinal_update(const OrdinalDistribution& d, int tier,
                                          const OrdinalDistribution& d_next, double alpha,
                                          double gamma, bool terminal) {
    OrdinalDistribution result = d;
    ordinal_update_inplace(result.mass, tier, d_next.mass, alpha, gamma, terminal);
    return result;
}

// Index of a maximal score; exact ties are broken uniformly at random to
// avoid systematic bias toward low action indices.
inline int greedy_action(std::span<const double> scores, Rng& rng) {
    if (scores.empty()) {
        throw std::invalid_argument("no actions");
    }
    double best = scores[0];
    int ties = 1;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > best) {
            best = scores[i];
            ties = 1;
        } else if (scores[i] == best) {
            ++ties;
        }
    }
    if (ties == 1) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] == best) {
                return static_cast<int>(i);
            }
        }
    }
    int pick = rng.below(ties);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] == best && pick-- == 0) {
            return static_cast<int>(i);
        }
    }
    return static_cast<int>(scores.size()) - 1; // unreachable
}

inline int epsilon_greedy_action(std::span<const double> scores, double epsilon, Rng& rng) {
    if (epsilon < 0.0 || epsilon > 1.0) {
        throw std::invalid_argument("epsilon out of [0, 1]");
    }
    if (scores.empty()) {
        throw std::invalid_argument("no actions");
    }
    if (epsilon > 0.0 && rng.canonical() < epsilon) {
        return rng.below(static_cast<int>(scores.size()));
    }
    return greedy_action(scores, rng);
}

// Linear exploration decay: 1.0 at episode 0 down to `floor` at half the
// total episodes, constant afterwards.
struct EpsilonSchedule {
    int total_episodes = 1;
    double floor = 0.0;

    EpsilonSchedule(int total, double floor_value) : total_episodes(total), floor(floor_value) {
        if (total_episodes < 1) {
            throw std::invalid_argument("total episodes must be positive");
        }
        if (floor < 0.0 || floor > 1.0) {
            throw std::invalid_argument("epsilon floor out of [0, 1]");
        }
    }

    double at(int episode) const {
        if (episode < 0) {
            throw std::invalid_argument("episode must be nonnegative");
        }
        const double half = total_episodes / 2.0;
        if (static_cast<double>(episode) >= half) {
            return floor;
        }
        return 1.0 - (1.0 - floor) * (static_cast<double>(episode) / half);
    }
};

} // namespace orl
