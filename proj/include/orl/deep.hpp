#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "orl/mlp.hpp"
#include "orl/ordinal.hpp"
#include "orl/rng.hpp"

namespace orl {

// One stored transition. `reward` carries the numeric value for the
// baseline learner, `tier` the ordinal rank for the distribution learner;
// either side simply ignores the other field.
struct Experience {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    int tier = 1;
    std::vector<double> next_state;
    bool terminal = false;
};

// Fixed-capacity ring of experiences; insertion beyond capacity evicts the
// oldest record.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) {
            throw std::invalid_argument("capacity must be positive");
        }
    }

    std::size_t size() const { return ring_.size(); }
    std::size_t capacity() const { return capacity_; }

    void push(Experience e) {
        if (ring_.size() < capacity_) {
            ring_.push_back(std::move(e));
        } else {
            ring_[write_] = std::move(e);
        }
        write_ = (write_ + 1) % capacity_;
    }

    const Experience& at(std::size_t index) const { return ring_[index]; }

    // Uniform sample without replacement of min(batch, size) indices
    // (Floyd's subset sampling; batch sizes stay small).
    void sample_indices(std::size_t batch, Rng& rng, std::vector<std::size_t>& out) const {
        if (ring_.empty()) {
            throw std::runtime_error("nothing to sample");
        }
        const std::size_t count = std::min(batch, ring_.size());
        out.clear();
        out.reserve(count);
        for (std::size_t j = ring_.size() - count; j < ring_.size(); ++j) {
            const std::size_t t = static_cast<std::size_t>(rng.below(static_cast<int>(j) + 1));
            if (std::find(out.begin(), out.end(), t) != out.end()) {
                out.push_back(j);
            } else {
                out.push_back(t);
            }
        }
    }

    std::vector<Experience> sample(std::size_t batch, Rng& rng) const {
        std::vector<std::size_t> indices;
        sample_indices(batch, rng, indices);
        std::vector<Experience> result;
        result.reserve(indices.size());
        for (std::size_t i : indices) {
            result.push_back(ring_[i]);
        }
        return result;
    }

private:
    std::size_t capacity_;
    std::size_t write_ = 0;
    std::vector<Experience> ring_;
};

struct DqnConfig {
    double learning_rate = 0.0005;
    double gamma = 0.9;
    std::size_t memory = 200000;
    int batch = 64;
    int sync_every = 300; // batch updates between target refreshes
    std::vector<int> hidden = {64, 64};
};

// Decision-time probabilities from raw network outputs: negatives clamp to
// zero, then the mass normalizes (all-zero falls back to uniform). Isolated
// here so the clamping rule can be studied in one place; regression targets
// never pass through it.
inline void decision_probabilities(std::span<const double> raw, std::span<double> out) {
    double total = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = raw[i] > 0.0 ? raw[i] : 0.0;
        total += out[i];
    }
    if (total > 0.0) {
        for (std::size_t i = 0; i < raw.size(); ++i) {
            out[i] /= total;
        }
    } else {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(raw.size()));
    }
}

namespace detail {

inline void write_manifest_line(std::ostream& out, int action, bool eval) {
    out << "action=" << action << " role=" << (eval ? "eval" : "target") << '\n';
}

inline void expect_manifest_line(std::istream& in, int action, bool eval) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("truncated checkpoint");
    }
    const std::string expected =
        "action=" + std::to_string(action) + " role=" + (eval ? "eval" : "target");
    if (line != expected) {
        throw std::runtime_error("unexpected checkpoint manifest line '" + line + "'");
    }
}

} // namespace detail

// Baseline deep learner: one evaluation/target pair with a Q-value output
// per action, trained on replayed transitions with double decoupling (the
// evaluation network picks the successor action, the target network prices
// it).
class NumericDqn {
public:
    NumericDqn(int state_dim, int actions, const DqnConfig& config, std::uint64_t seed)
        : config_(config),
          actions_(actions),
          eval_(state_dim, config.hidden, actions, seed_combine(seed, 0)),
          target_(eval_),
          adam_(eval_, config.learning_rate),
          buffer_(config.memory),
          grad_(eval_.parameter_count(), 0.0) {
        if (actions < 2) {
            throw std::invalid_argument("need at least two actions");
        }
    }

    int actions() const { return actions_; }
    const DqnConfig& config() const { return config_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    long batches_fit() const { return batches_fit_; }

    Mlp& evaluation_net() { return eval_; }
    const Mlp& evaluation_net() const { return eval_; }
    Mlp& target_net() { return target_; }
    const Mlp& target_net() const { return target_; }

    void q_values(std::span<const double> state, std::span<double> out) {
        eval_.forward(state, out, ws_);
    }

    int act(std::span<const double> state, double epsilon, Rng& rng) {
        std::vector<double> q(static_cast<std::size_t>(actions_));
        q_values(state, q);
        return epsilon_greedy_action(q, epsilon, rng);
    }

    double margin(std::span<const double> state) {
        std::vector<double> q(static_cast<std::size_t>(actions_));
        q_values(state, q);
        double best = q[0], second = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < q.size(); ++i) {
            if (q[i] > best) {
                second = best;
                best = q[i];
            } else if (q[i] > second) {
                second = q[i];
            }
        }
        return (best - second) / (std::abs(best) + 1e-12);
    }

    void observe(Experience e) { buffer_.push(std::move(e)); }

    bool ready() const { return buffer_.size() >= static_cast<std::size_t>(config_.batch); }

    // One replay step once the warm-up threshold is met.
    std::optional<double> maybe_replay(Rng& rng) {
        if (!ready()) {
            return std::nullopt;
        }
        return replay(rng);
    }

    double replay(Rng& rng) {
        buffer_.sample_indices(static_cast<std::size_t>(config_.batch), rng, indices_);
        std::fill(grad_.begin(), grad_.end(), 0.0);
        std::vector<double> q_next(static_cast<std::size_t>(actions_));
        std::vector<double> target_vec(static_cast<std::size_t>(actions_), 0.0);
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(actions_), 0);
        double loss = 0.0;
        for (std::size_t index : indices_) {
            const Experience& e = buffer_.at(index);
            double target_value = e.reward;
            if (!e.terminal) {
                // Double decoupling: argmax under the evaluation network,
                // value under the target network.
                eval_.forward(e.next_state, q_next, ws_);
                int best = 0;
                for (int a = 1; a < actions_; ++a) {
                    if (q_next[static_cast<std::size_t>(a)] >
                        q_next[static_cast<std::size_t>(best)]) {
                        best = a;
                    }
                }
                target_.forward(e.next_state, q_next, ws_);
                target_value += config_.gamma * q_next[static_cast<std::size_t>(best)];
            }
            std::fill(mask.begin(), mask.end(), 0);
            mask[static_cast<std::size_t>(e.action)] = 1;
            target_vec[static_cast<std::size_t>(e.action)] = target_value;
            loss += eval_.loss_and_gradient(e.state, target_vec, mask, grad_, ws_);
        }
        const double scale = 1.0 / static_cast<double>(indices_.size());
        for (double& g : grad_) {
            g *= scale;
        }
        adam_step(eval_, grad_, adam_);
        ++batches_fit_;
        if (batches_fit_ % config_.sync_every == 0) {
            sync_target();
        }
        return loss * scale;
    }

    void save_checkpoint(std::ostream& out) const {
        detail::write_manifest_line(out, 0, true);
        eval_.save(out);
        detail::write_manifest_line(out, 0, false);
        target_.save(out);
    }

    void load_checkpoint(std::istream& in) {
        detail::expect_manifest_line(in, 0, true);
        Mlp loaded_eval = Mlp::load(in);
        detail::expect_manifest_line(in, 0, false);
        Mlp loaded_target = Mlp::load(in);
        copy_parameters(loaded_eval, eval_);
        copy_parameters(loaded_target, target_);
    }

private:
    void sync_target() {
        if (!parameters_finite(eval_)) {
            throw std::runtime_error("non-finite network parameters");
        }
        copy_parameters(eval_, target_);
    }

    DqnConfig config_;
    int actions_;
    Mlp eval_;
    Mlp target_;
    AdamState adam_;
    ReplayBuffer buffer_;
    MlpWorkspace ws_;
    std::vector<double> grad_;
    std::vector<std::size_t> indices_;
    long batches_fit_ = 0;
};

// Distribution learner: an array of per-action networks, each predicting
// the n-dimensional tier distribution for its action, with evaluation and
// target copies per action and one shared replay memory routed by action.
class OrdinalDqn {
public:
    OrdinalDqn(int state_dim, int actions, int tiers, const DqnConfig& config,
               std::uint64_t seed)
        : config_(config), actions_(actions), tiers_(tiers), buffer_(config.memory) {
        if (actions < 2) {
            throw std::invalid_argument("need at least two actions");
        }
        if (tiers < 1) {
            throw std::invalid_argument("tier count must be positive");
        }
        eval_.reserve(static_cast<std::size_t>(actions));
        target_.reserve(static_cast<std::size_t>(actions));
        for (int a = 0; a < actions; ++a) {
            eval_.emplace_back(state_dim, config.hidden, tiers,
                               seed_combine(seed, static_cast<std::uint64_t>(a)));
            target_.emplace_back(eval_.back());
            adam_.emplace_back(eval_.back(), config.learning_rate);
            grads_.emplace_back(eval_.back().parameter_count(), 0.0);
        }
    }

    int actions() const { return actions_; }
    int tiers() const { return tiers_; }
    const DqnConfig& config() const { return config_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    long batches_fit() const { return batches_fit_; }

    Mlp& evaluation_net(int action) { return eval_[static_cast<std::size_t>(action)]; }
    const Mlp& evaluation_net(int action) const { return eval_[static_cast<std::size_t>(action)]; }
    Mlp& target_net(int action) { return target_[static_cast<std::size_t>(action)]; }
    const Mlp& target_net(int action) const { return target_[static_cast<std::size_t>(action)]; }

    // Raw evaluation outputs for all actions, stacked row-major.
    void raw_distributions(std::span<const double> state, std::span<double> out) {
        for (int a = 0; a < actions_; ++a) {
            eval_[static_cast<std::size_t>(a)].forward(
                state, out.subspan(static_cast<std::size_t>(a) * tiers_,
                                   static_cast<std::size_t>(tiers_)),
                ws_);
        }
    }

    void action_scores(std::span<const double> state, std::span<double> out) {
        std::vector<double> raw(static_cast<std::size_t>(actions_) * tiers_);
        std::vector<double> probs(raw.size());
        raw_distributions(state, raw);
        for (int a = 0; a < actions_; ++a) {
            const auto offset = static_cast<std::size_t>(a) * tiers_;
            decision_probabilities(
                std::span<const double>(raw).subspan(offset, static_cast<std::size_t>(tiers_)),
                std::span<double>(probs).subspan(offset, static_cast<std::size_t>(tiers_)));
        }
        superiority_scores_into(probs, actions_, tiers_, out);
    }

    int act(std::span<const double> state, double epsilon, Rng& rng) {
        std::vector<double> scores(static_cast<std::size_t>(actions_));
        action_scores(state, scores);
        return epsilon_greedy_action(scores, epsilon, rng);
    }

    double margin(std::span<const double> state) {
        std::vector<double> scores(static_cast<std::size_t>(actions_));
        action_scores(state, scores);
        double best = scores[0], second = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < scores.size(); ++i) {
            if (scores[i] > best) {
                second = best;
                best = scores[i];
            } else if (scores[i] > second) {
                second = scores[i];
            }
        }
        return best - second;
    }

    void observe(Experience e) { buffer_.push(std::move(e)); }

    bool ready() const { return buffer_.size() >= static_cast<std::size_t>(config_.batch); }

    std::optional<double> maybe_replay(Rng& rng) {
        if (!ready()) {
            return std::nullopt;
        }
        return replay(rng);
    }

    double replay(Rng& rng) {
        buffer_.sample_indices(static_cast<std::size_t>(config_.batch), rng, indices_);
        for (auto& g : grads_) {
            std::fill(g.begin(), g.end(), 0.0);
        }
        routed_.assign(static_cast<std::size_t>(actions_), 0);

        std::vector<double> raw(static_cast<std::size_t>(actions_) * tiers_);
        std::vector<double> probs(raw.size());
        std::vector<double> scores(static_cast<std::size_t>(actions_));
        std::vector<double> bootstrap(static_cast<std::size_t>(tiers_));
        std::vector<double> target_vec(static_cast<std::size_t>(tiers_));
        double loss = 0.0;
        for (std::size_t index : indices_) {
            const Experience& e = buffer_.at(index);
            std::fill(target_vec.begin(), target_vec.end(), 0.0);
            target_vec[static_cast<std::size_t>(e.tier - 1)] = 1.0;
            if (!e.terminal) {
                // Successor action from the evaluation networks' superiority
                // scores; its bootstrapped distribution from the target
                // network, raw (the clamp applies to decisions only).
                for (int a = 0; a < actions_; ++a) {
                    const auto offset = static_cast<std::size_t>(a) * tiers_;
                    eval_[static_cast<std::size_t>(a)].forward(
                        e.next_state,
                        std::span<double>(raw).subspan(offset, static_cast<std::size_t>(tiers_)),
                        ws_);
                    decision_probabilities(
                        std::span<const double>(raw).subspan(offset,
                                                             static_cast<std::size_t>(tiers_)),
                        std::span<double>(probs).subspan(offset,
                                                         static_cast<std::size_t>(tiers_)));
                }
                superiority_scores_into(probs, actions_, tiers_, scores);
                const int best = greedy_action(scores, rng);
                target_[static_cast<std::size_t>(best)].forward(e.next_state, bootstrap, ws_);
                for (int i = 0; i < tiers_; ++i) {
                    target_vec[static_cast<std::size_t>(i)] +=
                        config_.gamma * bootstrap[static_cast<std::size_t>(i)];
                }
            }
            loss += eval_[static_cast<std::size_t>(e.action)].loss_and_gradient(
                e.state, target_vec, {}, grads_[static_cast<std::size_t>(e.action)], ws_);
            ++routed_[static_cast<std::size_t>(e.action)];
        }
        // Each network takes one Adam step on the mean gradient of the
        // samples routed to it.
        for (int a = 0; a < actions_; ++a) {
            if (routed_[static_cast<std::size_t>(a)] == 0) {
                continue;
            }
            const double scale = 1.0 / static_cast<double>(routed_[static_cast<std::size_t>(a)]);
            for (double& g : grads_[static_cast<std::size_t>(a)]) {
                g *= scale;
            }
            adam_step(eval_[static_cast<std::size_t>(a)], grads_[static_cast<std::size_t>(a)],
                      adam_[static_cast<std::size_t>(a)]);
        }
        ++batches_fit_;
        if (batches_fit_ % config_.sync_every == 0) {
            sync_targets();
        }
        return loss / static_cast<double>(indices_.size());
    }

    void save_checkpoint(std::ostream& out) const {
        for (int a = 0; a < actions_; ++a) {
            detail::write_manifest_line(out, a, true);
            eval_[static_cast<std::size_t>(a)].save(out);
            detail::write_manifest_line(out, a, false);
            target_[static_cast<std::size_t>(a)].save(out);
        }
    }

    void load_checkpoint(std::istream& in) {
        for (int a = 0; a < actions_; ++a) {
            detail::expect_manifest_line(in, a, true);
            Mlp loaded_eval = Mlp::load(in);
            detail::expect_manifest_line(in, a, false);
            Mlp loaded_target = Mlp::load(in);
            copy_parameters(loaded_eval, eval_[static_cast<std::size_t>(a)]);
            copy_parameters(loaded_target, target_[static_cast<std::size_t>(a)]);
        }
    }

private:
    void sync_targets() {
        for (int a = 0; a < actions_; ++a) {
            if (!parameters_finite(eval_[static_cast<std::size_t>(a)])) {
                throw std::runtime_error("non-finite network parameters");
            }
            copy_parameters(eval_[static_cast<std::size_t>(a)], target_[static_cast<std::size_t>(a)]);
        }
    }

    DqnConfig config_;
    int actions_;
    int tiers_;
    std::vector<Mlp> eval_;
    std::vector<Mlp> target_;
    std::vector<AdamState> adam_;
    std::vector<std::vector<double>> grads_;
    std::vector<int> routed_;
    ReplayBuffer buffer_;
    MlpWorkspace ws_;
    std::vector<std::size_t> indices_;
    long batches_fit_ = 0;
};

} // namespace orl
