#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "orl/deep.hpp"
#include "orl/envs.hpp"
#include "orl/ordinal.hpp"
#include "orl/tabular.hpp"

namespace orl {

enum class Algorithm { NumericQ, OrdinalQ, NumericDqn, OrdinalDqn };
enum class RewardMode { Standard, ChangeOfRewards };

inline bool is_deep(Algorithm a) {
    return a == Algorithm::NumericDqn || a == Algorithm::OrdinalDqn;
}
inline bool is_ordinal(Algorithm a) {
    return a == Algorithm::OrdinalQ || a == Algorithm::OrdinalDqn;
}

inline Algorithm parse_algorithm(const std::string& token) {
    if (token == "q") return Algorithm::NumericQ;
    if (token == "ordinal-q") return Algorithm::OrdinalQ;
    if (token == "dqn") return Algorithm::NumericDqn;
    if (token == "ordinal-dqn") return Algorithm::OrdinalDqn;
    throw std::invalid_argument("unknown algorithm '" + token + "'");
}

inline const char* algorithm_token(Algorithm a) {
    switch (a) {
        case Algorithm::NumericQ: return "q";
        case Algorithm::OrdinalQ: return "ordinal-q";
        case Algorithm::NumericDqn: return "dqn";
        case Algorithm::OrdinalDqn: return "ordinal-dqn";
    }
    return "?";
}

inline RewardMode parse_reward_mode(const std::string& token) {
    if (token == "standard") return RewardMode::Standard;
    if (token == "cr") return RewardMode::ChangeOfRewards;
    throw std::invalid_argument("unknown reward mode '" + token + "'");
}

struct HarnessConfig {
    std::string env_name = "cartpole";
    Algorithm algo = Algorithm::OrdinalQ;
    RewardMode reward_mode = RewardMode::Standard;
    int episodes = 400;
    std::vector<std::uint64_t> seeds; // empty: 0..9 tabular, 0..4 deep
    int eval_every = 0;               // 0: episodes / 20
    double alpha = 0.1;
    double gamma = 0.9;
    double epsilon_floor = 0.0;
    DqnConfig dqn;                    // lr / memory / batch / sync / hidden
    bool timing = true;
};

struct EpisodeRecord {
    std::uint64_t seed = 0;
    int episode = 0; // 1-based
    double score = 0.0;
    int win = 0;
    bool has_greedy = false;
    double greedy_score = 0.0;
    double margin = 0.0;
    double epsilon = 0.0;
    double wall_ms = 0.0;
};

// ---------------------------------------------------------------------------
// Config plumbing

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    parts.push_back(current);
    return parts;
}

template <typename T>
T parse_number(const std::string& text, const char* what) {
    T value{};
    const std::string t = trim(text);
    const auto* begin = t.data();
    const auto* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || t.empty()) {
        throw std::invalid_argument(std::string("bad ") + what + " '" + text + "'");
    }
    return value;
}

inline double parse_real(const std::string& text, const char* what) {
    const std::string t = trim(text);
    try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size()) {
            throw std::invalid_argument("");
        }
        return v;
    } catch (...) {
        throw std::invalid_argument(std::string("bad ") + what + " '" + text + "'");
    }
}

} // namespace detail

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& part : detail::split(text, ',')) {
        seeds.push_back(detail::parse_number<std::uint64_t>(part, "seed"));
    }
    return seeds;
}

inline std::vector<int> parse_hidden_list(const std::string& text) {
    std::vector<int> sizes;
    for (const auto& part : detail::split(text, ',')) {
        sizes.push_back(detail::parse_number<int>(part, "hidden size"));
    }
    return sizes;
}

// Applies one `key = value` entry; keys mirror the CLI flags.
inline void apply_config_entry(HarnessConfig& cfg, const std::string& key,
                               const std::string& value) {
    if (key == "env") {
        cfg.env_name = value;
    } else if (key == "algo") {
        cfg.algo = parse_algorithm(value);
    } else if (key == "reward") {
        cfg.reward_mode = parse_reward_mode(value);
    } else if (key == "episodes") {
        cfg.episodes = detail::parse_number<int>(value, "episode count");
    } else if (key == "seeds") {
        cfg.seeds = parse_seed_list(value);
    } else if (key == "eval-every") {
        cfg.eval_every = detail::parse_number<int>(value, "eval interval");
    } else if (key == "alpha") {
        cfg.alpha = detail::parse_real(value, "learning rate");
    } else if (key == "gamma") {
        cfg.gamma = detail::parse_real(value, "discount factor");
    } else if (key == "eps-floor") {
        cfg.epsilon_floor = detail::parse_real(value, "epsilon floor");
    } else if (key == "lr") {
        cfg.dqn.learning_rate = detail::parse_real(value, "learning rate");
    } else if (key == "memory") {
        cfg.dqn.memory =
            static_cast<std::size_t>(detail::parse_number<long>(value, "memory size"));
    } else if (key == "batch") {
        cfg.dqn.batch = detail::parse_number<int>(value, "batch size");
    } else if (key == "sync") {
        cfg.dqn.sync_every = detail::parse_number<int>(value, "sync period");
    } else if (key == "hidden") {
        cfg.dqn.hidden = parse_hidden_list(value);
    } else if (key == "timing") {
        if (value == "on" || value == "true") {
            cfg.timing = true;
        } else if (value == "off" || value == "false") {
            cfg.timing = false;
        } else {
            throw std::invalid_argument("bad timing flag '" + value + "'");
        }
    } else {
        throw std::invalid_argument("unknown key '" + key + "'");
    }
}

// Line-oriented `key = value` file; blank lines and '#' comments allowed.
// Errors carry the file name and 1-based line number.
inline HarnessConfig load_config_file(const std::string& path, HarnessConfig base = {}) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file '" + path + "'");
    }
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped[0] == '#') {
            continue;
        }
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(number) +
                                     ": expected 'key = value'");
        }
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(number) +
                                     ": expected 'key = value'");
        }
        try {
            apply_config_entry(base, key, value);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return base;
}

inline HarnessConfig resolve_defaults(HarnessConfig cfg) {
    if (cfg.episodes < 1) {
        throw std::invalid_argument("episodes must be positive");
    }
    if (cfg.seeds.empty()) {
        const int count = is_deep(cfg.algo) ? 5 : 10;
        for (int s = 0; s < count; ++s) {
            cfg.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    if (cfg.eval_every <= 0) {
        cfg.eval_every = std::max(1, cfg.episodes / 20);
    }
    cfg.dqn.gamma = cfg.gamma;
    return cfg;
}

// ---------------------------------------------------------------------------
// Agents

// Uniform learner surface for the episode loop. Greedy evaluation only ever
// calls act(), so it cannot disturb training state.
class Agent {
public:
    virtual ~Agent() = default;
    virtual int act(std::span<const double> state, double epsilon, Rng& rng) = 0;
    virtual void learn(std::span<const double> state, int action, double reward, int tier,
                       std::span<const double> next_state, bool terminal, Rng& rng) = 0;
    virtual double margin(std::span<const double> state) = 0;
};

namespace detail {

inline Discretizer discretizer_for(const std::string& env_name) {
    if (env_name == "cartpole") return cartpole_discretizer();
    if (env_name == "acrobot") return acrobot_discretizer();
    if (env_name == "chain") return chain_discretizer();
    throw std::invalid_argument("unknown environment '" + env_name + "'");
}

class NumericTabularAgent final : public Agent {
public:
    NumericTabularAgent(Discretizer disc, int actions, double alpha, double gamma)
        : disc_(std::move(disc)), table_(disc_.states(), actions), alpha_(alpha), gamma_(gamma) {}

    int act(std::span<const double> state, double epsilon, Rng& rng) override {
        return orl::act(table_, disc_.index_of(state), epsilon, rng);
    }

    void learn(std::span<const double> state, int action, double reward, int /*tier*/,
               std::span<const double> next_state, bool terminal, Rng& /*rng*/) override {
        numeric_q_update(table_, disc_.index_of(state), action, reward,
                         disc_.index_of(next_state), terminal, alpha_, gamma_);
    }

    double margin(std::span<const double> state) override {
        return value_margin(table_, disc_.index_of(state));
    }

    const NumericQTable& table() const { return table_; }

private:
    Discretizer disc_;
    NumericQTable table_;
    double alpha_;
    double gamma_;
};

class OrdinalTabularAgent final : public Agent {
public:
    OrdinalTabularAgent(Discretizer disc, int actions, int tiers, double alpha, double gamma)
        : disc_(std::move(disc)),
          table_(disc_.states(), actions, tiers),
          alpha_(alpha),
          gamma_(gamma) {}

    int act(std::span<const double> state, double epsilon, Rng& rng) override {
        return orl::act(table_, disc_.index_of(state), epsilon, rng);
    }

    void learn(std::span<const double> state, int action, double /*reward*/, int tier,
               std::span<const double> next_state, bool terminal, Rng& rng) override {
        ordinal_q_step(table_, disc_.index_of(state), action, tier, disc_.index_of(next_state),
                       terminal, alpha_, gamma_, rng);
    }

    double margin(std::span<const double> state) override {
        return value_margin(table_, disc_.index_of(state));
    }

    const OrdinalQTable& table() const { return table_; }

private:
    Discretizer disc_;
    OrdinalQTable table_;
    double alpha_;
    double gamma_;
};

class NumericDeepAgent final : public Agent {
public:
    NumericDeepAgent(int state_dim, int actions, const DqnConfig& config, std::uint64_t seed)
        : dqn_(state_dim, actions, config, seed) {}

    int act(std::span<const double> state, double epsilon, Rng& rng) override {
        return dqn_.act(state, epsilon, rng);
    }

    void learn(std::span<const double> state, int action, double reward, int /*tier*/,
               std::span<const double> next_state, bool terminal, Rng& rng) override {
        Experience e;
        e.state.assign(state.begin(), state.end());
        e.action = action;
        e.reward = reward;
        e.next_state.assign(next_state.begin(), next_state.end());
        e.terminal = terminal;
        dqn_.observe(std::move(e));
        dqn_.maybe_replay(rng);
    }

    double margin(std::span<const double> state) override { return dqn_.margin(state); }

    NumericDqn& dqn() { return dqn_; }

private:
    NumericDqn dqn_;
};

class OrdinalDeepAgent final : public Agent {
public:
    OrdinalDeepAgent(int state_dim, int actions, int tiers, const DqnConfig& config,
                     std::uint64_t seed)
        : dqn_(state_dim, actions, tiers, config, seed) {}

    int act(std::span<const double> state, double epsilon, Rng& rng) override {
        return dqn_.act(state, epsilon, rng);
    }

    void learn(std::span<const double> state, int action, double /*reward*/, int tier,
               std::span<const double> next_state, bool terminal, Rng& rng) override {
        Experience e;
        e.state.assign(state.begin(), state.end());
        e.action = action;
        e.tier = tier;
        e.next_state.assign(next_state.begin(), next_state.end());
        e.terminal = terminal;
        dqn_.observe(std::move(e));
        dqn_.maybe_replay(rng);
    }

    double margin(std::span<const double> state) override { return dqn_.margin(state); }

    OrdinalDqn& dqn() { return dqn_; }

private:
    OrdinalDqn dqn_;
};

} // namespace detail

inline std::unique_ptr<Agent> make_agent(const HarnessConfig& cfg, const EnvSpec& spec,
                                         int tiers, std::uint64_t seed) {
    switch (cfg.algo) {
        case Algorithm::NumericQ:
            return std::make_unique<detail::NumericTabularAgent>(
                detail::discretizer_for(cfg.env_name), spec.actions, cfg.alpha, cfg.gamma);
        case Algorithm::OrdinalQ:
            return std::make_unique<detail::OrdinalTabularAgent>(
                detail::discretizer_for(cfg.env_name), spec.actions, tiers, cfg.alpha, cfg.gamma);
        case Algorithm::NumericDqn:
            return std::make_unique<detail::NumericDeepAgent>(spec.state_dim, spec.actions,
                                                              cfg.dqn, seed);
        case Algorithm::OrdinalDqn:
            return std::make_unique<detail::OrdinalDeepAgent>(spec.state_dim, spec.actions, tiers,
                                                              cfg.dqn, seed);
    }
    throw std::invalid_argument("unknown algorithm");
}

// ---------------------------------------------------------------------------
// Experiment execution

namespace detail {

// Stream tags for deriving independent per-seed randomness.
inline constexpr std::uint64_t kExploreStream = 0xE1;
inline constexpr std::uint64_t kTrainStream = 0x72;
inline constexpr std::uint64_t kEnvStream = 0x5E;
inline constexpr std::uint64_t kEvalRngStream = 0xEA;
inline constexpr std::uint64_t kEvalEnvStream = 0xEE;

struct EpisodeOutcome {
    double score = 0.0;
    bool terminal = false;
    bool truncated = false;
    double margin_mean = 0.0;
};

// One episode. In greedy mode nothing is learned and no margins are taken.
inline EpisodeOutcome play_episode(Env& env, Agent& agent, const TierMap& tiers,
                                   const ChangeOfRewards* cr, double epsilon, bool learn,
                                   std::uint64_t env_seed, Rng& action_rng, Rng* train_rng) {
    EpisodeOutcome outcome;
    auto state = env.reset(env_seed);
    double margin_total = 0.0;
    long steps = 0;
    while (true) {
        if (learn) {
            margin_total += agent.margin(state);
        }
        const int action = agent.act(state, epsilon, action_rng);
        const StepResult res = env.step(action);
        outcome.score += res.reward;
        ++steps;
        if (learn) {
            const double visible = cr ? cr->apply(res.reward) : res.reward;
            agent.learn(state, action, visible, tiers.tier_of(visible), res.next_state,
                        res.terminal, *train_rng);
        }
        state = res.next_state;
        if (res.terminal || res.truncated) {
            outcome.terminal = res.terminal;
            outcome.truncated = res.truncated;
            break;
        }
    }
    outcome.margin_mean = steps > 0 ? margin_total / static_cast<double>(steps) : 0.0;
    return outcome;
}

inline std::vector<EpisodeRecord> run_single_seed(const HarnessConfig& cfg, std::uint64_t seed) {
    auto env = make_env(cfg.env_name);
    const EnvSpec spec = env->spec();
    std::optional<ChangeOfRewards> cr;
    if (cfg.reward_mode == RewardMode::ChangeOfRewards) {
        cr.emplace(spec.rewards);
    }
    // Rank order survives the reward change, so the tier map over the
    // transformed set equals the raw one; ordinal learners are unaffected
    // by construction.
    const TierMap tiers(cr ? cr->transformed() : spec.rewards);
    auto agent = make_agent(cfg, spec, tiers.tiers(), seed);
    const EpsilonSchedule schedule(cfg.episodes, cfg.epsilon_floor);

    Rng explore(seed_combine(seed, kExploreStream));
    Rng train(seed_combine(seed, kTrainStream));

    std::vector<EpisodeRecord> records;
    records.reserve(static_cast<std::size_t>(cfg.episodes));
    for (int e = 0; e < cfg.episodes; ++e) {
        const auto started = std::chrono::steady_clock::now();
        const double epsilon = schedule.at(e);
        const auto outcome =
            play_episode(*env, *agent, tiers, cr ? &*cr : nullptr, epsilon, true,
                         seed_combine(seed, static_cast<std::uint64_t>(e), kEnvStream), explore,
                         &train);

        EpisodeRecord record;
        record.seed = seed;
        record.episode = e + 1;
        record.score = outcome.score;
        record.win = env->is_win(outcome.terminal, outcome.truncated) ? 1 : 0;
        record.margin = outcome.margin_mean;
        record.epsilon = epsilon;

        if ((e + 1) % cfg.eval_every == 0) {
            Rng eval_rng(seed_combine(seed, static_cast<std::uint64_t>(e), kEvalRngStream));
            const auto eval = play_episode(
                *env, *agent, tiers, cr ? &*cr : nullptr, 0.0, false,
                seed_combine(seed, static_cast<std::uint64_t>(e), kEvalEnvStream), eval_rng,
                nullptr);
            record.has_greedy = true;
            record.greedy_score = eval.score;
        }

        if (cfg.timing) {
            record.wall_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - started)
                                 .count();
        }
        records.push_back(record);
    }
    return records;
}

} // namespace detail

// Runs every seed (in parallel workers when hardware allows) and returns the
// records merged in seed order, one block per seed.
inline std::vector<EpisodeRecord> run_experiment(const HarnessConfig& raw_cfg) {
    const HarnessConfig cfg = resolve_defaults(raw_cfg);
    std::vector<std::vector<EpisodeRecord>> per_seed(cfg.seeds.size());
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= cfg.seeds.size()) {
                return;
            }
            try {
                per_seed[i] = detail::run_single_seed(cfg, cfg.seeds[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                return;
            }
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t extra =
        std::min<std::size_t>(cfg.seeds.size(), static_cast<std::size_t>(hw)) - 1;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < extra; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    std::vector<EpisodeRecord> merged;
    merged.reserve(cfg.seeds.size() * static_cast<std::size_t>(cfg.episodes));
    for (const auto& block : per_seed) {
        merged.insert(merged.end(), block.begin(), block.end());
    }
    return merged;
}

// ---------------------------------------------------------------------------
// CSV emission

// Shortest decimal that round-trips the double exactly.
inline std::string format_double(double v) {
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
    return std::string(buffer, ptr);
}

inline constexpr const char* kCsvHeader = "seed,episode,score,win,greedy_score,margin,epsilon,wall_ms";

inline void write_csv(std::ostream& out, std::span<const EpisodeRecord> records) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) {
        out << r.seed << ',' << r.episode << ',' << format_double(r.score) << ',' << r.win << ',';
        if (r.has_greedy) {
            out << format_double(r.greedy_score);
        }
        out << ',' << format_double(r.margin) << ',' << format_double(r.epsilon) << ','
            << format_double(r.wall_ms) << '\n';
    }
}

inline std::vector<EpisodeRecord> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != kCsvHeader) {
        throw std::runtime_error("bad record header");
    }
    std::vector<EpisodeRecord> records;
    int number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto cells = detail::split(line, ',');
        if (cells.size() != 8) {
            throw std::runtime_error("line " + std::to_string(number) + ": expected 8 cells");
        }
        EpisodeRecord r;
        r.seed = detail::parse_number<std::uint64_t>(cells[0], "seed");
        r.episode = detail::parse_number<int>(cells[1], "episode");
        r.score = detail::parse_real(cells[2], "score");
        r.win = detail::parse_number<int>(cells[3], "win flag");
        if (!detail::trim(cells[4]).empty()) {
            r.has_greedy = true;
            r.greedy_score = detail::parse_real(cells[4], "greedy score");
        }
        r.margin = detail::parse_real(cells[5], "margin");
        r.epsilon = detail::parse_real(cells[6], "epsilon");
        r.wall_ms = detail::parse_real(cells[7], "wall time");
        records.push_back(r);
    }
    return records;
}

// Per-episode mean and standard deviation across seeds (the plotted curve).
inline void write_curve_csv(std::ostream& out, std::span<const EpisodeRecord> records) {
    if (records.empty()) {
        throw std::invalid_argument("no records");
    }
    int episodes = 0;
    for (const auto& r : records) {
        episodes = std::max(episodes, r.episode);
    }
    out << "episode,score_mean,score_sd,win_rate,margin_mean,greedy_mean\n";
    for (int e = 1; e <= episodes; ++e) {
        double sum = 0.0, sum_sq = 0.0, wins = 0.0, margins = 0.0;
        double greedy_sum = 0.0;
        long count = 0, greedy_count = 0;
        for (const auto& r : records) {
            if (r.episode != e) {
                continue;
            }
            sum += r.score;
            sum_sq += r.score * r.score;
            wins += r.win;
            margins += r.margin;
            ++count;
            if (r.has_greedy) {
                greedy_sum += r.greedy_score;
                ++greedy_count;
            }
        }
        if (count == 0) {
            continue;
        }
        const double mean = sum / static_cast<double>(count);
        const double variance =
            std::max(0.0, sum_sq / static_cast<double>(count) - mean * mean);
        out << e << ',' << format_double(mean) << ',' << format_double(std::sqrt(variance)) << ','
            << format_double(wins / static_cast<double>(count)) << ','
            << format_double(margins / static_cast<double>(count)) << ',';
        if (greedy_count > 0) {
            out << format_double(greedy_sum / static_cast<double>(greedy_count));
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Summaries

struct Summary {
    int seeds = 0;
    int episodes = 0;
    int window = 0;             // final-window width in episodes
    double score_mean = 0.0;    // mean training score over the final window
    double win_rate = 0.0;      // mean win flag over the final window
    double greedy_mean = std::numeric_limits<double>::quiet_NaN();
    double margin_mean = 0.0;
    double wall_ms_per_run = 0.0; // mean of per-seed wall-time totals
};

inline Summary summarize(std::span<const EpisodeRecord> records, int window = 0) {
    if (records.empty()) {
        throw std::invalid_argument("no records");
    }
    Summary s;
    std::vector<std::uint64_t> seeds;
    for (const auto& r : records) {
        s.episodes = std::max(s.episodes, r.episode);
        if (std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end()) {
            seeds.push_back(r.seed);
        }
    }
    s.seeds = static_cast<int>(seeds.size());
    s.window = window > 0 ? window : std::max(1, s.episodes / 20);

    double score = 0.0, wins = 0.0, margins = 0.0, greedy = 0.0;
    long count = 0, greedy_count = 0;
    double wall_total = 0.0;
    for (const auto& r : records) {
        wall_total += r.wall_ms;
        if (r.episode > s.episodes - s.window) {
            score += r.score;
            wins += r.win;
            margins += r.margin;
            ++count;
            if (r.has_greedy) {
                greedy += r.greedy_score;
                ++greedy_count;
            }
        }
    }
    if (count > 0) {
        s.score_mean = score / static_cast<double>(count);
        s.win_rate = wins / static_cast<double>(count);
        s.margin_mean = margins / static_cast<double>(count);
    }
    if (greedy_count > 0) {
        s.greedy_mean = greedy / static_cast<double>(greedy_count);
    }
    s.wall_ms_per_run = wall_total / static_cast<double>(s.seeds);
    return s;
}

// Mean greedy score over the final fraction of evaluation episodes.
inline double final_greedy_mean(std::span<const EpisodeRecord> records, double fraction) {
    std::vector<int> eval_episodes;
    for (const auto& r : records) {
        if (r.has_greedy &&
            std::find(eval_episodes.begin(), eval_episodes.end(), r.episode) ==
                eval_episodes.end()) {
            eval_episodes.push_back(r.episode);
        }
    }
    if (eval_episodes.empty()) {
        throw std::invalid_argument("no evaluation episodes");
    }
    std::sort(eval_episodes.begin(), eval_episodes.end());
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(eval_episodes.size()))));
    const int first_kept = eval_episodes[eval_episodes.size() - keep];
    double total = 0.0;
    long count = 0;
    for (const auto& r : records) {
        if (r.has_greedy && r.episode >= first_kept) {
            total += r.greedy_score;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

} // namespace orl
