#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "orl/chain_oracle.hpp"
#include "orl/harness.hpp"

namespace {

struct RunFlags {
    std::string config_path;
    std::string algo = "ordinal-q";
    std::string reward = "standard";
    std::string seeds;
    std::string hidden;
    std::string out = "-";
    std::string curve;
    bool no_timing = false;
};

void print_summary(std::ostream& out, const orl::HarnessConfig& cfg,
                   const std::vector<orl::EpisodeRecord>& records) {
    const auto summary = orl::summarize(records);
    out << "env=" << cfg.env_name << " algo=" << orl::algorithm_token(cfg.algo)
        << " reward=" << (cfg.reward_mode == orl::RewardMode::Standard ? "standard" : "cr")
        << " episodes=" << summary.episodes << " seeds=" << summary.seeds << "\n";
    out << "final window (" << summary.window << " episodes): score "
        << orl::format_double(summary.score_mean) << ", win rate "
        << orl::format_double(summary.win_rate) << ", margin "
        << orl::format_double(summary.margin_mean) << "\n";
    if (!std::isnan(summary.greedy_mean)) {
        out << "final window greedy score: " << orl::format_double(summary.greedy_mean) << "\n";
    }
    out << "mean wall time per run: " << orl::format_double(summary.wall_ms_per_run) << " ms\n";
}

int run_command(const RunFlags& flags, const CLI::App& cmd) {
    orl::HarnessConfig cfg;
    if (!flags.config_path.empty()) {
        cfg = orl::load_config_file(flags.config_path, cfg);
    }
    // CLI values override the file for every flag given on the command line.
    auto maybe = [&](const char* name, const char* key) {
        const auto* option = cmd.get_option(name);
        if (option->count() > 0) {
            orl::apply_config_entry(cfg, key, option->as<std::string>());
        }
    };
    maybe("--env", "env");
    maybe("--algo", "algo");
    maybe("--reward", "reward");
    maybe("--episodes", "episodes");
    maybe("--seeds", "seeds");
    maybe("--eval-every", "eval-every");
    maybe("--alpha", "alpha");
    maybe("--gamma", "gamma");
    maybe("--eps-floor", "eps-floor");
    maybe("--lr", "lr");
    maybe("--memory", "memory");
    maybe("--batch", "batch");
    maybe("--sync", "sync");
    maybe("--hidden", "hidden");
    if (flags.no_timing) {
        cfg.timing = false;
    }

    const auto records = orl::run_experiment(cfg);

    if (flags.out == "-") {
        orl::write_csv(std::cout, records);
        print_summary(std::cerr, cfg, records);
    } else {
        std::ofstream out(flags.out, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot open output file '" + flags.out + "'");
        }
        orl::write_csv(out, records);
        print_summary(std::cout, cfg, records);
    }
    if (!flags.curve.empty()) {
        std::ofstream curve(flags.curve, std::ios::binary);
        if (!curve) {
            throw std::runtime_error("cannot open curve file '" + flags.curve + "'");
        }
        orl::write_curve_csv(curve, records);
    }
    return 0;
}

int summarize_command(const std::vector<std::string>& inputs, int window) {
    std::vector<orl::Summary> summaries;
    for (const auto& path : inputs) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw std::runtime_error("cannot open input file '" + path + "'");
        }
        const auto records = orl::read_csv(in);
        const auto summary = orl::summarize(records, window);
        summaries.push_back(summary);
        std::cout << path << ": seeds=" << summary.seeds << " episodes=" << summary.episodes
                  << " window=" << summary.window << "\n"
                  << "  final score " << orl::format_double(summary.score_mean) << ", win rate "
                  << orl::format_double(summary.win_rate) << ", margin "
                  << orl::format_double(summary.margin_mean) << "\n";
        if (!std::isnan(summary.greedy_mean)) {
            std::cout << "  final greedy score " << orl::format_double(summary.greedy_mean)
                      << "\n";
        }
        std::cout << "  mean wall time per run " << orl::format_double(summary.wall_ms_per_run)
                  << " ms\n";
    }
    if (summaries.size() == 2) {
        const double ratio = summaries[1].wall_ms_per_run / summaries[0].wall_ms_per_run;
        std::cout << "wall-time ratio (second / first): " << orl::format_double(ratio) << "\n";
    }
    return 0;
}

int oracle_command(const std::string& env_name, double gamma) {
    if (env_name != "chain") {
        throw std::invalid_argument("unknown environment '" + env_name + "'");
    }
    const auto mdp = orl::chain_mdp();
    const auto vi = orl::value_iteration(mdp, gamma);
    std::cout << "value iteration (gamma=" << orl::format_double(gamma) << ", "
              << vi.iterations << " sweeps)\n";
    for (int s = 0; s < mdp.states; ++s) {
        if (mdp.is_terminal(s)) {
            std::cout << "  state " << s << ": terminal\n";
            continue;
        }
        std::cout << "  state " << s << ": Q(left)=" << orl::format_double(vi.q[s * 2 + 0])
                  << " Q(right)=" << orl::format_double(vi.q[s * 2 + 1]) << " -> "
                  << (vi.policy[static_cast<std::size_t>(s)] == 1 ? "right" : "left") << "\n";
    }

    const orl::TierMap tiers({-1.0, 10.0});
    const auto policies = orl::all_deterministic_policies(mdp);
    const auto optimal = orl::ordinal_optimal_policies(mdp, tiers, gamma);
    std::cout << "ordinal enumeration over " << policies.size() << " deterministic policies\n";
    std::cout << "superiority-consistent policies: " << optimal.size() << "\n";
    for (const auto& policy : optimal) {
        std::cout << "  policy:";
        for (int s = 0; s < mdp.states; ++s) {
            if (mdp.is_terminal(s)) {
                std::cout << " -";
            } else {
                std::cout << (policy[static_cast<std::size_t>(s)] == 1 ? " right" : " left");
            }
        }
        std::cout << "\n";
        const auto dists = orl::exact_policy_distributions(mdp, tiers, policy, gamma);
        for (int s = 0; s < mdp.states; ++s) {
            if (mdp.is_terminal(s)) {
                continue;
            }
            std::vector<orl::ProbabilityVector> probs;
            for (int a = 0; a < mdp.actions; ++a) {
                probs.push_back(orl::normalize(std::span<const double>(
                    dists[static_cast<std::size_t>(s) * mdp.actions + a])));
            }
            const auto scores = orl::superiority_scores(probs);
            std::cout << "  state " << s << ": superiority(left)="
                      << orl::format_double(scores[0])
                      << " superiority(right)=" << orl::format_double(scores[1]) << "\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ordinal reinforcement learning toolkit"};
    app.require_subcommand(1);

    RunFlags flags;
    int episodes = 400;
    int eval_every = 0;
    double alpha = 0.1, gamma = 0.9, eps_floor = 0.0, lr = 0.0005;
    long memory = 200000;
    int batch = 64, sync = 300;
    std::string env_name = "cartpole";

    auto* run = app.add_subcommand("run", "train and emit per-episode records as CSV");
    run->add_option("--config", flags.config_path, "key = value config file; flags override it");
    run->add_option("--env", env_name, "cartpole, acrobot or chain");
    run->add_option("--algo", flags.algo, "q, ordinal-q, dqn or ordinal-dqn");
    run->add_option("--reward", flags.reward, "standard or cr");
    run->add_option("--episodes", episodes, "training episodes per seed");
    run->add_option("--seeds", flags.seeds, "comma-separated seed list");
    run->add_option("--eval-every", eval_every, "greedy evaluation interval (default episodes/20)");
    run->add_option("--alpha", alpha, "table learning rate");
    run->add_option("--gamma", gamma, "discount factor");
    run->add_option("--eps-floor", eps_floor, "exploration floor after the half-way point");
    run->add_option("--lr", lr, "network learning rate");
    run->add_option("--memory", memory, "replay memory capacity");
    run->add_option("--batch", batch, "replay batch size");
    run->add_option("--sync", sync, "batch updates between target syncs");
    run->add_option("--hidden", flags.hidden, "comma-separated hidden layer sizes");
    run->add_option("--out", flags.out, "records CSV path ('-' for stdout)");
    run->add_option("--curve", flags.curve, "optional per-episode mean/sd CSV path");
    run->add_flag("--no-timing", flags.no_timing, "write zero wall times (bitwise-stable output)");

    auto* summarize = app.add_subcommand("summarize", "final-window metrics from record CSVs");
    std::vector<std::string> inputs;
    int window = 0;
    summarize->add_option("--in", inputs, "record CSV path (repeat to compare; 2 inputs print a time ratio)")
        ->required();
    summarize->add_option("--window", window, "final-window width in episodes");

    auto* oracle = app.add_subcommand("oracle", "print exact references for oracle environments");
    std::string oracle_env = "chain";
    double oracle_gamma = 0.9;
    oracle->add_option("--env", oracle_env, "oracle environment (chain)");
    oracle->add_option("--gamma", oracle_gamma, "discount factor");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return run_command(flags, *run);
        }
        if (summarize->parsed()) {
            return summarize_command(inputs, window);
        }
        if (oracle->parsed()) {
            return oracle_command(oracle_env, oracle_gamma);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
