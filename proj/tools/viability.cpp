// Command line front end: oracle, learn, sweep and render.
//
// Exit codes: 0 success, 1 usage, 2 invalid configuration, 3 runtime error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "viability/experiment.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kInvalid = 2;
constexpr int kRuntime = 3;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool no_score = false;
    std::vector<std::uint64_t> seeds;
    std::string run_dir;
};

viability::ExperimentConfig load(const Options& o) {
    auto c = viability::load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    return c;
}

std::filesystem::path out_dir(const Options& o, const viability::ExperimentConfig& c) {
    return o.out.empty() ? std::filesystem::path(viability::resolve_output_dir(c)) : std::filesystem::path(o.out);
}

void print_report(const viability::ScoreReport& r) {
    std::cout << "failures " << r.failure_count << "/" << r.samples << " (" << r.failure_rate << ")\n";
    std::cout << "cautious precision ";
    if (r.cautious.precision) std::cout << *r.cautious.precision; else std::cout << "undefined";
    std::cout << " recall " << r.cautious.recall << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn safety measures of dynamical systems from samples"};
    app.require_subcommand(1);
    Options o;

    auto* oracle = app.add_subcommand("oracle", "brute-force viable sets and safety measure");
    oracle->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    oracle->add_option("--out", o.out, "output directory");

    auto* learn = app.add_subcommand("learn", "run the sampling learner once");
    learn->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    learn->add_option("--seed", o.seed, "override the config seed");
    learn->add_option("--out", o.out, "output directory");
    learn->add_flag("--no-score", o.no_score, "skip scoring against the oracle");

    auto* sweep = app.add_subcommand("sweep", "run the learner for several seeds and aggregate");
    sweep->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--seeds", o.seeds, "seeds to run (default: ten seeds from the config seed)")
        ->delimiter(',');
    sweep->add_option("--out", o.out, "output directory");

    auto* render = app.add_subcommand("render", "draw snapshot heatmaps of a learn run as PNG");
    render->add_option("--run", o.run_dir, "directory written by learn")->required()->check(CLI::ExistingDirectory);
    render->add_option("--out", o.out, "image directory (default: the run directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        if (*oracle) {
            const auto c = load(o);
            const auto dir = out_dir(o, c);
            const auto r = viability::cmd_oracle(c, dir);
            std::cout << "|Q_V| = " << r.sets.q_viable.count() << ", |S_V| = " << r.sets.s_viable.count()
                      << " after " << r.sets.passes << " sweeps -> " << dir.string() << "\n";
        } else if (*learn) {
            const auto c = load(o);
            const auto dir = out_dir(o, c);
            const auto report = viability::cmd_learn(c, dir, !o.no_score);
            if (report) print_report(*report);
            std::cout << "wrote " << dir.string() << "\n";
        } else if (*sweep) {
            const auto c = load(o);
            auto seeds = o.seeds;
            if (sweep->count("--seeds") == 0) {
                for (std::uint64_t i = 0; i < 10; ++i) seeds.push_back(c.seed + i);
            }
            const auto dir = out_dir(o, c);
            const auto rows = viability::cmd_sweep(c, seeds, dir);
            for (const auto& row : rows) {
                std::cout << "seed " << row.seed << ": ";
                if (row.report) print_report(*row.report); else std::cout << "error: " << row.error << "\n";
            }
            std::cout << "wrote " << (dir / "aggregate.json").string() << "\n";
        } else if (*render) {
            const std::filesystem::path dir = o.out.empty() ? o.run_dir : o.out;
            const auto counts = viability::cmd_render(o.run_dir, dir);
            std::cout << "rendered " << counts.size() << " snapshots -> " << dir.string() << "\n";
        }
    } catch (const viability::ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return 0;
}
