#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "entroprune/errors.hpp"
#include "entroprune/pipeline.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::size_t workers = 0;
    bool workers_set = false;
    double eta = 0.0;
    bool eta_set = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string external_scores;
    bool external_scores_set = false;
};

entroprune::PipelineConfig effective_config(const CliOverrides &cli) {
    entroprune::PipelineConfig config = entroprune::load_pipeline_config(cli.config_path);
    if (cli.workers_set) {
        config.workers = cli.workers;
    }
    if (cli.eta_set) {
        config.eta_percent = cli.eta;
    }
    if (cli.seed_set) {
        config.probe.seed = cli.seed;
    }
    if (cli.external_scores_set) {
        config.external_scores_path = cli.external_scores;
    }
    return config;
}

void add_common_options(CLI::App *cmd, CliOverrides &cli) {
    cmd->add_option("--config", cli.config_path, "Path to the pipeline config file")->required();
    cmd->add_option("--workers", cli.workers, "Worker threads for scoring and counting")
        ->check(CLI::PositiveNumber)
        ->each([&cli](const std::string &) { cli.workers_set = true; });
    cmd->add_option("--eta", cli.eta, "Pruning ratio in percent, [0,100)")
        ->each([&cli](const std::string &) { cli.eta_set = true; });
    cmd->add_option("--seed", cli.seed, "Seed for probe subsampling")
        ->each([&cli](const std::string &) { cli.seed_set = true; });
    cmd->add_option("--external-scores", cli.external_scores,
                    "JSONL file of externally computed per-word NLLs")
        ->each([&cli](const std::string &) { cli.external_scores_set = true; });
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"entroprune: rank corpus samples by information content and prune the "
                 "least informative fraction"};
    app.require_subcommand(1);

    CliOverrides cli;
    using Step = void (*)(const entroprune::PipelineConfig &);
    struct Subcommand {
        const char *name;
        const char *help;
        Step step;
    };
    const Subcommand subcommands[] = {
        {"build-vocab", "Build the word vocabulary (vocab.json)", entroprune::run_build_vocab},
        {"count-freq", "Count corpus-wide token frequencies (freq.json)",
         entroprune::run_count_freq},
        {"train-probe", "Train the probe model with early stopping (probe.model, trace.csv)",
         entroprune::run_train_probe},
        {"score", "Score every document (scores.jsonl, unscorable.txt)", entroprune::run_score},
        {"prune", "Rank by score and prune the bottom eta percent (prune_manifest.json, pruned/)",
         entroprune::run_prune},
        {"report", "Emit summary, histogram, pruning-curve and rarity-gap CSVs",
         entroprune::run_report},
        {"pipeline", "Run every step in dependency order", entroprune::run_pipeline},
    };

    Step selected = nullptr;
    for (const auto &sub : subcommands) {
        CLI::App *cmd = app.add_subcommand(sub.name, sub.help);
        add_common_options(cmd, cli);
        cmd->callback([&selected, &sub]() { selected = sub.step; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e); // prints help, exits 0
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 1; // usage problems are validation errors
    }

    try {
        selected(effective_config(cli));
    } catch (const entroprune::ValidationError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const entroprune::IoError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
