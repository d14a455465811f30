#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rankbed/config.hpp"
#include "rankbed/errors.hpp"
#include "rankbed/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "Path to the JSON run configuration")
        ->required();
    cmd->add_option("--override", opts.overrides,
                    "Override a config key, e.g. --override listwise.window_size=30")
        ->take_all();
}

int run_command(const CommonOptions& opts, const std::string& command) {
    rankbed::RunConfig cfg;
    try {
        std::vector<std::string> warnings;
        cfg = rankbed::validate_config(opts.config_path, opts.overrides, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    } catch (const rankbed::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return rankbed::kExitValidation;
    }
    return rankbed::orchestrate(cfg, command);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rankbed - two-stage retrieve-and-rerank testbed"};
    app.require_subcommand(1);

    static const std::vector<std::pair<std::string, std::string>> kCommands = {
        {"index", "Build and persist the BM25 inverted index"},
        {"retrieve", "Produce first-stage candidate pools (top-k BM25)"},
        {"rerank", "Rerank first-stage pools with the configured reranker"},
        {"eval", "NDCG/Recall per query and means for a run file"},
        {"reward", "Batch gated multi-view rewards over window trace sidecars"},
        {"calibrate", "ECE and reliability artifacts from judgment sidecars"},
        {"classify-eval", "Matched-prior pools and TPR/TNR rates"},
        {"report", "Aggregate artifacts in the output directory"},
    };

    std::vector<CommonOptions> opts(kCommands.size());
    for (std::size_t i = 0; i < kCommands.size(); ++i) {
        auto* cmd = app.add_subcommand(kCommands[i].first, kCommands[i].second);
        add_common(cmd, opts[i]);
    }

    // dataset generator has its own arguments
    std::string synth_dir = "data/synth";
    std::uint64_t synth_seed = 7;
    std::size_t synth_queries = 50;
    std::size_t synth_docs = 200;
    auto* synth = app.add_subcommand("synth", "Write the deterministic synthetic dataset");
    synth->add_option("--output", synth_dir, "Target directory");
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--queries", synth_queries, "Number of queries");
    synth->add_option("--docs", synth_docs, "Number of documents");

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        try {
            rankbed::make_synthetic_dataset(synth_dir, synth_seed, synth_queries, synth_docs);
            std::cout << "synthetic dataset -> " << synth_dir << "\n";
            return rankbed::kExitOk;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return rankbed::kExitRuntime;
        }
    }
    for (std::size_t i = 0; i < kCommands.size(); ++i) {
        if (app.get_subcommand(kCommands[i].first)->parsed()) {
            return run_command(opts[i], kCommands[i].first);
        }
    }
    std::cerr << "no command given\n";
    return rankbed::kExitValidation;
}
