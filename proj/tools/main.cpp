#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "causal/pipeline.hpp"

// Exit codes: 0 success, 1 invalid input or missing artifact, 2 runtime failure.

namespace {

struct Globals {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

causal::PipelineConfig resolve(const Globals& g) {
    auto cfg = causal::PipelineConfig::load(g.config);
    // precedence for the output directory: --out, then the environment, then the config
    if (!g.out.empty()) cfg.out_dir = g.out;
    else if (const char* env = std::getenv("CAUSAL_ENSEMBLE_OUT"); env && *env) cfg.out_dir = env;
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble causal discovery and effect estimation pipeline"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "INI or JSON pipeline configuration")->required()->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output directory (overrides CAUSAL_ENSEMBLE_OUT and the config)");
    app.add_option("--seed", g.seed, "master seed (overrides the config)");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);

    using Stage = void (causal::Pipeline::*)();
    const std::vector<std::tuple<std::string, std::string, Stage>> stages{
        {"generate", "sample the configured SCM", &causal::Pipeline::generate},
        {"preprocess", "build the analysis cohort", &causal::Pipeline::preprocess},
        {"subgroup", "fit the heterogeneous-effect mixture and select the enhanced subgroup", &causal::Pipeline::subgroup},
        {"discover", "run the seven structure-learning algorithms", &causal::Pipeline::discover},
        {"vote", "tally edge votes into a consensus DAG", &causal::Pipeline::vote},
        {"identify", "find backdoor adjustment sets on the consensus DAG", &causal::Pipeline::identify},
        {"estimate", "estimate the causal effect with bootstrap intervals", &causal::Pipeline::estimate},
        {"report", "write the plain-text summary", &causal::Pipeline::report},
        {"run-all", "run every stage in order", &causal::Pipeline::run_all},
    };
    std::map<CLI::App*, Stage> by_cmd;
    for (const auto& [name, help, fn] : stages) by_cmd[app.add_subcommand(name, help)] = fn;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        causal::Pipeline pipeline(resolve(g), std::cerr);
        for (auto* sub : app.get_subcommands()) (pipeline.*by_cmd.at(sub))();
        return 0;
    } catch (const std::invalid_argument& e) {  // ValidationError and MissingArtifact
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}
