// hgpop command-line entry point.
//
// Every subcommand resolves its configuration as defaults < --config file < flags,
// writes config.resolved.json plus its artifacts into --out and exits with
// 0 on success, 1 on invalid input and 2 on runtime failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hgpop/error.hpp"
#include "hgpop/experiment.hpp"

namespace {

using namespace hgpop;

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string likelihood;
    std::string format;
    std::string counts;
    std::string manifest;
    std::string checkpoint;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "run seed (replaces the config's seed list)");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--likelihood", f.likelihood, "decoder likelihood")
        ->check(CLI::IsMember({"hg", "mn", "poisson"}));
    cmd->add_option("--format", f.format, "count matrix file format")
        ->check(CLI::IsMember({"dense-csv", "sparse-triplet"}));
}

void add_inputs(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--counts", f.counts, "input count matrix (otherwise simulated)");
    cmd->add_option("--manifest", f.manifest, "labels / ground truth sidecar for --counts");
}

ExperimentConfig resolve(RunMode mode, const CommonFlags& f) {
    ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_experiment_config(f.config);
    cfg.mode = mode;
    if (f.seed) cfg.seeds = {*f.seed};
    if (!f.out.empty()) cfg.paths.output = f.out;
    if (!f.likelihood.empty()) {
        cfg.network.output_head = parse_likelihood(f.likelihood);
        cfg.likelihoods = {cfg.network.output_head};
    }
    if (!f.format.empty()) cfg.format = parse_count_format(f.format);
    if (!f.counts.empty()) cfg.paths.counts = f.counts;
    if (!f.manifest.empty()) cfg.paths.manifest = f.manifest;
    if (!f.checkpoint.empty()) cfg.paths.checkpoint = f.checkpoint;
    return cfg;
}

void print_benchmark(const std::filesystem::path& out) {
    std::ifstream in(out / "benchmark.csv");
    std::cout << in.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Population size estimation from under-sampled counts"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "hgpop 0.1.0");

    CommonFlags f;
    struct Sub {
        const char* name;
        RunMode mode;
        const char* help;
        bool inputs;
    };
    const Sub subs[] = {
        {"simulate", RunMode::simulate, "simulate an under-sampled count dataset", false},
        {"landscape", RunMode::landscape, "NLL over an integer grid for a two-category dataset", true},
        {"fit-mle", RunMode::fit_mle, "direct maximum-likelihood fit with Adam", true},
        {"fit-vae", RunMode::fit_vae, "train the latent variable model", true},
        {"evaluate", RunMode::evaluate, "score a trained checkpoint on a dataset", true},
        {"benchmark", RunMode::benchmark, "compare likelihoods over scenarios and seeds", false},
    };
    std::vector<std::pair<CLI::App*, RunMode>> commands;
    for (const Sub& s : subs) {
        CLI::App* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, f);
        if (s.inputs) add_inputs(cmd, f);
        if (s.mode == RunMode::evaluate) cmd->add_option("--checkpoint", f.checkpoint, "checkpoint.json to load");
        commands.emplace_back(cmd, s.mode);
    }

    std::string run_dir;
    std::string figure;
    CLI::App* emit = app.add_subcommand("emit-figure", "write plot-ready CSV from a finished run");
    emit->add_option("figure", figure, "landscape | scaling | trajectory | histograms")
        ->required()
        ->check(CLI::IsMember({"landscape", "scaling", "trajectory", "histograms"}));
    emit->add_option("--run", run_dir, "directory of the run to read")->required()->check(CLI::ExistingDirectory);
    emit->add_option("--out", f.out, "output directory (defaults to the run directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (emit->parsed()) {
            const auto path = emit_figure_data(run_dir, parse_figure_kind(figure), f.out.empty() ? run_dir : f.out);
            std::cout << path.string() << "\n";
            return 0;
        }
        for (const auto& [cmd, mode] : commands) {
            if (!cmd->parsed()) continue;
            const ExperimentConfig cfg = resolve(mode, f);
            const auto out = run_experiment(cfg);
            if (mode == RunMode::benchmark) print_benchmark(out);
            std::cout << out.string() << "\n";
        }
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const UnsupportedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
}
