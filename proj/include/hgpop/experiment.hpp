#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgpop/direct_mle.hpp"
#include "hgpop/evaluation.hpp"
#include "hgpop/io.hpp"
#include "hgpop/latent_model.hpp"
#include "hgpop/simulator.hpp"

namespace hgpop {

enum class RunMode { simulate, fit_mle, landscape, fit_vae, evaluate, benchmark };

RunMode parse_run_mode(std::string_view name);
std::string run_mode_name(RunMode mode);

enum class FigureKind { landscape, scaling, trajectory, histograms };

FigureKind parse_figure_kind(std::string_view name);
std::string figure_kind_name(FigureKind kind);

struct DataPaths {
    std::string counts;      // input count matrix; empty means simulate from the config
    std::string manifest;    // optional labels / ground truth sidecar
    std::string checkpoint;  // model to evaluate
    std::string output = "runs/latest";
};

/// One benchmark dataset recipe; seeds come from the experiment.
struct Scenario {
    std::string name;
    SimulationConfig simulation;
};

/// Sweep for the direct estimator: every (trials, f_max, seed) triple is
/// simulated and fitted. Empty lists fall back to the base simulation.
struct ScalingSweep {
    std::vector<int> trials;
    std::vector<double> f_max;
};

struct ExperimentConfig {
    RunMode mode = RunMode::benchmark;
    DataPaths paths;
    CountFormat format = CountFormat::dense_csv;
    SimulationConfig simulation;
    NetworkSpec network;
    TrainConfig train;
    OptimizerConfig optimizer;
    std::vector<std::uint64_t> seeds{0};
    std::vector<LikelihoodKind> likelihoods{LikelihoodKind::hypergeometric, LikelihoodKind::multinomial,
                                            LikelihoodKind::poisson};
    std::vector<Scenario> scenarios;
    ScalingSweep scaling;
    int kmeans_restarts = 10;
    /// Upper end of the landscape grid in both coordinates; 0 picks twice the largest observed count.
    Count landscape_max = 0;
    /// Record per-observation estimated totals every this many epochs during fit-vae (0 = off).
    int trajectory_every = 0;

    void validate() const;
};

void to_json(nlohmann::ordered_json& j, const ExperimentConfig& c);
void from_json(const nlohmann::ordered_json& j, ExperimentConfig& c);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Parses a config document; nlohmann parse/type errors surface as ValidationError.
ExperimentConfig parse_experiment_config(const std::string& text);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for a single value
    int count = 0;
};

/// nullopt when `values` is empty.
std::optional<MeanStd> mean_std(const std::vector<double>& values);

struct BenchmarkCell {
    std::string scenario;
    std::uint64_t seed = 0;
    LikelihoodKind kind = LikelihoodKind::hypergeometric;
    std::optional<double> ari;
    std::optional<double> mpe;
    std::optional<double> mae;
    std::string error;  // non-empty when the cell failed
    double seconds = 0.0;
};

struct KindSummary {
    LikelihoodKind kind = LikelihoodKind::hypergeometric;
    std::optional<MeanStd> ari;
    std::optional<MeanStd> mpe;
    std::optional<MeanStd> mae;
    int failures = 0;
};

struct BenchmarkRow {
    std::string scenario;
    int num_distributions = 0;
    int num_categories = 0;
    int trials_per_distribution = 0;
    std::vector<Count> total_counts;
    int unique_groups = 0;
    std::vector<KindSummary> kinds;
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;
    std::vector<BenchmarkCell> cells;
};

/// Trains one model per scenario x seed x likelihood, clusters the posterior
/// means and scores the estimates. Failed cells are recorded and skipped.
BenchmarkResult run_benchmark(const ExperimentConfig& config);

std::string benchmark_csv(const BenchmarkResult& result);
std::string benchmark_cells_csv(const BenchmarkResult& result);
nlohmann::ordered_json benchmark_json(const BenchmarkResult& result);

/// Runs `config.mode`, writing artifacts under `config.paths.output`
/// (always including config.resolved.json). Returns the output directory.
std::filesystem::path run_experiment(const ExperimentConfig& config);

/// Turns the artifacts of an earlier run into a long-form CSV for one figure.
/// Throws ValidationError naming the mode to run first when they are missing.
std::filesystem::path emit_figure_data(const std::filesystem::path& run_dir, FigureKind figure,
                                       const std::filesystem::path& out_dir);

/// Figure CSV headers, one per kind.
std::string figure_header(FigureKind figure);

}  // namespace hgpop
