#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "hgpop/config.hpp"
#include "hgpop/error.hpp"
#include "hgpop/experiment.hpp"

using namespace hgpop;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "hgpop_unit_experiment" / name;
    fs::remove_all(dir);
    return dir;
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

std::size_t line_count(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

ExperimentConfig tiny_benchmark() {
    ExperimentConfig cfg;
    cfg.mode = RunMode::benchmark;
    cfg.simulation.num_distributions = 2;
    cfg.simulation.num_categories = 4;
    cfg.simulation.trials_per_distribution = 30;
    cfg.simulation.total_counts = {60, 90};
    cfg.simulation.sample_fraction_min = 0.2;
    cfg.simulation.sample_fraction_max = 0.6;
    cfg.network.encoder_hidden = {8};
    cfg.network.decoder_hidden = {8};
    cfg.network.latent_dim = 2;
    cfg.train.max_epochs = 2;
    cfg.train.batch_size = 20;
    cfg.kmeans_restarts = 2;
    return cfg;
}

std::string validation_message(const std::string& text) {
    try {
        parse_experiment_config(text);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("mode and figure names") {
    for (auto m : {RunMode::simulate, RunMode::fit_mle, RunMode::landscape, RunMode::fit_vae, RunMode::evaluate,
                   RunMode::benchmark}) {
        CHECK(parse_run_mode(run_mode_name(m)) == m);
    }
    CHECK(run_mode_name(RunMode::fit_vae) == "fit-vae");
    CHECK_THROWS_AS(parse_run_mode("fit_vae"), ValidationError);
    CHECK(parse_figure_kind("histograms") == FigureKind::histograms);
    CHECK_THROWS_AS(parse_figure_kind("heatmap"), ValidationError);
}

TEST_CASE("config survives a JSON round trip") {
    ExperimentConfig cfg = tiny_benchmark();
    cfg.seeds = {3, 4};
    cfg.likelihoods = {LikelihoodKind::poisson};
    cfg.simulation.depth_reference_total = 60;
    cfg.scenarios.push_back({"s1", cfg.simulation});
    cfg.scaling.trials = {10, 100};
    cfg.scaling.f_max = {0.2};
    cfg.train.penalty.weight = 7.0;
    cfg.train.samples_per_observation = 2;
    cfg.optimizer.max_epochs = 33;
    cfg.landscape_max = 50;
    cfg.trajectory_every = 5;
    const nlohmann::ordered_json j = cfg;
    const ExperimentConfig back = parse_experiment_config(j.dump());
    CHECK(nlohmann::ordered_json(back) == j);
    CHECK(back.seeds == cfg.seeds);
    CHECK(back.network == cfg.network);
    CHECK(back.simulation.depth_reference_total == 60);
    CHECK(back.train.samples_per_observation == 2);
    CHECK(back.scenarios.size() == 1);
    CHECK_FALSE(j.at("simulation").contains("seed"));
    CHECK_FALSE(j.at("train").contains("seed"));
}

TEST_CASE("missing keys keep their defaults") {
    const auto cfg = parse_experiment_config(R"({"mode": "simulate"})");
    CHECK(cfg.mode == RunMode::simulate);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{0});
    CHECK(cfg.kmeans_restarts == 10);
    CHECK(cfg.network.latent_dim == NetworkSpec{}.latent_dim);
}

TEST_CASE("unknown keys and malformed documents are rejected") {
    CHECK(validation_message(R"({"mdoe": "simulate"})").find("mdoe") != std::string::npos);
    CHECK_FALSE(validation_message(R"({"simulation": {"num_categoriez": 3}})").empty());
    CHECK_FALSE(validation_message(R"({"train": {"adam": {"lr": 0.1}}})").empty());
    CHECK_FALSE(validation_message(R"({"paths": {"out": "x"}})").empty());
    CHECK_FALSE(validation_message("{not json").empty());
    CHECK_FALSE(validation_message(R"({"simulation": {"num_categories": "three"}})").empty());
    CHECK_FALSE(validation_message(R"({"likelihoods": ["gaussian"]})").empty());
}

TEST_CASE("seed precedence") {
    CHECK(parse_experiment_config(R"({"simulation": {"seed": 9}})").seeds == std::vector<std::uint64_t>{9});
    CHECK(parse_experiment_config(R"({"train": {"seed": 4}})").seeds == std::vector<std::uint64_t>{4});
    CHECK(parse_experiment_config(R"({"seeds": [2, 3]})").seeds == std::vector<std::uint64_t>{2, 3});
    CHECK(parse_experiment_config(R"({"seeds": [5], "simulation": {"seed": 5}})").seeds ==
          std::vector<std::uint64_t>{5});
    CHECK_FALSE(validation_message(R"({"simulation": {"seed": 1}, "train": {"seed": 2}})").empty());
    CHECK_FALSE(validation_message(R"({"seeds": [1, 2], "simulation": {"seed": 1}})").empty());
    CHECK_FALSE(validation_message(R"({"seeds": [3], "train": {"seed": 1}})").empty());
    CHECK_FALSE(
        validation_message(R"({"scenarios": [{"name": "a", "simulation": {"seed": 1}}]})").empty());
}

TEST_CASE("config validation") {
    ExperimentConfig cfg;
    cfg.seeds.clear();
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = ExperimentConfig{};
    cfg.mode = RunMode::evaluate;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = ExperimentConfig{};
    cfg.paths.counts = "/definitely/not/here.csv";
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = ExperimentConfig{};
    cfg.scaling.f_max = {1.5};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("mean and sample standard deviation") {
    CHECK_FALSE(mean_std({}).has_value());
    const auto one = mean_std({4.0});
    REQUIRE(one.has_value());
    CHECK(one->mean == 4.0);
    CHECK(one->std == 0.0);
    const auto m = mean_std({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
    CHECK(m->mean == doctest::Approx(5.0));
    CHECK(m->std == doctest::Approx(std::sqrt(32.0 / 7.0)));
    CHECK(m->count == 8);
}

TEST_CASE("benchmark with one seed and one likelihood gives one row") {
    ExperimentConfig cfg = tiny_benchmark();
    cfg.likelihoods = {LikelihoodKind::hypergeometric};
    const auto res = run_benchmark(cfg);
    REQUIRE(res.rows.size() == 1);
    REQUIRE(res.rows[0].kinds.size() == 1);
    CHECK(res.cells.size() == 1);
    // realized totals after rounding the drawn proportions
    REQUIRE(res.rows[0].total_counts.size() == 2);
    CHECK(std::abs(res.rows[0].total_counts[0] - 60) <= 2);
    CHECK(std::abs(res.rows[0].total_counts[1] - 90) <= 2);
    CHECK(res.rows[0].kinds[0].failures == 0);
    REQUIRE(res.rows[0].kinds[0].ari.has_value());
    CHECK(res.rows[0].kinds[0].ari->count == 1);
    CHECK(res.rows[0].kinds[0].ari->std == 0.0);
    const std::string csv = benchmark_csv(res);
    CHECK(line_count(csv) == 2);
    CHECK(csv.rfind("scenario,distributions", 0) == 0);
}

TEST_CASE("benchmark output is reproducible") {
    ExperimentConfig cfg = tiny_benchmark();
    cfg.seeds = {1, 2};
    const auto a = run_benchmark(cfg);
    const auto b = run_benchmark(cfg);
    CHECK(benchmark_csv(a) == benchmark_csv(b));
    CHECK(benchmark_cells_csv(a) == benchmark_cells_csv(b));
    CHECK(a.cells.size() == 6);
    CHECK(a.rows[0].kinds.size() == 3);
}

TEST_CASE("figure headers") {
    CHECK(figure_header(FigureKind::landscape) == "n1,n2,nll");
    CHECK(figure_header(FigureKind::scaling) == "trials,f_max,seed,error");
    CHECK(figure_header(FigureKind::histograms) == "observation,distribution_label,measured_total,estimated_total");
}

TEST_CASE("landscape run feeds the landscape figure") {
    ExperimentConfig cfg;
    cfg.mode = RunMode::landscape;
    cfg.simulation.num_categories = 2;
    cfg.simulation.trials_per_distribution = 100;
    cfg.simulation.ground_truth = std::vector<std::vector<Count>>{{14, 6}};
    cfg.landscape_max = 30;
    cfg.paths.output = scratch("landscape").string();
    const auto run = run_experiment(cfg);
    CHECK(fs::exists(run / "config.resolved.json"));
    CHECK(fs::exists(run / "landscape.json"));
    const auto fig = emit_figure_data(run, FigureKind::landscape, run / "figures");
    CHECK(first_line(fig) == "n1,n2,nll");
}

TEST_CASE("scaling sweep feeds the scaling figure") {
    ExperimentConfig cfg;
    cfg.mode = RunMode::fit_mle;
    cfg.simulation.num_categories = 2;
    cfg.simulation.ground_truth = std::vector<std::vector<Count>>{{12, 8}};
    cfg.scaling.trials = {20, 40};
    cfg.scaling.f_max = {0.5};
    cfg.optimizer.max_epochs = 50;
    cfg.seeds = {0, 1};
    cfg.paths.output = scratch("scaling").string();
    const auto run = run_experiment(cfg);
    const auto fig = emit_figure_data(run, FigureKind::scaling, run / "figures");
    std::ifstream in(fig);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(first_line(fig) == "trials,f_max,seed,error");
    CHECK(line_count(ss.str()) == 1 + 4);
}

TEST_CASE("fit-vae run feeds the histogram figure") {
    ExperimentConfig cfg = tiny_benchmark();
    cfg.mode = RunMode::fit_vae;
    cfg.likelihoods = {LikelihoodKind::hypergeometric};
    cfg.network.output_head = LikelihoodKind::hypergeometric;
    cfg.trajectory_every = 1;
    cfg.paths.output = scratch("vae").string();
    const auto run = run_experiment(cfg);
    CHECK(fs::exists(run / "checkpoint.json"));
    const auto hist = emit_figure_data(run, FigureKind::histograms, run / "figures");
    CHECK(first_line(hist) == figure_header(FigureKind::histograms));
    const auto traj = emit_figure_data(run, FigureKind::trajectory, run / "figures");
    CHECK(first_line(traj) == figure_header(FigureKind::trajectory));
}

TEST_CASE("missing artifacts name the mode to run") {
    const fs::path empty = scratch("empty");
    fs::create_directories(empty);
    auto message = [&](FigureKind f) {
        try {
            emit_figure_data(empty, f, empty / "figures");
        } catch (const ValidationError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message(FigureKind::landscape).find("`landscape`") != std::string::npos);
    CHECK(message(FigureKind::scaling).find("`fit-mle`") != std::string::npos);
    CHECK(message(FigureKind::histograms).find("fit-vae") != std::string::npos);
    CHECK(message(FigureKind::trajectory).find("fit-vae") != std::string::npos);
}

}  // TEST_SUITE
