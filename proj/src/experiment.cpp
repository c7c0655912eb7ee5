#include "hgpop/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "hgpop/config.hpp"
#include "hgpop/error.hpp"

namespace hgpop {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

// Long-form CSV as written by this module: header plus plain comma rows.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name, const fs::path& origin) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ValidationError(origin.string() + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

Table read_table(const fs::path& path) {
    std::istringstream in(read_text(path));
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
    t.header = split(line, ',');
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split(line, ','));
        if (t.rows.back().size() != t.header.size()) {
            throw ValidationError(path.string() + ": ragged row " + std::to_string(t.rows.size() + 1));
        }
    }
    return t;
}

std::string csv_safe(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

Rng seeded(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream, 0x51edu};
    return Rng(seq);
}

int count_labels(const std::vector<int>& labels) {
    return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

int unique_groups(const SimulationConfig& sim) {
    int n = sim.num_distributions;
    for (const auto& g : sim.shared_prob_groups) n -= std::max<int>(0, static_cast<int>(g.size()) - 1);
    return n;
}

std::string join_counts(const std::vector<Count>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += std::to_string(v[i]);
    }
    return out;
}

struct Dataset {
    CountMatrix counts;
    std::optional<DatasetManifest> manifest;
};

Dataset load_or_simulate(const ExperimentConfig& config, std::uint64_t seed) {
    Dataset d;
    if (!config.paths.counts.empty()) {
        d.counts = read_counts(config.paths.counts, config.format);
        if (!config.paths.manifest.empty()) {
            d.manifest = read_manifest(config.paths.manifest);
            check_manifest(*d.manifest, d.counts);
        }
        return d;
    }
    SimulationConfig sim = config.simulation;
    sim.seed = seed;
    SimulatedDataset ds = simulate_dataset(sim);
    d.manifest = manifest_for(ds, sim);
    d.counts = std::move(ds.counts);
    return d;
}

// Ground truth of a single-distribution dataset, the only case with one true estimate.
std::optional<std::vector<Count>> single_truth(const std::optional<DatasetManifest>& m) {
    if (!m || m->ground_truth.empty() || m->labels.empty()) return std::nullopt;
    if (count_labels(m->labels) != 1) return std::nullopt;
    return m->ground_truth.at(static_cast<std::size_t>(m->labels.front()));
}

std::string matrix_csv(const RealMatrix& m, const std::string& prefix) {
    std::string out;
    for (std::size_t c = 0; c < m.cols; ++c) out += (c ? "," : "") + prefix + std::to_string(c);
    out += '\n';
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) out += (c ? "," : "") + num(m(r, c));
        out += '\n';
    }
    return out;
}

std::string observation_totals_csv(const CountMatrix& counts, const RealMatrix& est, const std::vector<int>* labels) {
    std::string out = figure_header(FigureKind::histograms) + "\n";
    for (std::size_t r = 0; r < counts.rows(); ++r) {
        double total = 0.0;
        for (double v : est.row(r)) total += v;
        out += std::to_string(r) + "," + std::to_string(labels ? (*labels)[r] : -1) + "," +
               std::to_string(counts.row_total(r)) + "," + num(total) + "\n";
    }
    return out;
}

// ARI via k-means on posterior means plus count metrics when the head estimates counts.
MetricReport score_model(const CountMatrix& counts, const NetworkParams& params, const DatasetManifest& manifest,
                         int restarts, std::uint64_t seed, const RealMatrix* estimates) {
    MetricReport report;
    const LikelihoodKind kind = params.spec().output_head;
    if (kind != LikelihoodKind::multinomial && !manifest.ground_truth.empty()) {
        RealMatrix est = estimates ? *estimates : infer_estimates(counts, params, false);
        report = estimation_report(est, manifest.labels, manifest.ground_truth);
    }
    const int k = count_labels(manifest.labels);
    if (k >= 2 && static_cast<std::size_t>(k) <= counts.rows()) {
        Rng rng = seeded(seed, 4);
        const KMeansResult km = kmeans(latent_means(counts, params), k, restarts, rng, &manifest.labels);
        report.ari = km.ari;
    }
    return report;
}

void require_file(const fs::path& path, const std::string& what, const std::string& mode) {
    if (!fs::exists(path)) {
        throw ValidationError("missing " + what + " (" + path.string() + "); run `" + mode + "` first");
    }
}

// ---------------------------------------------------------------- modes

void run_simulate(const ExperimentConfig& config, const fs::path& out) {
    SimulationConfig sim = config.simulation;
    sim.seed = config.seeds.front();
    const SimulatedDataset ds = simulate_dataset(sim);
    const std::string name = config.format == CountFormat::dense_csv ? "counts.csv" : "counts.triplets.csv";
    write_counts(out / name, ds.counts, config.format);
    write_manifest(out / "manifest.json", manifest_for(ds, sim));
}

void run_landscape(const ExperimentConfig& config, const fs::path& out) {
    const Dataset data = load_or_simulate(config, config.seeds.front());
    if (data.counts.cols() != 2) throw UnsupportedError("landscape: needs exactly two categories");
    const auto mx = data.counts.column_max();
    const Count hi = config.landscape_max > 0 ? config.landscape_max : 2 * std::max(mx[0], mx[1]);
    const NllLandscape land =
        nll_landscape(data.counts, {mx[0], std::max(hi, mx[0])}, {mx[1], std::max(hi, mx[1])});
    const auto [a1, a2] = land.argmin();

    json grid = json::array();
    for (double v : land.nll) grid.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    json doc{{"n1_values", land.n1_values}, {"n2_values", land.n2_values}, {"nll", grid}};
    write_text(out / "landscape.json", doc.dump() + "\n");

    json metrics{{"argmin", {a1, a2}}};
    if (auto truth = single_truth(data.manifest)) {
        metrics["ground_truth"] = *truth;
        metrics["manhattan"] = std::llabs(a1 - (*truth)[0]) + std::llabs(a2 - (*truth)[1]);
    }
    write_text(out / "metrics.json", metrics.dump(2) + "\n");
}

void run_fit_mle(const ExperimentConfig& config, const fs::path& out) {
    struct Job {
        std::optional<int> trials;
        std::optional<double> f_max;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    const bool sweep = !config.scaling.trials.empty() || !config.scaling.f_max.empty();
    if (sweep) {
        if (!config.paths.counts.empty()) throw ValidationError("fit-mle: a scaling sweep simulates its own data");
        std::vector<int> trials = config.scaling.trials;
        if (trials.empty()) trials.push_back(config.simulation.trials_per_distribution);
        std::vector<double> fmax = config.scaling.f_max;
        if (fmax.empty()) fmax.push_back(config.simulation.sample_fraction_max);
        for (int t : trials) {
            for (double f : fmax) {
                for (auto s : config.seeds) jobs.push_back({t, f, s});
            }
        }
    } else if (config.paths.counts.empty()) {
        for (auto s : config.seeds) {
            jobs.push_back({config.simulation.trials_per_distribution, config.simulation.sample_fraction_max, s});
        }
    } else {
        jobs.push_back({std::nullopt, std::nullopt, config.seeds.front()});
    }

    std::string fits;
    std::string traj = "trials,f_max,seed,epoch,nll,loss,error";
    std::size_t k = 0;
    json summary = json::array();
    for (const Job& job : jobs) {
        Dataset data;
        if (job.trials && config.paths.counts.empty()) {
            SimulationConfig sim = config.simulation;
            sim.trials_per_distribution = *job.trials;
            sim.sample_fraction_max = *job.f_max;
            sim.seed = job.seed;
            SimulatedDataset ds = simulate_dataset(sim);
            data.manifest = manifest_for(ds, sim);
            data.counts = std::move(ds.counts);
        } else {
            data = load_or_simulate(config, job.seed);
        }
        if (k == 0) {
            k = data.counts.cols();
            fits = "trials,f_max,seed,epochs,nll,error";
            for (std::size_t i = 0; i < k; ++i) {
                fits += ",est_" + std::to_string(i);
                traj += ",est_" + std::to_string(i);
            }
            fits += '\n';
            traj += '\n';
        }
        const auto truth = single_truth(data.manifest);
        const FitResult fit = fit_single(data.counts, config.optimizer, truth);
        const FitTrajectory& tr = fit.trajectory;
        const std::string trials = job.trials ? std::to_string(*job.trials) : std::to_string(data.counts.rows());
        const std::string fmax = job.f_max ? num(*job.f_max) : "";
        const std::string key = trials + "," + fmax + "," + std::to_string(job.seed);

        std::optional<double> final_error;
        if (truth) {
            std::vector<double> rounded;
            for (Count v : fit.estimate.rounded()) rounded.push_back(static_cast<double>(v));
            final_error = manhattan_error(rounded, *truth);
        }
        fits += key + "," + std::to_string(tr.nll.size()) + "," + num(hypergeom_nll(data.counts, fit.estimate)) +
                "," + opt_num(final_error);
        for (double v : fit.estimate.sizes()) fits += "," + num(v);
        fits += '\n';
        for (std::size_t e = 0; e < tr.nll.size(); ++e) {
            traj += key + "," + std::to_string(e) + "," + num(tr.nll[e]) + "," + num(tr.loss[e]) + "," +
                    (tr.error.empty() ? std::string() : num(tr.error[e]));
            for (double v : tr.estimates[e]) traj += "," + num(v);
            traj += '\n';
        }
        const std::vector<double> sizes(fit.estimate.sizes().begin(), fit.estimate.sizes().end());
        summary.push_back(json{{"trials", job.trials ? json(*job.trials) : json(data.counts.rows())},
                               {"f_max", job.f_max ? json(*job.f_max) : json(nullptr)},
                               {"seed", job.seed},
                               {"estimate", sizes},
                               {"error", opt_json(final_error)}});
    }
    write_text(out / "fits.csv", fits);
    write_text(out / "trajectories.csv", traj);
    write_text(out / "metrics.json", json{{"fits", summary}}.dump(2) + "\n");
}

void write_model_outputs(const fs::path& out, const CountMatrix& counts, const NetworkParams& params,
                         const std::optional<DatasetManifest>& manifest, int restarts, std::uint64_t seed) {
    const RealMatrix est = infer_estimates(counts, params, false);
    write_text(out / "estimates.csv", matrix_csv(est, params.spec().output_head == LikelihoodKind::hypergeometric
                                                           ? "est_"
                                                           : (params.spec().output_head == LikelihoodKind::poisson
                                                                  ? "rate_"
                                                                  : "prob_")));
    write_text(out / "latent.csv", matrix_csv(latent_means(counts, params), "z_"));

    std::string summary = "observation,t_total,t_unique\n";
    const auto sums = estimate_summary(est);
    for (std::size_t r = 0; r < sums.size(); ++r) {
        summary += std::to_string(r) + "," + num(sums[r].t_total) + "," + std::to_string(sums[r].t_unique) + "\n";
    }
    write_text(out / "summary.csv", summary);

    const std::vector<int>* labels = manifest && !manifest->labels.empty() ? &manifest->labels : nullptr;
    if (params.spec().output_head != LikelihoodKind::multinomial) {
        write_text(out / "observation_totals.csv", observation_totals_csv(counts, est, labels));
    }
    if (manifest && !manifest->labels.empty()) {
        const MetricReport report = score_model(counts, params, *manifest, restarts, seed, &est);
        write_text(out / "metrics.json", metric_report_json(report) + "\n");
        write_text(out / "metrics.csv", metric_report_csv_header() + "\n" + metric_report_csv_row(report) + "\n");
    }
}

void run_fit_vae(const ExperimentConfig& config, const fs::path& out) {
    const std::uint64_t seed = config.seeds.front();
    const Dataset data = load_or_simulate(config, seed);
    TrainConfig tc = config.train;
    tc.seed = seed;

    std::string traj;
    const std::vector<int>* labels =
        data.manifest && !data.manifest->labels.empty() ? &data.manifest->labels : nullptr;
    EpochCallback cb;
    if (config.trajectory_every > 0 && config.network.output_head != LikelihoodKind::multinomial) {
        traj = figure_header(FigureKind::trajectory) + "\n";
        cb = [&](int epoch, const NetworkParams& p) {
            if ((epoch + 1) % config.trajectory_every != 0 && epoch + 1 != tc.max_epochs) return;
            const RealMatrix est = infer_estimates(data.counts, p, false);
            for (std::size_t r = 0; r < est.rows; ++r) {
                double total = 0.0;
                for (double v : est.row(r)) total += v;
                traj += std::to_string(epoch) + "," + std::to_string(r) + "," +
                        std::to_string(labels ? (*labels)[r] : -1) + "," + num(total) + "\n";
            }
        };
    }
    const TrainResult res = train(data.counts, config.network, tc, cb);

    std::string hist = "epoch,kl,nll,penalty,total,violated_fraction\n";
    for (const auto& h : res.history) {
        hist += std::to_string(h.epoch) + "," + num(h.mean.kl) + "," + num(h.mean.nll) + "," + num(h.mean.penalty) +
                "," + num(h.mean.total) + "," + num(h.violated_fraction) + "\n";
    }
    write_text(out / "history.csv", hist);
    if (!traj.empty()) write_text(out / "total_trajectory.csv", traj);
    save_checkpoint(out / "checkpoint.json", res.params);
    if (config.paths.counts.empty()) {
        write_counts(out / "counts.csv", data.counts, CountFormat::dense_csv);
        write_manifest(out / "manifest.json", *data.manifest);
    }
    write_model_outputs(out, data.counts, res.params, data.manifest, config.kmeans_restarts, seed);
}

void run_evaluate(const ExperimentConfig& config, const fs::path& out) {
    const NetworkParams params = load_checkpoint(config.paths.checkpoint);
    const CountMatrix counts = read_counts(config.paths.counts, config.format);
    if (static_cast<int>(counts.cols()) != params.num_categories()) {
        throw ValidationError("evaluate: checkpoint expects " + std::to_string(params.num_categories()) +
                              " categories, data has " + std::to_string(counts.cols()));
    }
    std::optional<DatasetManifest> manifest;
    if (!config.paths.manifest.empty()) {
        manifest = read_manifest(config.paths.manifest);
        check_manifest(*manifest, counts);
    }
    write_model_outputs(out, counts, params, manifest, config.kmeans_restarts, config.seeds.front());
}

void run_benchmark_mode(const ExperimentConfig& config, const fs::path& out) {
    const BenchmarkResult result = run_benchmark(config);
    write_text(out / "benchmark.csv", benchmark_csv(result));
    write_text(out / "benchmark_cells.csv", benchmark_cells_csv(result));
    write_text(out / "benchmark.json", benchmark_json(result).dump(2) + "\n");
}

template <typename E>
struct Names {
    E value;
    const char* name;
};

constexpr Names<RunMode> kModes[] = {{RunMode::simulate, "simulate"},   {RunMode::fit_mle, "fit-mle"},
                                     {RunMode::landscape, "landscape"}, {RunMode::fit_vae, "fit-vae"},
                                     {RunMode::evaluate, "evaluate"},   {RunMode::benchmark, "benchmark"}};

constexpr Names<FigureKind> kFigures[] = {{FigureKind::landscape, "landscape"},
                                          {FigureKind::scaling, "scaling"},
                                          {FigureKind::trajectory, "trajectory"},
                                          {FigureKind::histograms, "histograms"}};

}  // namespace

RunMode parse_run_mode(std::string_view name) {
    for (const auto& m : kModes) {
        if (name == m.name) return m.value;
    }
    throw ValidationError("unknown mode '" + std::string(name) + "'");
}

std::string run_mode_name(RunMode mode) {
    for (const auto& m : kModes) {
        if (m.value == mode) return m.name;
    }
    return "?";
}

FigureKind parse_figure_kind(std::string_view name) {
    for (const auto& f : kFigures) {
        if (name == f.name) return f.value;
    }
    throw ValidationError("unknown figure '" + std::string(name) + "' (landscape|scaling|trajectory|histograms)");
}

std::string figure_kind_name(FigureKind kind) {
    for (const auto& f : kFigures) {
        if (f.value == kind) return f.name;
    }
    return "?";
}

std::string figure_header(FigureKind figure) {
    switch (figure) {
        case FigureKind::landscape: return "n1,n2,nll";
        case FigureKind::scaling: return "trials,f_max,seed,error";
        case FigureKind::trajectory: return "epoch,observation,distribution_label,estimated_total";
        case FigureKind::histograms: return "observation,distribution_label,measured_total,estimated_total";
    }
    return {};
}

void ExperimentConfig::validate() const {
    simulation.validate();
    network.validate();
    train.validate();
    optimizer.validate();
    if (seeds.empty()) throw ValidationError("config: seeds must not be empty");
    if (likelihoods.empty()) throw ValidationError("config: likelihoods must not be empty");
    if (kmeans_restarts < 1) throw ValidationError("config: kmeans_restarts must be >= 1");
    if (landscape_max < 0) throw ValidationError("config: landscape_max must be >= 0");
    if (trajectory_every < 0) throw ValidationError("config: trajectory_every must be >= 0");
    for (const auto& s : scenarios) s.simulation.validate();
    for (int t : scaling.trials) {
        if (t < 1) throw ValidationError("config: scaling.trials entries must be >= 1");
    }
    for (double f : scaling.f_max) {
        if (!(f > 0.0 && f <= 1.0)) throw ValidationError("config: scaling.f_max entries must be in (0, 1]");
    }
    auto must_exist = [](const std::string& p, const char* what) {
        if (!p.empty() && !fs::exists(p)) throw ValidationError(std::string("config: ") + what + " not found: " + p);
    };
    must_exist(paths.counts, "paths.counts");
    must_exist(paths.manifest, "paths.manifest");
    must_exist(paths.checkpoint, "paths.checkpoint");
    if (mode == RunMode::evaluate) {
        if (paths.counts.empty()) throw ValidationError("evaluate: paths.counts is required");
        if (paths.checkpoint.empty()) throw ValidationError("evaluate: paths.checkpoint is required");
    }
    if (!paths.manifest.empty() && paths.counts.empty()) {
        throw ValidationError("config: paths.manifest given without paths.counts");
    }
    if (paths.output.empty()) throw ValidationError("config: paths.output must not be empty");
}

void to_json(json& j, const ExperimentConfig& c) {
    json scenarios = json::array();
    for (const auto& s : c.scenarios) {
        json sim = s.simulation;
        sim.erase("seed");
        scenarios.push_back({{"name", s.name}, {"simulation", sim}});
    }
    json kinds = json::array();
    for (auto k : c.likelihoods) kinds.push_back(likelihood_name(k));
    j = json{{"mode", run_mode_name(c.mode)},
             {"paths",
              {{"counts", c.paths.counts},
               {"manifest", c.paths.manifest},
               {"checkpoint", c.paths.checkpoint},
               {"output", c.paths.output}}},
             {"format", count_format_name(c.format)},
             {"simulation", c.simulation},
             {"network", c.network},
             {"train", c.train},
             {"optimizer", c.optimizer},
             {"seeds", c.seeds},
             {"likelihoods", kinds},
             {"scenarios", scenarios},
             {"scaling", {{"trials", c.scaling.trials}, {"f_max", c.scaling.f_max}}},
             {"kmeans_restarts", c.kmeans_restarts},
             {"landscape_max", c.landscape_max},
             {"trajectory_every", c.trajectory_every}};
    // seeds is the single source of run seeds
    j["simulation"].erase("seed");
    j["train"].erase("seed");
}

void from_json(const json& j, ExperimentConfig& c) {
    if (!j.is_object()) throw ValidationError("config: expected a JSON object");
    static const std::set<std::string> allowed{"mode",     "paths",       "format",    "simulation",
                                               "network",  "train",       "optimizer", "seeds",
                                               "likelihoods", "scenarios", "scaling",  "kmeans_restarts",
                                               "landscape_max", "trajectory_every"};
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw ValidationError("config: unknown key '" + key + "'");
    }
    if (j.contains("mode")) c.mode = parse_run_mode(j.at("mode").get<std::string>());
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        if (!p.is_object()) throw ValidationError("paths: expected a JSON object");
        for (const auto& [key, _] : p.items()) {
            if (key != "counts" && key != "manifest" && key != "checkpoint" && key != "output") {
                throw ValidationError("paths: unknown key '" + key + "'");
            }
        }
        if (p.contains("counts")) c.paths.counts = p.at("counts").get<std::string>();
        if (p.contains("manifest")) c.paths.manifest = p.at("manifest").get<std::string>();
        if (p.contains("checkpoint")) c.paths.checkpoint = p.at("checkpoint").get<std::string>();
        if (p.contains("output")) c.paths.output = p.at("output").get<std::string>();
    }
    if (j.contains("format")) c.format = parse_count_format(j.at("format").get<std::string>());
    if (j.contains("simulation")) c.simulation = j.at("simulation").get<SimulationConfig>();
    if (j.contains("network")) c.network = j.at("network").get<NetworkSpec>();
    if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
    if (j.contains("optimizer")) c.optimizer = j.at("optimizer").get<OptimizerConfig>();
    // `seeds` drives every mode; a lone simulation/train seed is taken as the run seed
    std::optional<std::uint64_t> inner;
    for (const char* section : {"simulation", "train"}) {
        if (!j.contains(section) || !j.at(section).contains("seed")) continue;
        const auto s = j.at(section).at("seed").get<std::uint64_t>();
        if (inner && *inner != s) throw ValidationError("config: simulation.seed and train.seed disagree; use seeds");
        inner = s;
    }
    if (j.contains("seeds")) {
        c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (inner && (c.seeds.size() != 1 || c.seeds.front() != *inner)) {
            throw ValidationError("config: nested seed conflicts with seeds; set only seeds");
        }
    } else if (inner) {
        c.seeds = {*inner};
    }
    if (j.contains("likelihoods")) {
        c.likelihoods.clear();
        for (const auto& k : j.at("likelihoods")) c.likelihoods.push_back(parse_likelihood(k.get<std::string>()));
    }
    if (j.contains("scenarios")) {
        // each scenario's simulation is layered over the top-level one
        json base = c.simulation;
        c.scenarios.clear();
        for (const auto& s : j.at("scenarios")) {
            if (!s.is_object()) throw ValidationError("scenarios: expected objects");
            for (const auto& [key, _] : s.items()) {
                if (key != "name" && key != "simulation") throw ValidationError("scenarios: unknown key '" + key + "'");
            }
            json sim = base;
            if (s.contains("simulation")) {
                if (s.at("simulation").contains("seed")) throw ValidationError("scenarios: seeds come from the top-level seeds list");
                sim.merge_patch(s.at("simulation"));
            }
            Scenario sc;
            sc.name = s.value("name", "scenario_" + std::to_string(c.scenarios.size()));
            sc.simulation = sim.get<SimulationConfig>();
            c.scenarios.push_back(std::move(sc));
        }
    }
    if (j.contains("scaling")) {
        const auto& s = j.at("scaling");
        if (!s.is_object()) throw ValidationError("scaling: expected a JSON object");
        for (const auto& [key, _] : s.items()) {
            if (key != "trials" && key != "f_max") throw ValidationError("scaling: unknown key '" + key + "'");
        }
        if (s.contains("trials")) c.scaling.trials = s.at("trials").get<std::vector<int>>();
        if (s.contains("f_max")) c.scaling.f_max = s.at("f_max").get<std::vector<double>>();
    }
    if (j.contains("kmeans_restarts")) c.kmeans_restarts = j.at("kmeans_restarts").get<int>();
    if (j.contains("landscape_max")) c.landscape_max = j.at("landscape_max").get<Count>();
    if (j.contains("trajectory_every")) c.trajectory_every = j.at("trajectory_every").get<int>();
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    try {
        return json::parse(text).get<ExperimentConfig>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    try {
        return parse_experiment_config(read_text(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::optional<MeanStd> mean_std(const std::vector<double>& values) {
    if (values.empty()) return std::nullopt;
    MeanStd m;
    m.count = static_cast<int>(values.size());
    m.mean = std::accumulate(values.begin(), values.end(), 0.0) / m.count;
    if (m.count > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - m.mean) * (v - m.mean);
        m.std = std::sqrt(ss / (m.count - 1));
    }
    return m;
}

BenchmarkResult run_benchmark(const ExperimentConfig& config) {
    std::vector<Scenario> scenarios = config.scenarios;
    if (scenarios.empty()) scenarios.push_back({"default", config.simulation});

    BenchmarkResult result;
    for (const Scenario& scenario : scenarios) {
        BenchmarkRow row;
        row.scenario = scenario.name;
        row.num_distributions = scenario.simulation.num_distributions;
        row.num_categories = scenario.simulation.num_categories;
        row.trials_per_distribution = scenario.simulation.trials_per_distribution;
        row.unique_groups = unique_groups(scenario.simulation);

        std::map<LikelihoodKind, std::vector<const BenchmarkCell*>> by_kind;
        const std::size_t first_cell = result.cells.size();
        for (std::uint64_t seed : config.seeds) {
            SimulationConfig sim = scenario.simulation;
            sim.seed = seed;
            std::optional<SimulatedDataset> ds;
            std::string sim_error;
            try {
                ds = simulate_dataset(sim);
                if (row.total_counts.empty()) {
                    for (const auto& gt : ds->ground_truth) {
                        row.total_counts.push_back(std::accumulate(gt.begin(), gt.end(), Count{0}));
                    }
                }
            } catch (const std::exception& e) {
                sim_error = std::string("simulate: ") + e.what();
            }
            for (LikelihoodKind kind : config.likelihoods) {
                BenchmarkCell cell;
                cell.scenario = scenario.name;
                cell.seed = seed;
                cell.kind = kind;
                const auto t0 = std::chrono::steady_clock::now();
                if (!ds) {
                    cell.error = sim_error;
                } else {
                    try {
                        NetworkSpec spec = config.network;
                        spec.output_head = kind;
                        TrainConfig tc = config.train;
                        tc.seed = seed;
                        const TrainResult trained = train(ds->counts, spec, tc);
                        DatasetManifest manifest = manifest_for(*ds, sim);
                        const MetricReport report =
                            score_model(ds->counts, trained.params, manifest, config.kmeans_restarts, seed, nullptr);
                        cell.ari = report.ari;
                        cell.mpe = report.mpe;
                        cell.mae = report.mae;
                    } catch (const std::exception& e) {
                        cell.error = e.what();
                    }
                }
                cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                result.cells.push_back(std::move(cell));
            }
        }
        for (LikelihoodKind kind : config.likelihoods) {
            KindSummary s;
            s.kind = kind;
            std::vector<double> ari, mpe_v, mae_v;
            for (std::size_t i = first_cell; i < result.cells.size(); ++i) {
                const BenchmarkCell& c = result.cells[i];
                if (c.kind != kind) continue;
                if (!c.error.empty()) {
                    ++s.failures;
                    continue;
                }
                if (c.ari) ari.push_back(*c.ari);
                if (c.mpe) mpe_v.push_back(*c.mpe);
                if (c.mae) mae_v.push_back(*c.mae);
            }
            s.ari = mean_std(ari);
            s.mpe = mean_std(mpe_v);
            s.mae = mean_std(mae_v);
            row.kinds.push_back(s);
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::string benchmark_csv(const BenchmarkResult& result) {
    std::string out =
        "scenario,distributions,categories,trials,total_counts,unique_groups,likelihood,"
        "ari_mean,ari_sd,mpe_percent_mean,mpe_percent_sd,mae_mean,mae_sd,failures\n";
    auto ms = [](const std::optional<MeanStd>& m) { return m ? num(m->mean) + "," + num(m->std) : std::string(","); };
    for (const auto& row : result.rows) {
        for (const auto& k : row.kinds) {
            out += csv_safe(row.scenario) + "," + std::to_string(row.num_distributions) + "," +
                   std::to_string(row.num_categories) + "," + std::to_string(row.trials_per_distribution) + "," +
                   join_counts(row.total_counts, ';') + "," + std::to_string(row.unique_groups) + "," +
                   likelihood_name(k.kind) + "," + ms(k.ari) + "," + ms(k.mpe) + "," + ms(k.mae) + "," +
                   std::to_string(k.failures) + "\n";
        }
    }
    return out;
}

std::string benchmark_cells_csv(const BenchmarkResult& result) {
    std::string out = "scenario,seed,likelihood,ari,mpe_percent,mae,status,error\n";
    for (const auto& c : result.cells) {
        out += csv_safe(c.scenario) + "," + std::to_string(c.seed) + "," + likelihood_name(c.kind) + "," +
               opt_num(c.ari) + "," + opt_num(c.mpe) + "," + opt_num(c.mae) + "," +
               (c.error.empty() ? "ok" : "failed") + "," + csv_safe(c.error) + "\n";
    }
    return out;
}

json benchmark_json(const BenchmarkResult& result) {
    auto ms = [](const std::optional<MeanStd>& m) {
        return m ? json{{"mean", m->mean}, {"sd", m->std}, {"n", m->count}} : json(nullptr);
    };
    json rows = json::array();
    for (const auto& row : result.rows) {
        json kinds = json::object();
        for (const auto& k : row.kinds) {
            kinds[likelihood_name(k.kind)] = {
                {"ari", ms(k.ari)}, {"mpe_percent", ms(k.mpe)}, {"mae", ms(k.mae)}, {"failures", k.failures}};
        }
        rows.push_back({{"scenario", row.scenario},
                        {"distributions", row.num_distributions},
                        {"categories", row.num_categories},
                        {"trials", row.trials_per_distribution},
                        {"total_counts", row.total_counts},
                        {"unique_groups", row.unique_groups},
                        {"likelihoods", kinds}});
    }
    json cells = json::array();
    for (const auto& c : result.cells) {
        cells.push_back({{"scenario", c.scenario},
                         {"seed", c.seed},
                         {"likelihood", likelihood_name(c.kind)},
                         {"ari", opt_json(c.ari)},
                         {"mpe_percent", opt_json(c.mpe)},
                         {"mae", opt_json(c.mae)},
                         {"error", c.error.empty() ? json(nullptr) : json(c.error)},
                         {"seconds", c.seconds}});
    }
    return json{{"deviation", "sample standard deviation over seeds"}, {"rows", rows}, {"cells", cells}};
}

fs::path run_experiment(const ExperimentConfig& input) {
    ExperimentConfig config = input;
    config.validate();
    if (config.mode != RunMode::benchmark) {
        config.simulation.seed = config.seeds.front();
        config.train.seed = config.seeds.front();
    }
    const fs::path out = config.paths.output;
    fs::create_directories(out);
    write_text(out / "config.resolved.json", json(config).dump(2) + "\n");
    switch (config.mode) {
        case RunMode::simulate: run_simulate(config, out); break;
        case RunMode::landscape: run_landscape(config, out); break;
        case RunMode::fit_mle: run_fit_mle(config, out); break;
        case RunMode::fit_vae: run_fit_vae(config, out); break;
        case RunMode::evaluate: run_evaluate(config, out); break;
        case RunMode::benchmark: run_benchmark_mode(config, out); break;
    }
    return out;
}

fs::path emit_figure_data(const fs::path& run_dir, FigureKind figure, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const fs::path target = out_dir / ("figure_" + figure_kind_name(figure) + ".csv");
    std::string out = figure_header(figure) + "\n";
    switch (figure) {
        case FigureKind::landscape: {
            const fs::path src = run_dir / "landscape.json";
            require_file(src, "landscape grid", "landscape");
            json doc;
            try {
                doc = json::parse(read_text(src));
            } catch (const json::exception& e) {
                throw ValidationError(src.string() + ": " + e.what());
            }
            const auto n1 = doc.at("n1_values").get<std::vector<Count>>();
            const auto n2 = doc.at("n2_values").get<std::vector<Count>>();
            const auto& grid = doc.at("nll");
            if (grid.size() != n1.size() * n2.size()) throw ValidationError(src.string() + ": grid size mismatch");
            for (std::size_t i = 0; i < n1.size(); ++i) {
                for (std::size_t j = 0; j < n2.size(); ++j) {
                    const auto& v = grid[i * n2.size() + j];
                    if (v.is_null()) continue;
                    out += std::to_string(n1[i]) + "," + std::to_string(n2[j]) + "," + num(v.get<double>()) + "\n";
                }
            }
            break;
        }
        case FigureKind::scaling: {
            const fs::path src = run_dir / "fits.csv";
            require_file(src, "direct fits", "fit-mle");
            const Table t = read_table(src);
            const std::size_t ct = t.column("trials", src), cf = t.column("f_max", src), cs = t.column("seed", src),
                              ce = t.column("error", src);
            for (const auto& r : t.rows) out += r[ct] + "," + r[cf] + "," + r[cs] + "," + r[ce] + "\n";
            break;
        }
        case FigureKind::trajectory: {
            const fs::path vae = run_dir / "total_trajectory.csv";
            const fs::path mle = run_dir / "trajectories.csv";
            if (fs::exists(vae)) {
                out = read_text(vae);
            } else if (fs::exists(mle)) {
                const Table t = read_table(mle);
                out = "trials,f_max,seed,epoch,nll,error\n";
                const std::size_t ct = t.column("trials", mle), cf = t.column("f_max", mle),
                                  cs = t.column("seed", mle), ce = t.column("epoch", mle),
                                  cn = t.column("nll", mle), cr = t.column("error", mle);
                for (const auto& r : t.rows) {
                    out += r[ct] + "," + r[cf] + "," + r[cs] + "," + r[ce] + "," + r[cn] + "," + r[cr] + "\n";
                }
            } else {
                throw ValidationError("missing trajectory artifacts in " + run_dir.string() +
                                      "; run `fit-mle` or `fit-vae` with trajectory_every > 0 first");
            }
            break;
        }
        case FigureKind::histograms: {
            const fs::path src = run_dir / "observation_totals.csv";
            require_file(src, "per-observation totals", "fit-vae` or `evaluate");
            const Table t = read_table(src);
            const std::size_t co = t.column("observation", src), cl = t.column("distribution_label", src),
                              cm = t.column("measured_total", src), ce = t.column("estimated_total", src);
            for (const auto& r : t.rows) out += r[co] + "," + r[cl] + "," + r[cm] + "," + r[ce] + "\n";
            break;
        }
    }
    write_text(target, out);
    return target;
}

}  // namespace hgpop
