#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "hgpop/evaluation.hpp"
#include "hgpop/experiment.hpp"
#include "hgpop/likelihood.hpp"
#include "hgpop/simulator.hpp"
#include "hgpop/special_functions.hpp"

namespace hgpop::checks {

std::vector<std::vector<long double>> pascal_log_table(int a_max) {
    std::vector<std::vector<long double>> c(a_max + 1);
    for (int a = 0; a <= a_max; ++a) {
        c[a].assign(a + 1, 1.0L);
        for (int b = 1; b < a; ++b) c[a][b] = c[a - 1][b - 1] + c[a - 1][b];
    }
    for (auto& row : c) {
        for (auto& v : row) v = std::log(v);
    }
    return c;
}

double binomial_relaxed_max_error(int a_max) {
    const auto table = pascal_log_table(a_max);
    double worst = 0.0;
    for (int a = 0; a <= a_max; ++a) {
        for (int b = 0; b <= a; ++b) {
            const double err = std::abs(log_binomial_relaxed(a, b) - static_cast<double>(table[a][b]));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

double pmf_normalization_max_error(int n_max) {
    double worst = 0.0;
    for (Count n1 = 0; n1 <= n_max; ++n1) {
        for (Count n2 = 0; n1 + n2 <= n_max; ++n2) {
            if (n1 + n2 == 0) continue;
            const std::vector<double> est{static_cast<double>(n1), static_cast<double>(n2)};
            for (Count n = 0; n <= n1 + n2; ++n) {
                double total = 0.0;
                for (Count c1 = std::max<Count>(0, n - n2); c1 <= std::min(n, n1); ++c1) {
                    const std::vector<Count> c{c1, n - c1};
                    total += std::exp(hypergeom_log_pmf(c, est));
                }
                worst = std::max(worst, std::abs(total - 1.0));
            }
        }
    }
    return worst;
}

namespace {

double relative_gap(double analytic, double numeric) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    const double gap = std::abs(analytic - numeric);
    return scale > 1e-6 ? gap / scale : gap;
}

}  // namespace

GradCheck nll_gradient_check(int instances, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_int_distribution<int> kdist(2, 5);
    std::uniform_int_distribution<int> rows(1, 25);
    std::uniform_int_distribution<Count> sizes(1, 40);
    std::uniform_real_distribution<double> slack(0.3, 25.0);
    GradCheck out;
    for (int it = 0; it < instances; ++it) {
        const int k = kdist(rng);
        std::vector<Count> pop(k);
        for (auto& v : pop) v = sizes(rng);
        const Count total = std::accumulate(pop.begin(), pop.end(), Count{0});
        std::uniform_int_distribution<Count> depth(0, total);
        CountMatrix batch(0, k);
        const int t = rows(rng);
        for (int r = 0; r < t; ++r) batch.append_row(mvhg_sample(pop, depth(rng), rng));
        const auto mx = batch.column_max();
        std::vector<double> est(k);
        for (int i = 0; i < k; ++i) est[i] = static_cast<double>(mx[i]) + slack(rng);

        const auto grad = hypergeom_nll_grad(batch, est);
        for (int i = 0; i < k; ++i) {
            const double h = 1e-5 * std::max(1.0, est[i]);
            auto up = est, down = est;
            up[i] += h;
            down[i] -= h;
            const double fd = (hypergeom_nll(batch, up) - hypergeom_nll(batch, down)) / (2.0 * h);
            out.worst_relative = std::max(out.worst_relative, relative_gap(grad[i], fd));
        }
        ++out.instances;
    }
    return out;
}

GradCheck network_gradient_check(LikelihoodKind kind, std::uint64_t seed) {
    NetworkSpec spec;
    spec.encoder_hidden = {8};
    spec.decoder_hidden = {8};
    spec.latent_dim = 2;
    spec.output_head = kind;
    NetworkParams p = NetworkParams::random(spec, 4, seed);
    if (kind == LikelihoodKind::hypergeometric) {
        // keep the rectified outputs active and mostly above the counts
        const auto last = p.layers().size() - 1;
        for (int i = 0; i < 4; ++i) p.bias(last)[i] = 15.0;
    }
    CountMatrix batch(0, 4);
    for (const auto& r : std::vector<std::vector<Count>>{{3, 1, 0, 5}, {2, 2, 2, 2}, {0, 7, 1, 0}}) {
        batch.append_row(r);
    }
    Eigen::MatrixXd eps(2, 3);
    eps << 0.3, -1.1, 0.5, 0.8, 0.2, -0.4;

    std::vector<double> grad(p.size());
    elbo_loss_and_grad(batch, p, 1.0, eps, grad);
    GradCheck out;
    out.instances = static_cast<int>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double v = p.values()[i];
        const double h = 1e-6;
        p.values()[i] = v + h;
        const double up = elbo_loss_and_grad(batch, p, 1.0, eps, {}).total;
        p.values()[i] = v - h;
        const double down = elbo_loss_and_grad(batch, p, 1.0, eps, {}).total;
        p.values()[i] = v;
        const double fd = (up - down) / (2.0 * h);
        // parameters with no influence give two tiny numbers; skip the noise floor
        if (std::abs(fd - grad[i]) < 1e-7) continue;
        out.worst_relative = std::max(out.worst_relative, relative_gap(grad[i], fd));
    }
    return out;
}

long double mvhg_pmf_exact(const std::vector<Count>& population, const std::vector<Count>& c) {
    const Count total = std::accumulate(population.begin(), population.end(), Count{0});
    const auto table = pascal_log_table(static_cast<int>(total));
    Count n = 0;
    long double log_p = 0.0L;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] < 0 || c[i] > population[i]) return 0.0L;
        log_p += table[population[i]][c[i]];
        n += c[i];
    }
    return std::exp(log_p - table[total][n]);
}

double mvhg_pmf_max_deviation(const std::vector<Count>& population, Count n, long draws, std::uint64_t seed) {
    Rng rng(seed);
    std::map<std::vector<Count>, long> hits;
    for (long d = 0; d < draws; ++d) ++hits[mvhg_sample(population, n, rng)];

    // enumerate every outcome with sum n
    double worst = 0.0;
    std::vector<Count> c(population.size(), 0);
    std::function<void(std::size_t, Count)> walk = [&](std::size_t i, Count left) {
        if (i + 1 == population.size()) {
            if (left > population[i]) return;
            c[i] = left;
            const auto it = hits.find(c);
            const double freq = it == hits.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(draws);
            worst = std::max(worst, std::abs(freq - static_cast<double>(mvhg_pmf_exact(population, c))));
            return;
        }
        for (Count v = 0; v <= std::min(left, population[i]); ++v) {
            c[i] = v;
            walk(i + 1, left - v);
        }
    };
    walk(0, n);
    return worst;
}

std::string ari_oracle_failures() {
    struct Case {
        std::vector<int> a, b;
        double expected;
    };
    const std::vector<Case> cases{
        {{0, 0, 1, 1, 2, 2}, {0, 0, 1, 1, 2, 2}, 1.0},
        {{0, 0, 1, 1, 2, 2}, {2, 2, 0, 0, 1, 1}, 1.0},
        {{0, 0, 1, 1}, {0, 1, 0, 1}, -0.5},
        {{0, 0, 1, 1}, {0, 0, 1, 2}, 4.0 / 7.0},
    };
    std::ostringstream msg;
    for (const auto& c : cases) {
        const double got = adjusted_rand_index(c.a, c.b);
        const double back = adjusted_rand_index(c.b, c.a);
        if (std::abs(got - c.expected) > 1e-12 || std::abs(back - got) > 1e-12) {
            msg << "ARI expected " << c.expected << " got " << got << " / " << back;
            return msg.str();
        }
    }
    return {};
}

std::string determinism_failures() {
    SimulationConfig sim;
    sim.num_distributions = 2;
    sim.num_categories = 5;
    sim.trials_per_distribution = 40;
    sim.total_counts = {60, 90};
    sim.sample_fraction_min = 0.2;
    sim.sample_fraction_max = 0.6;
    sim.seed = 11;
    const SimulatedDataset a = simulate_dataset(sim);
    const SimulatedDataset b = simulate_dataset(sim);
    if (!(a.counts == b.counts) || a.labels != b.labels || a.ground_truth != b.ground_truth) {
        return "simulate_dataset differs between identical runs";
    }

    NetworkSpec spec;
    spec.encoder_hidden = {16};
    spec.decoder_hidden = {16};
    spec.latent_dim = 2;
    TrainConfig tc;
    tc.max_epochs = 3;
    tc.batch_size = 16;
    tc.seed = 5;
    const TrainResult t1 = train(a.counts, spec, tc);
    const TrainResult t2 = train(a.counts, spec, tc);
    if (!std::equal(t1.params.values().begin(), t1.params.values().end(), t2.params.values().begin())) {
        return "train produced different weights for the same seed";
    }

    ExperimentConfig cfg;
    cfg.simulation = sim;
    cfg.network = spec;
    cfg.train = tc;
    cfg.seeds = {1, 2};
    cfg.kmeans_restarts = 3;
    const std::string r1 = benchmark_csv(run_benchmark(cfg));
    const std::string r2 = benchmark_csv(run_benchmark(cfg));
    if (r1 != r2) return "benchmark CSV differs between identical runs";
    return {};
}

}  // namespace hgpop::checks
