#include <algorithm>
#include <cmath>
#include <limits>

#include <doctest.h>

#include "hgpop/direct_mle.hpp"
#include "hgpop/error.hpp"
#include "hgpop/simulator.hpp"

using namespace hgpop;

namespace {

SimulatedDataset two_category(std::vector<Count> truth, int trials, double fmax, std::uint64_t seed) {
    SimulationConfig cfg;
    cfg.num_categories = 2;
    cfg.trials_per_distribution = trials;
    cfg.ground_truth = std::vector<std::vector<Count>>{std::move(truth)};
    cfg.sample_fraction_max = fmax;
    cfg.seed = seed;
    return simulate_dataset(cfg);
}

}  // namespace

TEST_SUITE("direct_mle") {

TEST_CASE("landscape minimum is the brute-force minimum") {
    const auto ds = two_category({70, 30}, 500, 0.4, 1);
    const auto mx = ds.counts.column_max();
    const auto land = nll_landscape(ds.counts, {0, 150}, {0, 150});
    REQUIRE(land.n1_values.size() == 151);
    double best = std::numeric_limits<double>::infinity();
    std::pair<Count, Count> where{-1, -1};
    for (Count a = mx[0]; a <= 150; ++a) {
        for (Count b = mx[1]; b <= 150; ++b) {
            const std::vector<double> est{static_cast<double>(a), static_cast<double>(b)};
            const double v = hypergeom_nll(ds.counts, est);
            if (v < best) {
                best = v;
                where = {a, b};
            }
        }
    }
    CHECK(land.argmin() == where);
    CHECK(land.at(static_cast<std::size_t>(where.first), static_cast<std::size_t>(where.second)) ==
          doctest::Approx(best).epsilon(1e-12));
    // infeasible cells are +inf
    CHECK(std::isinf(land.at(static_cast<std::size_t>(mx[0] - 1), 100)));
}

TEST_CASE("lowest landscape cells follow the true ratio") {
    const auto ds = two_category({70, 30}, 2000, 0.4, 2);
    const auto mx = ds.counts.column_max();
    const auto land = nll_landscape(ds.counts, {mx[0], 200}, {mx[1], 200});
    std::vector<double> finite;
    for (double v : land.nll) {
        if (std::isfinite(v)) finite.push_back(v);
    }
    REQUIRE(finite.size() > 100);
    std::sort(finite.begin(), finite.end());
    const double cut = finite[finite.size() / 100];
    int cells = 0;
    for (std::size_t i = 0; i < land.n1_values.size(); ++i) {
        for (std::size_t j = 0; j < land.n2_values.size(); ++j) {
            if (land.at(i, j) > cut) continue;
            const double ratio = static_cast<double>(land.n1_values[i]) / static_cast<double>(land.n2_values[j]);
            CHECK(std::abs(ratio / (70.0 / 30.0) - 1.0) <= 0.2);
            ++cells;
        }
    }
    CHECK(cells > 0);
}

TEST_CASE("one observation (1,0): nll rises with N1 at fixed N2") {
    CountMatrix b(0, 2);
    b.append_row(std::vector<Count>{1, 0});
    const auto land = nll_landscape(b, {1, 30}, {0, 30});
    for (std::size_t j = 0; j < land.n2_values.size(); ++j) {
        for (std::size_t i = 1; i < land.n1_values.size(); ++i) {
            // pmf = N1 / (N1 + N2) grows with N1, so the nll falls
            CHECK(land.at(i, j) <= land.at(i - 1, j) + 1e-12);
        }
    }
    for (std::size_t i = 0; i < land.n1_values.size(); ++i) {
        for (std::size_t j = 1; j < land.n2_values.size(); ++j) CHECK(land.at(i, j) >= land.at(i, j - 1) - 1e-12);
    }
}

TEST_CASE("landscape needs two categories and a valid range") {
    CountMatrix b(0, 3);
    b.append_row(std::vector<Count>{1, 2, 3});
    CHECK_THROWS_AS(nll_landscape(b, {0, 10}, {0, 10}), UnsupportedError);
    CountMatrix two(0, 2);
    two.append_row(std::vector<Count>{1, 2});
    CHECK_THROWS_AS(nll_landscape(two, {5, 4}, {0, 10}), ValidationError);
}

TEST_CASE("full sampling recovers the truth exactly") {
    const auto ds = two_category({40, 60}, 50, 1.0, 3);
    CountMatrix full(0, 2);
    for (int r = 0; r < 20; ++r) full.append_row(std::vector<Count>{40, 60});
    OptimizerConfig cfg;
    cfg.adam.learning_rate = 1.0;
    cfg.max_epochs = 400;
    const auto fit = fit_single(full, cfg, std::vector<Count>{40, 60});
    CHECK(fit.estimate.rounded() == std::vector<Count>{40, 60});
    CHECK(fit.trajectory.error.back() == 0.0);
}

TEST_CASE("trajectory bookkeeping") {
    const auto ds = two_category({30, 70}, 300, 0.4, 4);
    OptimizerConfig cfg;
    cfg.max_epochs = 60;
    cfg.patience = 1000;
    const auto fit = fit_single(ds.counts, cfg, std::vector<Count>{30, 70});
    const auto& t = fit.trajectory;
    CHECK(t.estimates.size() == 60);
    CHECK(t.nll.size() == 60);
    CHECK(t.loss.size() == 60);
    CHECK(t.error.size() == 60);
    for (double v : t.loss) CHECK(std::isfinite(v));
    // zero start thresholds to the column maximum
    const auto mx = ds.counts.column_max();
    CHECK(t.estimates[0][0] == static_cast<double>(mx[0]));
    CHECK(t.estimates[0][1] == static_cast<double>(mx[1]));
    for (std::size_t i = 0; i < 2; ++i) CHECK(fit.estimate[i] >= static_cast<double>(mx[i]));

    const auto plain = fit_single(ds.counts, cfg);
    CHECK(plain.trajectory.error.empty());
    CHECK(plain.estimate[0] == fit.estimate[0]);
}

TEST_CASE("fit_single input checks") {
    OptimizerConfig cfg;
    CHECK_THROWS_AS(fit_single(CountMatrix(0, 2), cfg), ValidationError);
    CountMatrix b(0, 2);
    b.append_row(std::vector<Count>{1, 1});
    cfg.init = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(fit_single(b, cfg), ValidationError);
    cfg.init.clear();
    cfg.max_epochs = 0;
    CHECK_THROWS_AS(fit_single(b, cfg), ValidationError);
}

}  // TEST_SUITE
