#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <doctest.h>

#include "checks.hpp"
#include "hgpop/error.hpp"
#include "hgpop/likelihood.hpp"
#include "hgpop/simulator.hpp"
#include "hgpop/special_functions.hpp"

using namespace hgpop;

namespace {

CountMatrix matrix(std::initializer_list<std::vector<Count>> rows) {
    CountMatrix m(0, rows.begin()->size());
    for (const auto& r : rows) m.append_row(r);
    return m;
}

}  // namespace

TEST_SUITE("likelihood") {

TEST_CASE("CountVector and PopulationEstimate invariants") {
    const CountVector c({3, 0, 4});
    CHECK(c.total() == 7);
    CHECK_THROWS_AS(CountVector({1}), ValidationError);
    CHECK_THROWS_AS(CountVector({1, -2}), ValidationError);
    const PopulationEstimate e({1.5, 2.5});
    CHECK(e.total() == 4.0);
    CHECK(e.rounded() == std::vector<Count>{2, 3});
    CHECK_THROWS_AS(PopulationEstimate({-1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(PopulationEstimate({std::nan(""), 2.0}), ValidationError);
}

TEST_CASE("hypergeometric pmf examples") {
    // C(7,2) C(3,1) / C(10,3) = 21 * 3 / 120
    CHECK(hypergeom_log_pmf(CountVector({2, 1}), PopulationEstimate({7, 3})) ==
          doctest::Approx(std::log(0.525)).epsilon(1e-12));
    CHECK(std::abs(hypergeom_log_pmf(CountVector({0, 0}), PopulationEstimate({4.2, 9.1}))) < 1e-12);
    CHECK(std::abs(hypergeom_log_pmf(CountVector({7, 3}), PopulationEstimate({7, 3}))) < 1e-12);
}

TEST_CASE("hypergeometric pmf requires thresholded estimates") {
    CHECK_THROWS_AS(hypergeom_log_pmf(CountVector({5, 1}), PopulationEstimate({4.9, 3})), PreconditionError);
    CHECK_THROWS_AS(hypergeom_log_pmf(CountVector({5, 1}), PopulationEstimate({5, 3, 1})), ValidationError);
}

TEST_CASE("hypergeometric pmf is at most one at integer points") {
    std::mt19937_64 rng(3);
    for (int it = 0; it < 200; ++it) {
        std::vector<Count> pop{Count(rng() % 15), Count(rng() % 15), Count(rng() % 15)};
        if (pop[0] + pop[1] + pop[2] == 0) continue;
        const Count total = pop[0] + pop[1] + pop[2];
        const auto c = mvhg_sample(pop, Count(rng() % (total + 1)), rng);
        const std::vector<double> est(pop.begin(), pop.end());
        CHECK(hypergeom_log_pmf(c, est) <= 1e-12);
    }
}

TEST_CASE("pmf sums to one over every outcome for K=2, N <= 12") {
    CHECK(checks::pmf_normalization_max_error(12) <= 1e-9);
}

TEST_CASE("pmf matches the exact integer formula for K=3") {
    const std::vector<Count> pop{4, 6, 3};
    for (Count a = 0; a <= 4; ++a) {
        for (Count b = 0; b <= 6; ++b) {
            const std::vector<Count> c{a, b, 2};
            const std::vector<double> est(pop.begin(), pop.end());
            CHECK(std::exp(hypergeom_log_pmf(c, est)) ==
                  doctest::Approx(static_cast<double>(checks::mvhg_pmf_exact(pop, c))).epsilon(1e-11));
        }
    }
}

TEST_CASE("nll is the negated log pmf and additive over rows") {
    const std::vector<double> est{7.5, 3.2};
    const CountVector row({2, 1});
    const double one = hypergeom_nll(matrix({{2, 1}}), est);
    CHECK(one == doctest::Approx(-hypergeom_log_pmf(row, PopulationEstimate(est))).epsilon(1e-14));
    CHECK(hypergeom_nll(matrix({{2, 1}, {2, 1}}), est) == doctest::Approx(2.0 * one).epsilon(1e-14));
    const double split = hypergeom_nll(matrix({{2, 1}}), est) + hypergeom_nll(matrix({{0, 3}}), est);
    CHECK(hypergeom_nll(matrix({{2, 1}, {0, 3}}), est) == doctest::Approx(split).epsilon(1e-14));
}

TEST_CASE("compressed rows give the same nll and gradient") {
    std::mt19937_64 rng(8);
    CountMatrix batch(0, 3);
    for (int r = 0; r < 500; ++r) batch.append_row(mvhg_sample({6, 4, 5}, 5, rng));
    const WeightedRows w = compress_rows(batch);
    CHECK(w.rows.rows() < batch.rows());
    CHECK(std::accumulate(w.weights.begin(), w.weights.end(), 0.0) == 500.0);
    const std::vector<double> est{6.3, 4.4, 8.0};
    CHECK(hypergeom_nll(w, est) == doctest::Approx(hypergeom_nll(batch, est)).epsilon(1e-12));
    const auto g1 = hypergeom_nll_grad(w, est);
    const auto g2 = hypergeom_nll_grad(batch, est);
    for (int i = 0; i < 3; ++i) CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-10));
}

TEST_CASE("nll gradient matches central differences") {
    const auto r = checks::nll_gradient_check(150, 21);
    CHECK(r.instances == 150);
    CHECK(r.worst_relative < 1e-4);
}

TEST_CASE("nll gradient by the digamma formula") {
    const CountMatrix b = matrix({{2, 1}});
    const std::vector<double> est{7.0, 3.0};
    const auto g = hypergeom_nll_grad(b, est);
    // d/dN1: psi(N+1) - psi(N-n+1) - psi(N1+1) + psi(N1-c1+1)
    const double expected0 = digamma(11.0) - digamma(8.0) - digamma(8.0) + digamma(6.0);
    CHECK(g[0] == doctest::Approx(expected0).epsilon(1e-12));
}

TEST_CASE("symmetric instance gives equal gradient components") {
    const CountMatrix b = matrix({{1, 1}, {1, 1}, {1, 1}});
    const auto g = hypergeom_nll_grad(b, std::vector<double>{4.5, 4.5});
    CHECK(g[0] == doctest::Approx(g[1]).epsilon(1e-14));
}

TEST_CASE("empty batch gives zero nll and gradient") {
    const CountMatrix empty(0, 3);
    const std::vector<double> est{1.0, 2.0, 3.0};
    CHECK(hypergeom_nll(empty, est) == 0.0);
    CHECK(hypergeom_nll_grad(empty, est) == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("nll and gradient are permutation equivariant") {
    std::mt19937_64 rng(4);
    for (int it = 0; it < 50; ++it) {
        const std::vector<Count> pop{Count(3 + rng() % 20), Count(3 + rng() % 20), Count(3 + rng() % 20),
                                     Count(3 + rng() % 20)};
        CountMatrix b(0, 4);
        for (int r = 0; r < 10; ++r) b.append_row(mvhg_sample(pop, 6, rng));
        std::vector<double> est(pop.begin(), pop.end());
        for (auto& v : est) v += 0.5;
        std::vector<int> perm{0, 1, 2, 3};
        std::shuffle(perm.begin(), perm.end(), rng);
        CountMatrix pb(0, 4);
        for (std::size_t r = 0; r < b.rows(); ++r) {
            std::vector<Count> row(4);
            for (int i = 0; i < 4; ++i) row[i] = b(r, perm[i]);
            pb.append_row(row);
        }
        std::vector<double> pest(4);
        for (int i = 0; i < 4; ++i) pest[i] = est[perm[i]];
        CHECK(hypergeom_nll(pb, pest) == doctest::Approx(hypergeom_nll(b, est)).epsilon(1e-12));
        const auto g = hypergeom_nll_grad(b, est);
        const auto pg = hypergeom_nll_grad(pb, pest);
        for (int i = 0; i < 4; ++i) CHECK(pg[i] == doctest::Approx(g[perm[i]]).epsilon(1e-12));
    }
}

TEST_CASE("violation penalty examples") {
    CHECK(violation_penalty(CountVector({5, 2}), PopulationEstimate({3, 10})) == 2.0);
    CHECK(violation_penalty(CountVector({5, 2}), PopulationEstimate({5, 2})) == 0.0);
    CHECK(violation_penalty(CountVector({5, 2}), PopulationEstimate({9.5, 2.1})) == 0.0);
    CHECK(violation_penalty(CountVector({5, 2}), PopulationEstimate({3, 1})) == 3.0);
}

TEST_CASE("threshold examples") {
    CHECK(threshold_estimates(CountVector({5, 2}), PopulationEstimate({3, 10})).rounded() == std::vector<Count>{5, 10});
    const PopulationEstimate feasible({6.5, 2.25});
    const auto same = threshold_estimates(CountVector({5, 2}), feasible);
    CHECK(same[0] == 6.5);
    CHECK(same[1] == 2.25);
    const auto lifted = threshold_estimates(CountVector({4, 1}), PopulationEstimate({0, 0}));
    CHECK(lifted[0] == 4.0);
    CHECK(lifted[1] == 1.0);
}

TEST_CASE("thresholded estimates carry no penalty and a finite likelihood") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 30.0);
    for (int it = 0; it < 500; ++it) {
        std::vector<Count> c{Count(rng() % 25), Count(rng() % 25), Count(rng() % 25)};
        std::vector<double> raw{u(rng), u(rng), u(rng)};
        const auto t = threshold_estimates(c, raw);
        CHECK(violation_penalty(c, t) == 0.0);
        CHECK(std::isfinite(hypergeom_log_pmf(c, t)));
    }
}

TEST_CASE("multinomial log likelihood") {
    CHECK(multinomial_log_lik(CountVector({1, 0}), std::vector<double>{0.5, 0.5}) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-14));
    CHECK(multinomial_log_lik(CountVector({0, 0}), std::vector<double>{0.3, 0.7}) == 0.0);
    CHECK(multinomial_log_lik(CountVector({2, 3}), std::vector<double>{0.4, 0.6}) ==
          doctest::Approx(2 * std::log(0.4) + 3 * std::log(0.6)).epsilon(1e-14));
    CHECK(multinomial_log_lik(CountVector({0, 4}), std::vector<double>{0.0, 1.0}) == 0.0);
    const double sentinel = multinomial_log_lik(CountVector({1, 4}), std::vector<double>{0.0, 1.0});
    CHECK(std::isinf(sentinel));
    CHECK(sentinel < 0);
    CHECK_THROWS_AS(multinomial_log_lik(CountVector({1, 1}), std::vector<double>{0.4, 0.4}), DomainError);
}

TEST_CASE("poisson log likelihood") {
    CHECK(poisson_log_lik(std::vector<Count>{0}, std::vector<double>{1.0}) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(poisson_log_lik(std::vector<Count>{1}, std::vector<double>{1.0}) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(poisson_log_lik(std::vector<Count>{2}, std::vector<double>{3.0}) ==
          doctest::Approx(2 * std::log(3.0) - 3.0 - std::log(2.0)).epsilon(1e-13));
    CHECK(poisson_log_lik(std::vector<Count>{2}, std::vector<double>{3.0}) == doctest::Approx(-1.495922).epsilon(1e-6));
    CHECK_THROWS_AS(poisson_log_lik(std::vector<Count>{1}, std::vector<double>{0.0}), DomainError);
    CHECK_THROWS_AS(poisson_log_lik(std::vector<Count>{1, 2}, std::vector<double>{1.0, -2.0}), DomainError);
}

TEST_CASE("Gaussian KL against the standard normal") {
    CHECK(kl_diag_gaussian(std::vector<double>{0.0, 0.0}, std::vector<double>{0.0, 0.0}) == 0.0);
    CHECK(kl_diag_gaussian(std::vector<double>{1.0}, std::vector<double>{0.0}) == doctest::Approx(0.5));
    CHECK(kl_diag_gaussian(std::vector<double>{0.0}, std::vector<double>{1.0}) ==
          doctest::Approx((std::exp(1.0) - 2.0) / 2.0).epsilon(1e-14));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const std::vector<double> m{n(rng), n(rng), n(rng)}, lv{n(rng), n(rng), n(rng)};
        CHECK(kl_diag_gaussian(m, lv) > 0.0);
    }
}

TEST_CASE("penalty schedule") {
    PenaltyConfig flat;
    flat.weight = 2.5;
    flat.weight_min = flat.weight_max = 2.5;
    CHECK(flat.weight_at(0) == 2.5);
    CHECK(flat.weight_at(1000) == 2.5);

    PenaltyConfig ramp;
    ramp.weight_min = 1.0;
    ramp.weight_max = 101.0;
    ramp.ramp_epochs = 10;
    CHECK(ramp.weight_at(0) == doctest::Approx(1.0));
    CHECK(ramp.weight_at(5) == doctest::Approx(51.0));
    CHECK(ramp.weight_at(10) == doctest::Approx(101.0));
    CHECK(ramp.weight_at(500) == doctest::Approx(101.0));

    PenaltyConfig bad;
    bad.weight_min = 3.0;
    bad.weight_max = 1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = PenaltyConfig{};
    bad.weight = -1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

}  // TEST_SUITE
