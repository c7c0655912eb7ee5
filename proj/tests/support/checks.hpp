#pragma once

// Property checks shared by the unit suites and the acceptance runner. Each
// returns the measured worst-case quantity; callers compare it with a tolerance.

#include <cstdint>
#include <string>
#include <vector>

#include "hgpop/count_matrix.hpp"
#include "hgpop/latent_model.hpp"

namespace hgpop::checks {

/// log C(a, b) for integer 0 <= b <= a <= a_max from Pascal's triangle in long double.
std::vector<std::vector<long double>> pascal_log_table(int a_max);

/// max |log_binomial_relaxed(a, b) - log C(a, b)| over integers b <= a <= a_max.
double binomial_relaxed_max_error(int a_max);

/// max over K=2 populations with N1 + N2 <= n_max and every draw size of
/// |sum_c pmf(c) - 1|.
double pmf_normalization_max_error(int n_max);

struct GradCheck {
    int instances = 0;
    double worst_relative = 0.0;
};

/// Hypergeometric NLL gradient against central differences on random
/// feasible (batch, estimate) pairs.
GradCheck nll_gradient_check(int instances, std::uint64_t seed);

/// Full network gradient against central differences for one head on a tiny
/// network (K=4, D=2, one hidden layer of 8 in each net).
GradCheck network_gradient_check(LikelihoodKind kind, std::uint64_t seed);

/// Exact multivariate hypergeometric pmf of `c` (integer arithmetic in long double).
long double mvhg_pmf_exact(const std::vector<Count>& population, const std::vector<Count>& c);

/// max |empirical - exact| over all outcomes after `draws` samples.
double mvhg_pmf_max_deviation(const std::vector<Count>& population, Count n, long draws, std::uint64_t seed);

/// Empty string when every ARI hand case holds, else a description of the first miss.
std::string ari_oracle_failures();

/// Empty string when simulate, train and benchmark are reproducible under fixed seeds.
std::string determinism_failures();

}  // namespace hgpop::checks
