#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "hgpop/count_matrix.hpp"

namespace hgpop {

using Rng = std::mt19937_64;

/// Parameters of a synthetic dataset: M distributions over K categories,
/// T under-sampled observations of each.
struct SimulationConfig {
    int num_distributions = 1;
    int num_categories = 2;
    int trials_per_distribution = 1000;
    /// One total per distribution, or a single value broadcast to all.
    std::vector<Count> total_counts{100};
    double sample_fraction_min = 0.0;
    double sample_fraction_max = 0.4;
    /// Distributions listed in one group reuse a single probability vector.
    std::vector<std::vector<int>> shared_prob_groups;
    double dirichlet_alpha = 1.0;
    std::uint64_t seed = 0;
    /// Explicit ground truth per distribution; bypasses the Dirichlet draw.
    std::optional<std::vector<std::vector<Count>>> ground_truth;
    /// When set, sample depths for every distribution are drawn relative to
    /// this total instead of the distribution's own, so all distributions
    /// share one depth range.
    std::optional<Count> depth_reference_total;

    void validate() const;
    Count total_for(int distribution) const;
};

struct SimulatedDataset {
    CountMatrix counts;
    std::vector<int> labels;
    std::vector<std::vector<Count>> ground_truth;

    /// Ground truth broadcast to one row per observation.
    std::vector<std::vector<Count>> truth_per_row() const;
};

std::vector<double> dirichlet_sample(double alpha, int k, Rng& rng);

/// round(p_i * N), halves rounded up. Throws DomainError when every entry rounds to zero.
std::vector<Count> ground_truth_counts(const std::vector<double>& probs, Count total);

/// One univariate hypergeometric draw: successes among n draws without
/// replacement from `good` successes and `bad` failures.
Count hypergeometric_sample(Count good, Count bad, Count n, Rng& rng);

/// Multivariate hypergeometric draw of n elements from the urn `population`,
/// via successive conditional univariate draws per category.
std::vector<Count> mvhg_sample(const std::vector<Count>& population, Count n, Rng& rng);

SimulatedDataset simulate_dataset(const SimulationConfig& config);

}  // namespace hgpop
