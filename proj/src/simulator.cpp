#include "hgpop/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hgpop/error.hpp"
#include "hgpop/special_functions.hpp"

namespace hgpop {

namespace {

double log_hypergeometric_pmf(Count x, Count good, Count bad, Count n) {
    auto lc = [](Count a, Count b) {
        return log_gamma(a + 1.0) - log_gamma(b + 1.0) - log_gamma(static_cast<double>(a - b) + 1.0);
    };
    return lc(good, x) + lc(bad, n - x) - lc(good + bad, n);
}

// Independent streams for probability vectors and for observations, so the
// ground truth of a seed does not depend on T.
Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

}  // namespace

void SimulationConfig::validate() const {
    if (num_distributions < 1) throw ValidationError("simulation: num_distributions must be >= 1");
    if (num_categories < 2) throw ValidationError("simulation: num_categories must be >= 2");
    if (trials_per_distribution < 1) throw ValidationError("simulation: trials_per_distribution must be >= 1");
    if (!(sample_fraction_min >= 0.0 && sample_fraction_min < sample_fraction_max &&
          sample_fraction_max <= 1.0)) {
        throw ValidationError("simulation: need 0 <= f_min < f_max <= 1");
    }
    if (!(dirichlet_alpha > 0.0)) throw ValidationError("simulation: dirichlet_alpha must be > 0");
    if (ground_truth) {
        if (ground_truth->size() != static_cast<std::size_t>(num_distributions)) {
            throw ValidationError("simulation: ground_truth needs one vector per distribution");
        }
        for (const auto& gt : *ground_truth) {
            if (gt.size() != static_cast<std::size_t>(num_categories)) {
                throw ValidationError("simulation: ground_truth vectors must have K entries");
            }
            if (std::any_of(gt.begin(), gt.end(), [](Count c) { return c < 0; }) ||
                std::accumulate(gt.begin(), gt.end(), Count{0}) < 1) {
                throw ValidationError("simulation: ground_truth entries must be >= 0 with a positive total");
            }
        }
    } else {
        if (total_counts.empty() ||
            (total_counts.size() != 1 && total_counts.size() != static_cast<std::size_t>(num_distributions))) {
            throw ValidationError("simulation: total_counts needs 1 or M entries");
        }
        if (std::any_of(total_counts.begin(), total_counts.end(), [](Count n) { return n < 1; })) {
            throw ValidationError("simulation: total_counts must be >= 1");
        }
    }
    if (depth_reference_total && *depth_reference_total < 1) {
        throw ValidationError("simulation: depth_reference_total must be >= 1");
    }
    std::vector<int> seen(num_distributions, 0);
    for (const auto& group : shared_prob_groups) {
        for (int idx : group) {
            if (idx < 0 || idx >= num_distributions) {
                throw ValidationError("simulation: shared_prob_groups index out of range: " + std::to_string(idx));
            }
            if (seen[idx]++) {
                throw ValidationError("simulation: distribution " + std::to_string(idx) +
                                      " appears in more than one shared group");
            }
        }
    }
}

Count SimulationConfig::total_for(int distribution) const {
    return total_counts.size() == 1 ? total_counts.front() : total_counts.at(distribution);
}

std::vector<std::vector<Count>> SimulatedDataset::truth_per_row() const {
    std::vector<std::vector<Count>> out;
    out.reserve(labels.size());
    for (int label : labels) out.push_back(ground_truth.at(label));
    return out;
}

std::vector<double> dirichlet_sample(double alpha, int k, Rng& rng) {
    if (!(alpha > 0.0) || k < 2) throw DomainError("dirichlet_sample: need alpha > 0 and k >= 2");
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> p(k);
    double sum = 0.0;
    // tiny alpha can underflow every draw to zero; redraw in that case
    do {
        sum = 0.0;
        for (auto& v : p) {
            v = gamma(rng);
            sum += v;
        }
    } while (!(sum > 0.0));
    for (auto& v : p) v /= sum;
    return p;
}

std::vector<Count> ground_truth_counts(const std::vector<double>& probs, Count total) {
    if (total < 1) throw DomainError("ground_truth_counts: total must be >= 1");
    std::vector<Count> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        out[i] = static_cast<Count>(std::floor(probs[i] * static_cast<double>(total) + 0.5));
    }
    if (std::all_of(out.begin(), out.end(), [](Count c) { return c == 0; })) {
        throw DomainError("ground_truth_counts: every category rounded to zero");
    }
    return out;
}

Count hypergeometric_sample(Count good, Count bad, Count n, Rng& rng) {
    if (good < 0 || bad < 0 || n < 0 || n > good + bad) {
        throw DomainError("hypergeometric_sample: need 0 <= n <= good + bad");
    }
    const Count lo = std::max<Count>(0, n - bad);
    const Count hi = std::min(n, good);
    if (lo == hi) return lo;

    // Inversion by search outward from the mode, with pmf ratios as the recurrence.
    const double total = static_cast<double>(good + bad);
    Count mode = static_cast<Count>(std::floor((n + 1.0) * (good + 1.0) / (total + 2.0)));
    mode = std::clamp(mode, lo, hi);
    const double p_mode = std::exp(log_hypergeometric_pmf(mode, good, bad, n));

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng) - p_mode;
    if (u <= 0.0) return mode;

    auto ratio_up = [&](Count x) {  // p(x+1) / p(x)
        return static_cast<double>(good - x) * static_cast<double>(n - x) /
               (static_cast<double>(x + 1) * static_cast<double>(bad - n + x + 1));
    };
    Count left = mode, right = mode;
    double p_left = p_mode, p_right = p_mode;
    while (left > lo || right < hi) {
        if (right < hi) {
            p_right *= ratio_up(right);
            ++right;
            u -= p_right;
            if (u <= 0.0) return right;
        }
        if (left > lo) {
            p_left /= ratio_up(left - 1);
            --left;
            u -= p_left;
            if (u <= 0.0) return left;
        }
    }
    // rounding left a sliver of mass unassigned
    return mode;
}

std::vector<Count> mvhg_sample(const std::vector<Count>& population, Count n, Rng& rng) {
    Count remaining_pop = 0;
    for (Count c : population) {
        if (c < 0) throw DomainError("mvhg_sample: population entries must be non-negative");
        remaining_pop += c;
    }
    if (n < 0 || n > remaining_pop) {
        throw DomainError("mvhg_sample: draw size " + std::to_string(n) + " exceeds population " +
                          std::to_string(remaining_pop));
    }
    std::vector<Count> out(population.size(), 0);
    Count remaining_draws = n;
    for (std::size_t i = 0; i < population.size() && remaining_draws > 0; ++i) {
        const Count rest = remaining_pop - population[i];
        const Count x = hypergeometric_sample(population[i], rest, remaining_draws, rng);
        out[i] = x;
        remaining_draws -= x;
        remaining_pop = rest;
    }
    return out;
}

SimulatedDataset simulate_dataset(const SimulationConfig& config) {
    config.validate();
    const int m_count = config.num_distributions;
    const int k = config.num_categories;

    std::vector<int> group_of(m_count, -1);
    for (std::size_t g = 0; g < config.shared_prob_groups.size(); ++g) {
        for (int idx : config.shared_prob_groups[g]) group_of[idx] = static_cast<int>(g);
    }

    SimulatedDataset ds;
    ds.ground_truth.resize(m_count);
    if (config.ground_truth) {
        ds.ground_truth = *config.ground_truth;
    } else {
        Rng prob_rng = make_stream(config.seed, 0);
        std::vector<std::vector<double>> group_probs(config.shared_prob_groups.size());
        for (int m = 0; m < m_count; ++m) {
            std::vector<double> probs;
            const int g = group_of[m];
            if (g >= 0) {
                if (group_probs[g].empty()) group_probs[g] = dirichlet_sample(config.dirichlet_alpha, k, prob_rng);
                probs = group_probs[g];
            } else {
                probs = dirichlet_sample(config.dirichlet_alpha, k, prob_rng);
            }
            ds.ground_truth[m] = ground_truth_counts(probs, config.total_for(m));
        }
    }

    Rng sample_rng = make_stream(config.seed, 1);
    const auto trials = static_cast<std::size_t>(config.trials_per_distribution);
    ds.counts = CountMatrix(0, static_cast<std::size_t>(k));
    ds.labels.reserve(m_count * trials);
    for (int m = 0; m < m_count; ++m) {
        const auto& truth = ds.ground_truth[m];
        // effective total after rounding
        const Count own_total = std::accumulate(truth.begin(), truth.end(), Count{0});
        const Count total = config.depth_reference_total.value_or(own_total);
        const Count hi = static_cast<Count>(std::floor(config.sample_fraction_max * total + 1e-9));
        if (hi > own_total) {
            throw ValidationError("simulation: depth range exceeds the population of distribution " +
                                  std::to_string(m));
        }
        Count lo = static_cast<Count>(std::ceil(config.sample_fraction_min * total - 1e-9));
        lo = std::min(std::max<Count>(lo, 2), hi);
        std::uniform_int_distribution<Count> depth(lo, hi);
        for (std::size_t t = 0; t < trials; ++t) {
            const Count n = depth(sample_rng);
            ds.counts.append_row(mvhg_sample(truth, n, sample_rng));
            ds.labels.push_back(m);
        }
    }
    return ds;
}

}  // namespace hgpop
