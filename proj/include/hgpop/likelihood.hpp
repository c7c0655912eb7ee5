#pragma once

#include <span>
#include <vector>

#include "hgpop/count_matrix.hpp"

namespace hgpop {

/// One observed count vector c_1..c_K with its cached total n.
class CountVector {
public:
    explicit CountVector(std::vector<Count> counts);
    explicit CountVector(std::span<const Count> counts)
        : CountVector(std::vector<Count>(counts.begin(), counts.end())) {}

    std::span<const Count> counts() const { return counts_; }
    Count total() const { return total_; }
    std::size_t size() const { return counts_.size(); }
    Count operator[](std::size_t i) const { return counts_[i]; }

private:
    std::vector<Count> counts_;
    Count total_ = 0;
};

/// Relaxed (real-valued) per-category population sizes.
class PopulationEstimate {
public:
    explicit PopulationEstimate(std::vector<double> sizes);

    std::span<const double> sizes() const { return sizes_; }
    double total() const { return total_; }
    std::size_t size() const { return sizes_.size(); }
    double operator[](std::size_t i) const { return sizes_[i]; }

    /// Sizes rounded to the nearest integer.
    std::vector<Count> rounded() const;

private:
    std::vector<double> sizes_;
    double total_ = 0.0;
};

/// Weight on the constraint-violation term, optionally ramped linearly from
/// weight_min to weight_max over ramp_epochs.
struct PenaltyConfig {
    double weight = 1.0;
    double weight_min = 1.0;
    double weight_max = 1.0;
    int ramp_epochs = 0;

    void validate() const;
    /// Effective weight at a 0-based epoch. Without a ramp this is `weight`.
    double weight_at(int epoch) const;
};

// Span overloads are the workhorses; the strong types forward to them.

double hypergeom_log_pmf(std::span<const Count> counts, std::span<const double> est);
double hypergeom_log_pmf(const CountVector& c, const PopulationEstimate& est);

/// Negative hypergeometric log-likelihood of every row under one shared estimate.
double hypergeom_nll(const CountMatrix& batch, std::span<const double> est);
double hypergeom_nll(const CountMatrix& batch, const PopulationEstimate& est);
/// Same with per-row multiplicities, as produced by compress_rows.
double hypergeom_nll(const WeightedRows& batch, std::span<const double> est);

std::vector<double> hypergeom_nll_grad(const CountMatrix& batch, std::span<const double> est);
std::vector<double> hypergeom_nll_grad(const CountMatrix& batch, const PopulationEstimate& est);
std::vector<double> hypergeom_nll_grad(const WeightedRows& batch, std::span<const double> est);

/// Gradient of -log pmf for a single row, accumulated into `grad` scaled by `scale`.
void add_row_nll_grad(std::span<const Count> counts, std::span<const double> est, double scale,
                      std::span<double> grad);

/// sum_i max(0, c_i - raw_i)
double violation_penalty(std::span<const Count> counts, std::span<const double> raw);
double violation_penalty(const CountVector& c, const PopulationEstimate& raw);

/// Elementwise max(c_i, raw_i).
std::vector<double> threshold_estimates(std::span<const Count> counts, std::span<const double> raw);
PopulationEstimate threshold_estimates(const CountVector& c, const PopulationEstimate& raw);

/// sum_i c_i log p_i. The multinomial coefficient is omitted since it does
/// not depend on p. Returns -inf when some p_i = 0 has c_i > 0.
double multinomial_log_lik(std::span<const Count> counts, std::span<const double> probs);
double multinomial_log_lik(const CountVector& c, std::span<const double> probs);

/// sum_i [c_i log l_i - l_i - log G(c_i + 1)]
double poisson_log_lik(std::span<const Count> counts, std::span<const double> rates);
double poisson_log_lik(const CountVector& c, std::span<const double> rates);

/// KL(N(mean, diag(exp(log_var))) || N(0, I)).
double kl_diag_gaussian(std::span<const double> mean, std::span<const double> log_var);

}  // namespace hgpop
