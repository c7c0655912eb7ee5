#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "hgpop/adam.hpp"
#include "hgpop/count_matrix.hpp"
#include "hgpop/likelihood.hpp"

namespace hgpop {

/// NLL over an integer grid of (N1, N2) for a two-category batch.
/// Cells where the estimate is below the observed maximum hold +inf.
struct NllLandscape {
    std::vector<Count> n1_values;
    std::vector<Count> n2_values;
    std::vector<double> nll;  // row-major: n1 index major

    double at(std::size_t i, std::size_t j) const { return nll[i * n2_values.size() + j]; }
    /// Integer estimate with the lowest NLL (first in row-major order on ties).
    std::pair<Count, Count> argmin() const;
};

struct IntRange {
    Count lo = 0;
    Count hi = 0;  // inclusive
};

NllLandscape nll_landscape(const CountMatrix& batch, IntRange n1_range, IntRange n2_range);

struct OptimizerConfig {
    AdamConfig adam{};
    int max_epochs = 500;
    /// Empty means zero initialization.
    std::vector<double> init;
    PenaltyConfig penalty{};
    /// Stop after this many consecutive epochs improving the loss by less than `tolerance`.
    int patience = 20;
    double tolerance = 1e-9;

    void validate() const;
};

struct FitTrajectory {
    std::vector<std::vector<double>> estimates;  // thresholded, before each epoch's update
    std::vector<double> nll;
    std::vector<double> loss;                    // nll + weighted penalty
    std::vector<double> error;                   // rounded Manhattan error; empty without ground truth
};

struct FitResult {
    PopulationEstimate estimate;
    FitTrajectory trajectory;
};

/// Adam on hypergeom_nll(threshold(raw)) + w * violation_penalty(column max, raw).
FitResult fit_single(const CountMatrix& batch, const OptimizerConfig& config,
                     const std::optional<std::vector<Count>>& ground_truth = std::nullopt);

}  // namespace hgpop
