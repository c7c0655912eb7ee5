#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hgpop/count_matrix.hpp"
#include "hgpop/latent_model.hpp"
#include "hgpop/simulator.hpp"

namespace hgpop {

double manhattan_error(std::span<const double> est, std::span<const Count> truth);

/// Mean absolute error over all entries. `truth` holds one row per observation.
double mae(const RealMatrix& est, const std::vector<std::vector<Count>>& truth);

/// Median over entries with positive truth of 100 |est - truth| / truth.
/// Entries whose truth is zero are skipped.
double mpe(const RealMatrix& est, const std::vector<std::vector<Count>>& truth);

struct KMeansResult {
    std::vector<int> labels;
    double inertia = 0.0;  // within-cluster sum of squared distances
    /// ARI against the reference labels when they were supplied.
    std::optional<double> ari;
};

/// Lloyd's algorithm from `restarts` k-means++ initializations. With
/// reference labels the restart with the highest ARI is returned (an
/// evaluation protocol that peeks at the labels); otherwise the lowest inertia.
KMeansResult kmeans(const RealMatrix& points, int k, int restarts, Rng& rng,
                    const std::vector<int>* reference = nullptr, int max_iterations = 300);

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

struct EstimateSummary {
    double t_total = 0.0;
    long t_unique = 0;  // entries above 0.5, i.e. nonzero after rounding
};

std::vector<EstimateSummary> estimate_summary(const RealMatrix& est);

struct DistributionMetrics {
    double mpe = 0.0;
    double mae = 0.0;
    double median_estimated_total = 0.0;
    double true_total = 0.0;
};

struct MetricReport {
    std::optional<double> ari;
    std::optional<double> mpe;
    std::optional<double> mae;
    std::optional<double> manhattan;  // mean per-observation Manhattan error
    std::map<int, DistributionMetrics> per_distribution;
};

/// Count-estimation metrics of per-observation estimates against each row's
/// ground truth, pooled and broken down by label.
MetricReport estimation_report(const RealMatrix& est, const std::vector<int>& labels,
                               const std::vector<std::vector<Count>>& ground_truth);

std::string metric_report_json(const MetricReport& report);
std::string metric_report_csv_header();
std::string metric_report_csv_row(const MetricReport& report);

}  // namespace hgpop
