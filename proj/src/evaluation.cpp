#include "hgpop/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hgpop/error.hpp"

namespace hgpop {

namespace {

void check_shapes(const RealMatrix& est, const std::vector<std::vector<Count>>& truth, const char* fn) {
    if (est.rows != truth.size()) {
        throw ValidationError(std::string(fn) + ": row count mismatch");
    }
    for (const auto& row : truth) {
        if (row.size() != est.cols) throw ValidationError(std::string(fn) + ": column count mismatch");
    }
}

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lower + upper);
}

double choose2(double n) { return 0.5 * n * (n - 1.0); }

double sq_dist(std::span<const double> a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

KMeansResult lloyd(const RealMatrix& points, int k, Rng& rng, int max_iterations) {
    const std::size_t n = points.rows;
    const std::size_t dim = points.cols;
    // k-means++ seeding: first centroid uniform, the rest with probability
    // proportional to squared distance from the nearest chosen centroid
    std::vector<std::vector<double>> centroids;
    centroids.reserve(k);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    auto row0 = points.row(first(rng));
    centroids.emplace_back(row0.begin(), row0.end());
    std::vector<double> nearest(n);
    for (std::size_t p = 0; p < n; ++p) nearest[p] = sq_dist(points.row(p), centroids[0]);
    while (static_cast<int>(centroids.size()) < k) {
        const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
        std::size_t chosen = 0;
        if (total > 0.0) {
            std::discrete_distribution<std::size_t> pick(nearest.begin(), nearest.end());
            chosen = pick(rng);
        } else {
            chosen = first(rng);  // all points coincide with a centroid
        }
        auto row = points.row(chosen);
        centroids.emplace_back(row.begin(), row.end());
        for (std::size_t p = 0; p < n; ++p) nearest[p] = std::min(nearest[p], sq_dist(points.row(p), centroids.back()));
    }

    KMeansResult res;
    res.labels.assign(n, -1);
    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t p = 0; p < n; ++p) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = sq_dist(points.row(p), centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (res.labels[p] != best) {
                res.labels[p] = best;
                changed = true;
            }
        }
        if (!changed) break;

        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t p = 0; p < n; ++p) {
            auto row = points.row(p);
            for (std::size_t j = 0; j < dim; ++j) sums[res.labels[p]][j] += row[j];
            ++sizes[res.labels[p]];
        }
        for (int c = 0; c < k; ++c) {
            if (sizes[c] == 0) {
                // re-seed the empty cluster at the point farthest from its centroid
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t p = 0; p < n; ++p) {
                    const double d = sq_dist(points.row(p), centroids[res.labels[p]]);
                    if (d > far_d) {
                        far_d = d;
                        far = p;
                    }
                }
                auto row = points.row(far);
                centroids[c].assign(row.begin(), row.end());
                res.labels[far] = c;
                continue;
            }
            for (std::size_t j = 0; j < dim; ++j) centroids[c][j] = sums[c][j] / static_cast<double>(sizes[c]);
        }
    }
    res.inertia = 0.0;
    for (std::size_t p = 0; p < n; ++p) res.inertia += sq_dist(points.row(p), centroids[res.labels[p]]);
    return res;
}

}  // namespace

double manhattan_error(std::span<const double> est, std::span<const Count> truth) {
    if (est.size() != truth.size()) throw ValidationError("manhattan_error: length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) total += std::abs(est[i] - static_cast<double>(truth[i]));
    return total;
}

double mae(const RealMatrix& est, const std::vector<std::vector<Count>>& truth) {
    check_shapes(est, truth, "mae");
    if (est.data.empty()) throw UndefinedMetricError("mae: no entries");
    double total = 0.0;
    for (std::size_t r = 0; r < est.rows; ++r) {
        for (std::size_t c = 0; c < est.cols; ++c) total += std::abs(est(r, c) - static_cast<double>(truth[r][c]));
    }
    return total / static_cast<double>(est.data.size());
}

double mpe(const RealMatrix& est, const std::vector<std::vector<Count>>& truth) {
    check_shapes(est, truth, "mpe");
    std::vector<double> errors;
    for (std::size_t r = 0; r < est.rows; ++r) {
        for (std::size_t c = 0; c < est.cols; ++c) {
            const double t = static_cast<double>(truth[r][c]);
            if (t > 0.0) errors.push_back(100.0 * std::abs(est(r, c) - t) / t);
        }
    }
    if (errors.empty()) throw UndefinedMetricError("mpe: every truth entry is zero");
    return median(std::move(errors));
}

KMeansResult kmeans(const RealMatrix& points, int k, int restarts, Rng& rng, const std::vector<int>* reference,
                    int max_iterations) {
    if (k < 1 || static_cast<std::size_t>(k) > points.rows) {
        throw ValidationError("kmeans: need 1 <= k <= number of points");
    }
    if (restarts < 1) throw ValidationError("kmeans: restarts must be >= 1");
    if (reference && reference->size() != points.rows) throw ValidationError("kmeans: reference length mismatch");
    KMeansResult best;
    for (int r = 0; r < restarts; ++r) {
        KMeansResult run = lloyd(points, k, rng, max_iterations);
        if (reference) run.ari = adjusted_rand_index(run.labels, *reference);
        const bool better = r == 0 || (reference ? *run.ari > *best.ari : run.inertia < best.inertia);
        if (better) best = std::move(run);
    }
    return best;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw ValidationError("adjusted_rand_index: length mismatch");
    if (a.size() < 2) throw ValidationError("adjusted_rand_index: need at least 2 labels");
    std::map<std::pair<int, int>, double> table;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [_, n] : table) index += choose2(n);
    for (const auto& [_, n] : rows) sum_rows += choose2(n);
    for (const auto& [_, n] : cols) sum_cols += choose2(n);
    const double expected = sum_rows * sum_cols / choose2(static_cast<double>(a.size()));
    const double max_index = 0.5 * (sum_rows + sum_cols);
    // both partitions trivial (single cluster or all singletons) and identical
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("pearson_correlation: length mismatch");
    if (x.size() < 2) throw ValidationError("pearson_correlation: need at least 2 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedMetricError("pearson_correlation: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<EstimateSummary> estimate_summary(const RealMatrix& est) {
    std::vector<EstimateSummary> out(est.rows);
    for (std::size_t r = 0; r < est.rows; ++r) {
        for (double v : est.row(r)) {
            out[r].t_total += v;
            if (v > 0.5) ++out[r].t_unique;
        }
    }
    return out;
}

MetricReport estimation_report(const RealMatrix& est, const std::vector<int>& labels,
                               const std::vector<std::vector<Count>>& ground_truth) {
    if (labels.size() != est.rows) throw ValidationError("estimation_report: label count mismatch");
    std::vector<std::vector<Count>> truth;
    truth.reserve(labels.size());
    for (int l : labels) truth.push_back(ground_truth.at(l));

    MetricReport report;
    report.mpe = mpe(est, truth);
    report.mae = mae(est, truth);
    double manhattan = 0.0;
    for (std::size_t r = 0; r < est.rows; ++r) manhattan += manhattan_error(est.row(r), truth[r]);
    report.manhattan = manhattan / static_cast<double>(est.rows);

    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t r = 0; r < labels.size(); ++r) members[labels[r]].push_back(r);
    for (const auto& [label, rows] : members) {
        RealMatrix sub{rows.size(), est.cols, {}};
        std::vector<std::vector<Count>> sub_truth;
        std::vector<double> totals;
        for (std::size_t r : rows) {
            auto row = est.row(r);
            sub.data.insert(sub.data.end(), row.begin(), row.end());
            sub_truth.push_back(truth[r]);
            totals.push_back(std::accumulate(row.begin(), row.end(), 0.0));
        }
        DistributionMetrics m;
        m.mae = mae(sub, sub_truth);
        try {
            m.mpe = mpe(sub, sub_truth);
        } catch (const UndefinedMetricError&) {
            m.mpe = std::numeric_limits<double>::quiet_NaN();
        }
        m.median_estimated_total = median(totals);
        const auto& gt = ground_truth.at(label);
        m.true_total = static_cast<double>(std::accumulate(gt.begin(), gt.end(), Count{0}));
        report.per_distribution[label] = m;
    }
    return report;
}

std::string metric_report_json(const MetricReport& report) {
    nlohmann::ordered_json j;
    auto put = [&](const char* key, const std::optional<double>& v) {
        j[key] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    put("ari", report.ari);
    put("mpe_percent", report.mpe);
    put("mae", report.mae);
    put("manhattan", report.manhattan);
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (const auto& [label, m] : report.per_distribution) {
        per.push_back({{"distribution", label},
                       {"mpe_percent", std::isnan(m.mpe) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(m.mpe)},
                       {"mae", m.mae},
                       {"median_estimated_total", m.median_estimated_total},
                       {"true_total", m.true_total}});
    }
    j["per_distribution"] = per;
    return j.dump(2);
}

std::string metric_report_csv_header() { return "ari,mpe_percent,mae,manhattan"; }

std::string metric_report_csv_row(const MetricReport& report) {
    std::ostringstream out;
    out.precision(17);
    auto put = [&](const std::optional<double>& v, bool last) {
        if (v) out << *v;
        if (!last) out << ',';
    };
    put(report.ari, false);
    put(report.mpe, false);
    put(report.mae, false);
    put(report.manhattan, true);
    return out.str();
}

}  // namespace hgpop
