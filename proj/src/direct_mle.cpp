#include "hgpop/direct_mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hgpop/error.hpp"

namespace hgpop {

namespace {

double rounded_manhattan(std::span<const double> est, const std::vector<Count>& truth) {
    double total = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        total += std::abs(static_cast<double>(std::llround(est[i]) - truth[i]));
    }
    return total;
}

}  // namespace

std::pair<Count, Count> NllLandscape::argmin() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < nll.size(); ++i) {
        if (nll[i] < nll[best]) best = i;
    }
    return {n1_values[best / n2_values.size()], n2_values[best % n2_values.size()]};
}

NllLandscape nll_landscape(const CountMatrix& batch, IntRange n1_range, IntRange n2_range) {
    if (batch.cols() != 2) {
        throw UnsupportedError("nll_landscape: only defined for two categories, got " +
                               std::to_string(batch.cols()));
    }
    if (n1_range.lo > n1_range.hi || n2_range.lo > n2_range.hi || n1_range.lo < 0 || n2_range.lo < 0) {
        throw ValidationError("nll_landscape: invalid range");
    }
    const auto max_counts = batch.column_max();
    const WeightedRows rows = compress_rows(batch);

    NllLandscape out;
    for (Count v = n1_range.lo; v <= n1_range.hi; ++v) out.n1_values.push_back(v);
    for (Count v = n2_range.lo; v <= n2_range.hi; ++v) out.n2_values.push_back(v);
    out.nll.assign(out.n1_values.size() * out.n2_values.size(),
                   std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < out.n1_values.size(); ++i) {
        if (out.n1_values[i] < max_counts[0]) continue;
        for (std::size_t j = 0; j < out.n2_values.size(); ++j) {
            if (out.n2_values[j] < max_counts[1]) continue;
            const double est[2] = {static_cast<double>(out.n1_values[i]),
                                   static_cast<double>(out.n2_values[j])};
            out.nll[i * out.n2_values.size() + j] = hypergeom_nll(rows, est);
        }
    }
    return out;
}

void OptimizerConfig::validate() const {
    adam.validate();
    penalty.validate();
    if (max_epochs < 1) throw ValidationError("optimizer: max_epochs must be >= 1");
    if (patience < 1) throw ValidationError("optimizer: patience must be >= 1");
}

FitResult fit_single(const CountMatrix& batch, const OptimizerConfig& config,
                     const std::optional<std::vector<Count>>& ground_truth) {
    config.validate();
    if (batch.empty()) throw ValidationError("fit_single: batch is empty");
    const std::size_t k = batch.cols();
    if (!config.init.empty() && config.init.size() != k) {
        throw ValidationError("fit_single: init vector has wrong length");
    }
    if (ground_truth && ground_truth->size() != k) {
        throw ValidationError("fit_single: ground truth has wrong length");
    }

    // A single shared estimate must dominate every row, so the binding
    // constraint is the elementwise maximum.
    const std::vector<Count> max_counts = batch.column_max();
    const WeightedRows rows = compress_rows(batch);

    std::vector<double> raw = config.init.empty() ? std::vector<double>(k, 0.0) : config.init;
    AdamState adam(k);
    FitTrajectory traj;
    std::vector<double> grad(k);

    double prev_loss = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        const std::vector<double> est = threshold_estimates(max_counts, raw);
        const double nll = hypergeom_nll(rows, est);
        const double weight = config.penalty.weight_at(epoch);
        const double loss = nll + weight * violation_penalty(max_counts, raw);
        if (!std::isfinite(loss)) {
            std::ostringstream msg;
            msg << "fit_single: non-finite loss at epoch " << epoch << ", estimate (";
            for (std::size_t i = 0; i < k; ++i) msg << (i ? ", " : "") << raw[i];
            msg << ")";
            throw NumericalError(msg.str());
        }
        traj.estimates.push_back(est);
        traj.nll.push_back(nll);
        traj.loss.push_back(loss);
        if (ground_truth) traj.error.push_back(rounded_manhattan(est, *ground_truth));

        // Likelihood gradient only where the threshold is inactive; the
        // penalty supplies the push where it is.
        const std::vector<double> lik_grad = hypergeom_nll_grad(rows, est);
        for (std::size_t i = 0; i < k; ++i) {
            const double c = static_cast<double>(max_counts[i]);
            grad[i] = raw[i] > c ? lik_grad[i] : 0.0;
            if (raw[i] < c) grad[i] -= weight;
        }
        adam_apply(adam, grad, raw, config.adam);

        if (prev_loss - loss < config.tolerance) {
            if (++stale >= config.patience) break;
        } else {
            stale = 0;
        }
        prev_loss = loss;
    }
    return {PopulationEstimate(threshold_estimates(max_counts, raw)), std::move(traj)};
}

}  // namespace hgpop
