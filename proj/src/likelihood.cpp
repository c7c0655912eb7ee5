#include "hgpop/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hgpop/error.hpp"
#include "hgpop/special_functions.hpp"

namespace hgpop {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* fn) {
    if (a != b) {
        throw ValidationError(std::string(fn) + ": length mismatch (" + std::to_string(a) +
                              " vs " + std::to_string(b) + ")");
    }
}

void require_feasible(std::span<const Count> counts, std::span<const double> est) {
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (!(est[i] >= static_cast<double>(counts[i]))) {
            throw PreconditionError("hypergeometric likelihood: estimate " + std::to_string(est[i]) +
                                    " below observed count " + std::to_string(counts[i]) +
                                    " in category " + std::to_string(i) +
                                    "; threshold the estimates first");
        }
    }
}

}  // namespace

CountVector::CountVector(std::vector<Count> counts) : counts_(std::move(counts)) {
    if (counts_.size() < 2) throw ValidationError("CountVector: need at least 2 categories");
    for (Count c : counts_) {
        if (c < 0) throw ValidationError("CountVector: counts must be non-negative");
        total_ += c;
    }
}

PopulationEstimate::PopulationEstimate(std::vector<double> sizes) : sizes_(std::move(sizes)) {
    for (double s : sizes_) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw ValidationError("PopulationEstimate: sizes must be finite and non-negative");
        }
        total_ += s;
    }
}

std::vector<Count> PopulationEstimate::rounded() const {
    std::vector<Count> out(sizes_.size());
    std::transform(sizes_.begin(), sizes_.end(), out.begin(),
                   [](double s) { return static_cast<Count>(std::llround(s)); });
    return out;
}

void PenaltyConfig::validate() const {
    if (weight < 0.0) throw ValidationError("penalty weight must be non-negative");
    if (weight_min < 0.0 || weight_min > weight_max) {
        throw ValidationError("penalty requires 0 <= weight_min <= weight_max");
    }
    if (ramp_epochs < 0) throw ValidationError("penalty ramp_epochs must be >= 0");
}

double PenaltyConfig::weight_at(int epoch) const {
    if (ramp_epochs <= 0) return weight;
    if (epoch >= ramp_epochs) return weight_max;
    return weight_min + (weight_max - weight_min) * static_cast<double>(epoch) / ramp_epochs;
}

double hypergeom_log_pmf(std::span<const Count> counts, std::span<const double> est) {
    require_same_length(counts.size(), est.size(), "hypergeom_log_pmf");
    require_feasible(counts, est);
    double total_est = 0.0;
    Count n = 0;
    double value = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        total_est += est[i];
        n += counts[i];
        if (counts[i] > 0) value += log_binomial_relaxed(est[i], static_cast<double>(counts[i]));
    }
    if (n > 0) value -= log_binomial_relaxed(total_est, static_cast<double>(n));
    return value;
}

double hypergeom_log_pmf(const CountVector& c, const PopulationEstimate& est) {
    return hypergeom_log_pmf(c.counts(), est.sizes());
}

double hypergeom_nll(const CountMatrix& batch, std::span<const double> est) {
    double nll = 0.0;
    for (std::size_t t = 0; t < batch.rows(); ++t) nll -= hypergeom_log_pmf(batch.row(t), est);
    return nll;
}

double hypergeom_nll(const CountMatrix& batch, const PopulationEstimate& est) {
    return hypergeom_nll(batch, est.sizes());
}

double hypergeom_nll(const WeightedRows& batch, std::span<const double> est) {
    double nll = 0.0;
    for (std::size_t t = 0; t < batch.rows.rows(); ++t) {
        nll -= batch.weights[t] * hypergeom_log_pmf(batch.rows.row(t), est);
    }
    return nll;
}

void add_row_nll_grad(std::span<const Count> counts, std::span<const double> est, double scale,
                      std::span<double> grad) {
    require_same_length(counts.size(), est.size(), "hypergeom_nll_grad");
    require_feasible(counts, est);
    const double total_est = std::accumulate(est.begin(), est.end(), 0.0);
    const Count n = std::accumulate(counts.begin(), counts.end(), Count{0});
    if (n == 0) return;
    const double shared = digamma(total_est + 1.0) - digamma(total_est - n + 1.0);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        double g = shared;
        if (counts[i] > 0) g += digamma(est[i] - counts[i] + 1.0) - digamma(est[i] + 1.0);
        grad[i] += scale * g;
    }
}

std::vector<double> hypergeom_nll_grad(const CountMatrix& batch, std::span<const double> est) {
    std::vector<double> grad(est.size(), 0.0);
    for (std::size_t t = 0; t < batch.rows(); ++t) add_row_nll_grad(batch.row(t), est, 1.0, grad);
    return grad;
}

std::vector<double> hypergeom_nll_grad(const CountMatrix& batch, const PopulationEstimate& est) {
    return hypergeom_nll_grad(batch, est.sizes());
}

std::vector<double> hypergeom_nll_grad(const WeightedRows& batch, std::span<const double> est) {
    std::vector<double> grad(est.size(), 0.0);
    for (std::size_t t = 0; t < batch.rows.rows(); ++t) {
        add_row_nll_grad(batch.rows.row(t), est, batch.weights[t], grad);
    }
    return grad;
}

double violation_penalty(std::span<const Count> counts, std::span<const double> raw) {
    require_same_length(counts.size(), raw.size(), "violation_penalty");
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        total += std::max(0.0, static_cast<double>(counts[i]) - raw[i]);
    }
    return total;
}

double violation_penalty(const CountVector& c, const PopulationEstimate& raw) {
    return violation_penalty(c.counts(), raw.sizes());
}

std::vector<double> threshold_estimates(std::span<const Count> counts, std::span<const double> raw) {
    require_same_length(counts.size(), raw.size(), "threshold_estimates");
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = std::max(static_cast<double>(counts[i]), raw[i]);
    }
    return out;
}

PopulationEstimate threshold_estimates(const CountVector& c, const PopulationEstimate& raw) {
    return PopulationEstimate(threshold_estimates(c.counts(), raw.sizes()));
}

double multinomial_log_lik(std::span<const Count> counts, std::span<const double> probs) {
    require_same_length(counts.size(), probs.size(), "multinomial_log_lik");
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw DomainError("multinomial_log_lik: probabilities must be non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw DomainError("multinomial_log_lik: probabilities must sum to 1");
    }
    double value = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        if (probs[i] == 0.0) return -std::numeric_limits<double>::infinity();
        value += static_cast<double>(counts[i]) * std::log(probs[i]);
    }
    return value;
}

double multinomial_log_lik(const CountVector& c, std::span<const double> probs) {
    return multinomial_log_lik(c.counts(), probs);
}

double poisson_log_lik(std::span<const Count> counts, std::span<const double> rates) {
    require_same_length(counts.size(), rates.size(), "poisson_log_lik");
    double value = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (!(rates[i] > 0.0)) throw DomainError("poisson_log_lik: rates must be positive");
        const double c = static_cast<double>(counts[i]);
        value += c * std::log(rates[i]) - rates[i] - log_gamma(c + 1.0);
    }
    return value;
}

double poisson_log_lik(const CountVector& c, std::span<const double> rates) {
    return poisson_log_lik(c.counts(), rates);
}

double kl_diag_gaussian(std::span<const double> mean, std::span<const double> log_var) {
    require_same_length(mean.size(), log_var.size(), "kl_diag_gaussian");
    double kl = 0.0;
    for (std::size_t d = 0; d < mean.size(); ++d) {
        kl += mean[d] * mean[d] + std::exp(log_var[d]) - 1.0 - log_var[d];
    }
    return 0.5 * kl;
}

}  // namespace hgpop
