#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hgpop {

struct AdamConfig {
    double learning_rate = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

/// First/second moment buffers plus the number of updates taken so far.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

struct AdamResult {
    AdamState state;
    /// Amount to add to the parameters.
    std::vector<double> delta;
};

/// Bias-corrected Adam step as a pure function of (state, grad).
AdamResult adam_update(const AdamState& state, std::span<const double> grad, const AdamConfig& config);

/// In-place variant used by the training loops: updates `state` and
/// applies the step to `params`.
void adam_apply(AdamState& state, std::span<const double> grad, std::span<double> params,
                const AdamConfig& config);

}  // namespace hgpop
