#include "hgpop/adam.hpp"

#include <cmath>

#include "hgpop/error.hpp"

namespace hgpop {

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("adam: learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
        throw ValidationError("adam: betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ValidationError("adam: epsilon must be > 0");
}

void adam_apply(AdamState& state, std::span<const double> grad, std::span<double> params,
                const AdamConfig& config) {
    if (grad.size() != state.m.size() || params.size() != grad.size()) {
        throw ValidationError("adam: buffer, gradient and parameter lengths differ");
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < grad.size(); ++i) {
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grad[i];
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

AdamResult adam_update(const AdamState& state, std::span<const double> grad, const AdamConfig& config) {
    AdamResult out{state, std::vector<double>(grad.size(), 0.0)};
    adam_apply(out.state, grad, out.delta, config);
    return out;
}

}  // namespace hgpop
