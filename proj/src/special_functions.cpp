#include "hgpop/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hgpop/error.hpp"

namespace hgpop {

namespace {

constexpr double kShiftThreshold = 10.0;

// B_{2k} / (2k (2k-1)) for k = 1..8
constexpr double kStirling[] = {
    1.0 / 12.0,           -1.0 / 360.0,        1.0 / 1260.0,       -1.0 / 1680.0,
    1.0 / 1188.0,         -691.0 / 360360.0,   1.0 / 156.0,        -3617.0 / 122400.0,
};

// B_{2k} / (2k) for k = 1..8
constexpr double kDigammaSeries[] = {
    1.0 / 12.0,   -1.0 / 120.0,  1.0 / 252.0,        -1.0 / 240.0,
    1.0 / 132.0,  -691.0 / 32760.0, 1.0 / 12.0,      -3617.0 / 8160.0,
};

void require_positive(double x, const char* fn) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                          std::to_string(x));
    }
}

double stirling_log_gamma(double x) {
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = 0.0;
    double power = inv;
    for (double coef : kStirling) {
        series += coef * power;
        power *= inv2;
    }
    return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

double asymptotic_digamma(double x) {
    const double inv2 = 1.0 / (x * x);
    double series = 0.0;
    double power = inv2;
    for (double coef : kDigammaSeries) {
        series += coef * power;
        power *= inv2;
    }
    return std::log(x) - 0.5 / x - series;
}

}  // namespace

double log_gamma(double x) {
    require_positive(x, "log_gamma");
    if (x >= kShiftThreshold) return stirling_log_gamma(x);
    double product = 1.0;
    while (x < kShiftThreshold) {
        product *= x;
        x += 1.0;
    }
    return stirling_log_gamma(x) - std::log(product);
}

double digamma(double x) {
    require_positive(x, "digamma");
    double shift = 0.0;
    while (x < kShiftThreshold) {
        shift += 1.0 / x;
        x += 1.0;
    }
    return asymptotic_digamma(x) - shift;
}

double log_binomial_relaxed(double a, double b) {
    if (!(b >= 0.0) || !(a >= 0.0)) {
        throw DomainError("log_binomial_relaxed: arguments must be non-negative");
    }
    if (b > a) {
        throw DomainError("log_binomial_relaxed: b must not exceed a");
    }
    return log_gamma(a + 1.0) - log_gamma(b + 1.0) - log_gamma(a - b + 1.0);
}

}  // namespace hgpop
