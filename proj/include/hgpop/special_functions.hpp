#pragma once

namespace hgpop {

/// Natural log of the gamma function for x > 0.
///
/// Arguments below 10 are shifted up with the recurrence
/// log G(x) = log G(x + m) - log(x (x+1) ... (x+m-1)) and then evaluated with
/// the Stirling series truncated after the B_16 term. Relative error stays
/// near machine precision on [1e-3, 1e7].
double log_gamma(double x);

/// Digamma psi(x) = d/dx log G(x) for x > 0, using the same shift and the
/// asymptotic expansion in 1/x^2.
double digamma(double x);

/// log of the binomial coefficient with factorials replaced by gamma
/// functions, so that a and b may be real. Requires a >= b >= 0.
double log_binomial_relaxed(double a, double b);

}  // namespace hgpop
