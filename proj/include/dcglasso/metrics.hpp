#pragma once
#include "dcglasso/core.hpp"

namespace dcglasso {

/// (1/p) * sum_j (beta_hat_j - beta_true_j)^2
double mse(const Vector& beta_hat, const Vector& beta_true);

struct SupportMetrics
{
    bool exact = false;
    Index missed = 0;   ///< in truth, not estimated
    Index extra = 0;    ///< estimated, not in truth
};

SupportMetrics support_metrics(const SupportPattern& estimated, const SupportPattern& truth);

/// Count of exactly nonzero coefficients.
Index degrees_of_freedom(const Vector& beta);

} // namespace dcglasso
