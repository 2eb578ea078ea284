#include "dcglasso/metrics.hpp"

#include <algorithm>
#include <iterator>

namespace dcglasso {

double mse(const Vector& beta_hat, const Vector& beta_true)
{
    if (beta_hat.size() != beta_true.size())
        throw Error(ErrorCode::DimensionMismatch, "mse needs equal lengths");
    if (beta_hat.size() == 0) return 0.0;
    return (beta_hat - beta_true).squaredNorm() / static_cast<double>(beta_hat.size());
}

SupportMetrics support_metrics(const SupportPattern& estimated, const SupportPattern& truth)
{
    if (estimated.mode != truth.mode) throw Error(ErrorCode::ModeMismatch, "supports are in different modes");
    IndexList missed, extra;
    std::set_difference(truth.selected.begin(), truth.selected.end(), estimated.selected.begin(),
                        estimated.selected.end(), std::back_inserter(missed));
    std::set_difference(estimated.selected.begin(), estimated.selected.end(), truth.selected.begin(),
                        truth.selected.end(), std::back_inserter(extra));
    SupportMetrics m;
    m.missed = static_cast<Index>(missed.size());
    m.extra = static_cast<Index>(extra.size());
    m.exact = m.missed == 0 && m.extra == 0;
    return m;
}

Index degrees_of_freedom(const Vector& beta)
{
    return static_cast<Index>((beta.array() != 0.0).count());
}

} // namespace dcglasso
