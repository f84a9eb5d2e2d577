#pragma once

namespace ouq {

/// Standard normal CDF, computed from erfc for accuracy in both tails.
double normal_cdf(double x);

/// Standard normal quantile for p in (0, 1); +-infinity at the endpoints.
/// Acklam's rational approximation refined by one Halley step, giving a
/// relative error near machine precision.
double normal_quantile(double p);

} // namespace ouq
