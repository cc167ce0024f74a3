#pragma once

namespace enda::stats {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile, p in (0, 1). Accurate to full double precision
/// (Wichura's AS 241 rational approximations).
double normal_quantile(double p);

}  // namespace enda::stats
