#pragma once

namespace hdinf {

/// Standard normal CDF. Saturates to exactly 0 or 1 far in the tails.
double normal_cdf(double x);

/// Upper tail 1 - normal_cdf(x), accurate in the right tail where the
/// subtraction would cancel.
double normal_sf(double x);

/// Inverse of normal_cdf on (0, 1). Throws DomainError outside the open interval.
double normal_quantile(double q);

/// Two-sided critical value z_a = normal_quantile(1 - a).
inline double z_value(double a) { return -normal_quantile(a); }

}  // namespace hdinf
