#pragma once

#include <cmath>

namespace tailmix {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kSqrt2Pi = 2.5066282746310002;
inline constexpr double kLogSqrt2Pi = 0.9189385332046727;

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

inline double norm_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

/// log Phi(x), stable far into the left tail where Phi underflows.
double norm_log_cdf(double x);

/// Inverse standard normal CDF for p in (0, 1). Accurate to ~1 ulp
/// (rational approximation polished with two Newton steps).
double norm_quantile(double p);

}  // namespace tailmix
