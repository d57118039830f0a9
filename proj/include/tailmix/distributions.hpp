#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "tailmix/rng.hpp"

namespace tailmix {

/// Shape below which the GPD/GEV formulas switch to their analytic xi -> 0
/// limits, avoiding catastrophic cancellation near zero shape.
inline constexpr double kShapeZeroTol = 1e-9;

// ---------------------------------------------------------------------------
// Parameter sets
// ---------------------------------------------------------------------------

/// Generalized Pareto: location u, scale sigma > 0, shape xi.
/// Support is x > u for xi >= 0 and u < x < u - sigma/xi for xi < 0.
struct GpdParams {
    double location = 0.0;
    double scale = 1.0;
    double shape = 0.0;
};

struct LognormalParams {
    double mu = 0.0;
    double sigma_log = 1.0;  // > 0
};

/// Azzalini skew-normal: location, scale omega > 0, shape alpha.
struct SkewNormalParams {
    double location = 0.0;
    double scale = 1.0;
    double shape = 0.0;
};

/// Generalized extreme value: location, scale > 0, shape.
struct GevParams {
    double location = 0.0;
    double scale = 1.0;
    double shape = 0.0;
};

void validate(const GpdParams& p);
void validate(const LognormalParams& p);
void validate(const SkewNormalParams& p);
void validate(const GevParams& p);

// ---------------------------------------------------------------------------
// Generalized Pareto
// ---------------------------------------------------------------------------

/// G(x) = 1 - (1 + xi (x-u)/sigma)^(-1/xi), exponential branch at xi = 0.
/// Throws std::domain_error for x outside the support.
double gpd_cdf(double x, const GpdParams& p);

double gpd_pdf(double x, const GpdParams& p);

double gpd_log_pdf(double x, const GpdParams& p);

/// Inverse of gpd_cdf for q in [0, 1).
double gpd_quantile(double q, const GpdParams& p);

/// Upper end of the support (+inf for xi >= 0).
double gpd_support_upper(const GpdParams& p);

Eigen::ArrayXd sample(const GpdParams& p, Eigen::Index n, std::uint64_t seed);
Eigen::ArrayXd sample(const GpdParams& p, Eigen::Index n, Rng& rng);

// ---------------------------------------------------------------------------
// Lognormal
// ---------------------------------------------------------------------------

double lognormal_cdf(double x, const LognormalParams& p);
double lognormal_pdf(double x, const LognormalParams& p);
double lognormal_log_pdf(double x, const LognormalParams& p);
double lognormal_quantile(double q, const LognormalParams& p);

Eigen::ArrayXd sample(const LognormalParams& p, Eigen::Index n, std::uint64_t seed);
Eigen::ArrayXd sample(const LognormalParams& p, Eigen::Index n, Rng& rng);

// ---------------------------------------------------------------------------
// Skew-normal
// ---------------------------------------------------------------------------

/// f(x) = (2/omega) phi(z) Phi(alpha z) with z = (x - location)/omega.
double skew_normal_pdf(double x, const SkewNormalParams& p);
double skew_normal_log_pdf(double x, const SkewNormalParams& p);

/// Mean and variance via the Appendix-style delta relations.
double skew_normal_mean(const SkewNormalParams& p);
double skew_normal_variance(const SkewNormalParams& p);
double skew_normal_skewness(const SkewNormalParams& p);

/// Largest attainable |skewness| of the family (delta -> 1 limit), ~0.99527.
double skew_normal_max_skewness();

/// Sampling via the two-normal representation
/// x = location + omega (delta |z0| + sqrt(1-delta^2) z1).
Eigen::ArrayXd sample(const SkewNormalParams& p, Eigen::Index n, std::uint64_t seed);
Eigen::ArrayXd sample(const SkewNormalParams& p, Eigen::Index n, Rng& rng);

// ---------------------------------------------------------------------------
// Generalized extreme value
// ---------------------------------------------------------------------------

double gev_cdf(double x, const GevParams& p);

/// Density; returns the limit value at the support boundary (never NaN).
double gev_pdf(double x, const GevParams& p);
double gev_log_pdf(double x, const GevParams& p);
double gev_quantile(double q, const GevParams& p);

Eigen::ArrayXd sample(const GevParams& p, Eigen::Index n, std::uint64_t seed);
Eigen::ArrayXd sample(const GevParams& p, Eigen::Index n, Rng& rng);

}  // namespace tailmix
