#pragma once

#include <Eigen/Core>

#include "tailmix/distributions.hpp"

namespace tailmix {

/// Minimum sample size accepted by the maximum-likelihood fitters.
inline constexpr Eigen::Index kMinFitSample = 30;

/// Box constraint on the fitted GPD/GEV shape.
inline constexpr double kShapeLower = -0.99;
inline constexpr double kShapeUpper = 5.0;

/// GPD log-likelihood of positive excesses (location fixed at 0).
double gpd_excess_log_lik(const Eigen::ArrayXd& excesses, double scale, double shape);

/// Fits scale and shape of a GPD to positive excesses over a caller-supplied
/// threshold; the returned location is 0. Optimizes (log scale, shape) with
/// the shape constrained to (-0.99, 5), restarting from the moment and
/// probability-weighted-moment estimates. The reported log-likelihood is
/// never below the exponential (xi = 0) submodel's.
GpdParams fit_gpd_mle(const Eigen::ArrayXd& excesses);

/// Closed-form lognormal MLE (no truncation adjustment). Biased when the
/// sample was right-truncated; kept for the bias experiments.
LognormalParams fit_lognormal_naive(const Eigen::ArrayXd& data);

/// Right-truncated lognormal MLE: maximizes the conditional likelihood
/// h(y)/H(u) over data restricted to (0, u]. Pass u = +inf for the plain MLE.
LognormalParams fit_lognormal_truncated(const Eigen::ArrayXd& data, double truncation);

/// Truncated fit from sufficient statistics of the log values:
/// count, sum of log x, sum of (log x)^2. O(1) per likelihood evaluation,
/// which makes bootstrap refits cheap.
LognormalParams fit_lognormal_truncated_stats(Eigen::Index count, double sum_log,
                                              double sum_log2, double truncation);

LognormalParams fit_lognormal_naive_stats(Eigen::Index count, double sum_log, double sum_log2);

double lognormal_truncated_log_lik(Eigen::Index count, double sum_log, double sum_log2,
                                   double truncation, const LognormalParams& p);

/// GEV maximum-likelihood fit with the same convergence contract as
/// fit_gpd_mle (moment and PWM starts, shape box, best-of restarts).
GevParams fit_gev_mle(const Eigen::ArrayXd& data);

double gev_log_lik(const Eigen::ArrayXd& data, const GevParams& p);

}  // namespace tailmix
