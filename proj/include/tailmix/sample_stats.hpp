#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace tailmix {

/// Quantile of an ascending-sorted sample at probability p using the
/// median-unbiased interpolation rule (Hyndman & Fan type 8,
/// h = (n + 1/3) p + 1/3). This is the single quantile convention used
/// throughout the project so bootstrap matrices are bit-reproducible.
double sorted_quantile(std::span<const double> sorted, double p);

/// sorted_quantile over an Eigen array (must already be ascending).
double sorted_quantile(const Eigen::ArrayXd& sorted, double p);

/// Returns an ascending copy.
Eigen::ArrayXd sorted_copy(const Eigen::ArrayXd& values);

double mean(const Eigen::ArrayXd& values);

/// Unbiased (B-1 denominator) variance.
double variance(const Eigen::ArrayXd& values);

/// Skewness with a 1/B third-moment numerator over the unbiased sd cubed.
double skewness(const Eigen::ArrayXd& values);

/// Running helper for lognormal-type sufficient statistics: given sorted
/// values, prefix sums of log x and (log x)^2 allow O(1) truncated-likelihood
/// evaluation for any cut index.
struct LogPrefixSums {
    std::vector<double> sum_log;    // sum_log[i] = sum of log x over first i values
    std::vector<double> sum_log2;   // same for squared logs

    static LogPrefixSums build(const Eigen::ArrayXd& sorted);
};

}  // namespace tailmix
