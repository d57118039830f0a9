#include "tailmix/sample_stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tailmix {

double sorted_quantile(std::span<const double> sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 0) throw std::domain_error("sorted_quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("sorted_quantile: p outside [0,1]");
    if (n == 1) return sorted[0];

    double h = (static_cast<double>(n) + 1.0 / 3.0) * p + 1.0 / 3.0;
    if (h <= 1.0) return sorted[0];
    if (h >= static_cast<double>(n)) return sorted[n - 1];
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

double sorted_quantile(const Eigen::ArrayXd& sorted, double p) {
    return sorted_quantile(std::span<const double>(sorted.data(), static_cast<std::size_t>(sorted.size())), p);
}

Eigen::ArrayXd sorted_copy(const Eigen::ArrayXd& values) {
    Eigen::ArrayXd out = values;
    std::sort(out.data(), out.data() + out.size());
    return out;
}

double mean(const Eigen::ArrayXd& values) {
    if (values.size() == 0) throw std::domain_error("mean: empty sample");
    return values.mean();
}

double variance(const Eigen::ArrayXd& values) {
    const auto n = values.size();
    if (n < 2) throw std::domain_error("variance: need at least 2 values");
    const double m = values.mean();
    return (values - m).square().sum() / static_cast<double>(n - 1);
}

double skewness(const Eigen::ArrayXd& values) {
    const auto n = values.size();
    if (n < 3) throw std::domain_error("skewness: need at least 3 values");
    const double m = values.mean();
    const double var = (values - m).square().sum() / static_cast<double>(n - 1);
    if (var <= 0.0) return 0.0;
    const double m3 = (values - m).cube().sum() / static_cast<double>(n);
    return m3 / std::pow(var, 1.5);
}

LogPrefixSums LogPrefixSums::build(const Eigen::ArrayXd& sorted) {
    const auto n = static_cast<std::size_t>(sorted.size());
    LogPrefixSums out;
    out.sum_log.resize(n + 1, 0.0);
    out.sum_log2.resize(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(sorted[static_cast<Eigen::Index>(i)]);
        out.sum_log[i + 1] = out.sum_log[i] + lx;
        out.sum_log2[i + 1] = out.sum_log2[i] + lx * lx;
    }
    return out;
}

}  // namespace tailmix
