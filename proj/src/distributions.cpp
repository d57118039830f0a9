#include "tailmix/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tailmix/special.hpp"

namespace tailmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* msg) {
    if (!ok) throw std::domain_error(msg);
}

}  // namespace

void validate(const GpdParams& p) {
    require(p.scale > 0.0 && std::isfinite(p.scale), "GpdParams: scale must be positive");
    require(std::isfinite(p.location) && std::isfinite(p.shape), "GpdParams: non-finite parameter");
}

void validate(const LognormalParams& p) {
    require(p.sigma_log > 0.0 && std::isfinite(p.sigma_log), "LognormalParams: sigma_log must be positive");
    require(std::isfinite(p.mu), "LognormalParams: non-finite mu");
}

void validate(const SkewNormalParams& p) {
    require(p.scale > 0.0 && std::isfinite(p.scale), "SkewNormalParams: scale must be positive");
    require(std::isfinite(p.location) && std::isfinite(p.shape), "SkewNormalParams: non-finite parameter");
}

void validate(const GevParams& p) {
    require(p.scale > 0.0 && std::isfinite(p.scale), "GevParams: scale must be positive");
    require(std::isfinite(p.location) && std::isfinite(p.shape), "GevParams: non-finite parameter");
}

// ---------------------------------------------------------------------------
// Generalized Pareto
// ---------------------------------------------------------------------------

double gpd_support_upper(const GpdParams& p) {
    if (p.shape < 0.0) return p.location - p.scale / p.shape;
    return kInf;
}

namespace {

double gpd_z(double x, const GpdParams& p) {
    const double z = (x - p.location) / p.scale;
    if (z < 0.0) throw std::domain_error("gpd: x below the location parameter");
    if (p.shape < -kShapeZeroTol && 1.0 + p.shape * z < 0.0) {
        throw std::domain_error("gpd: x above the upper support endpoint");
    }
    return z;
}

}  // namespace

double gpd_cdf(double x, const GpdParams& p) {
    validate(p);
    const double z = gpd_z(x, p);
    if (std::abs(p.shape) < kShapeZeroTol) {
        return -std::expm1(-z);
    }
    const double t = 1.0 + p.shape * z;
    if (t <= 0.0) return 1.0;  // at/beyond the xi<0 endpoint
    return -std::expm1(-std::log(t) / p.shape);
}

double gpd_log_pdf(double x, const GpdParams& p) {
    validate(p);
    const double z = gpd_z(x, p);
    if (std::abs(p.shape) < kShapeZeroTol) {
        return -std::log(p.scale) - z;
    }
    const double t = 1.0 + p.shape * z;
    if (t <= 0.0) return -kInf;
    return -std::log(p.scale) - (1.0 / p.shape + 1.0) * std::log(t);
}

double gpd_pdf(double x, const GpdParams& p) { return std::exp(gpd_log_pdf(x, p)); }

double gpd_quantile(double q, const GpdParams& p) {
    validate(p);
    if (!(q >= 0.0 && q < 1.0)) throw std::domain_error("gpd_quantile: q outside [0,1)");
    if (q == 0.0) return p.location;
    if (std::abs(p.shape) < kShapeZeroTol) {
        return p.location - p.scale * std::log1p(-q);
    }
    return p.location + p.scale / p.shape * std::expm1(-p.shape * std::log1p(-q));
}

Eigen::ArrayXd sample(const GpdParams& p, Eigen::Index n, Rng& rng) {
    validate(p);
    if (n < 1) throw std::domain_error("sample: n must be >= 1");
    Eigen::ArrayXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = gpd_quantile(rng.uniform(), p);
    return out;
}

Eigen::ArrayXd sample(const GpdParams& p, Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    return sample(p, n, rng);
}

// ---------------------------------------------------------------------------
// Lognormal
// ---------------------------------------------------------------------------

double lognormal_cdf(double x, const LognormalParams& p) {
    validate(p);
    if (x <= 0.0) return 0.0;
    return norm_cdf((std::log(x) - p.mu) / p.sigma_log);
}

double lognormal_log_pdf(double x, const LognormalParams& p) {
    validate(p);
    if (x <= 0.0) return -kInf;
    const double lx = std::log(x);
    const double z = (lx - p.mu) / p.sigma_log;
    return -lx - std::log(p.sigma_log) + norm_log_pdf(z);
}

double lognormal_pdf(double x, const LognormalParams& p) {
    if (x <= 0.0) return 0.0;
    return std::exp(lognormal_log_pdf(x, p));
}

double lognormal_quantile(double q, const LognormalParams& p) {
    validate(p);
    if (!(q >= 0.0 && q < 1.0)) throw std::domain_error("lognormal_quantile: q outside [0,1)");
    if (q == 0.0) return 0.0;
    return std::exp(p.mu + p.sigma_log * norm_quantile(q));
}

Eigen::ArrayXd sample(const LognormalParams& p, Eigen::Index n, Rng& rng) {
    validate(p);
    if (n < 1) throw std::domain_error("sample: n must be >= 1");
    Eigen::ArrayXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = std::exp(p.mu + p.sigma_log * rng.normal());
    return out;
}

Eigen::ArrayXd sample(const LognormalParams& p, Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    return sample(p, n, rng);
}

// ---------------------------------------------------------------------------
// Skew-normal
// ---------------------------------------------------------------------------

double skew_normal_log_pdf(double x, const SkewNormalParams& p) {
    validate(p);
    const double z = (x - p.location) / p.scale;
    return std::log(2.0 / p.scale) + norm_log_pdf(z) + norm_log_cdf(p.shape * z);
}

double skew_normal_pdf(double x, const SkewNormalParams& p) {
    return std::exp(skew_normal_log_pdf(x, p));
}

namespace {

double sn_delta(double alpha) { return alpha / std::sqrt(1.0 + alpha * alpha); }

constexpr double kTwoOverPi = 0.6366197723675814;

}  // namespace

double skew_normal_mean(const SkewNormalParams& p) {
    validate(p);
    return p.location + p.scale * sn_delta(p.shape) * std::sqrt(kTwoOverPi);
}

double skew_normal_variance(const SkewNormalParams& p) {
    validate(p);
    const double d = sn_delta(p.shape);
    return p.scale * p.scale * (1.0 - kTwoOverPi * d * d);
}

double skew_normal_skewness(const SkewNormalParams& p) {
    validate(p);
    const double d = sn_delta(p.shape);
    const double t = d * std::sqrt(kTwoOverPi);
    return 0.5 * (4.0 - M_PI) * t * t * t / std::pow(1.0 - t * t, 1.5);
}

double skew_normal_max_skewness() {
    const double t2 = kTwoOverPi;  // delta -> 1
    return 0.5 * (4.0 - M_PI) * std::pow(t2, 1.5) / std::pow(1.0 - t2, 1.5);
}

Eigen::ArrayXd sample(const SkewNormalParams& p, Eigen::Index n, Rng& rng) {
    validate(p);
    if (n < 1) throw std::domain_error("sample: n must be >= 1");
    const double d = sn_delta(p.shape);
    const double c = std::sqrt(1.0 - d * d);
    Eigen::ArrayXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double z0 = rng.normal();
        const double z1 = rng.normal();
        out[i] = p.location + p.scale * (d * std::abs(z0) + c * z1);
    }
    return out;
}

Eigen::ArrayXd sample(const SkewNormalParams& p, Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    return sample(p, n, rng);
}

// ---------------------------------------------------------------------------
// Generalized extreme value
// ---------------------------------------------------------------------------

double gev_cdf(double x, const GevParams& p) {
    validate(p);
    const double z = (x - p.location) / p.scale;
    if (std::abs(p.shape) < kShapeZeroTol) {
        return std::exp(-std::exp(-z));
    }
    const double t = 1.0 + p.shape * z;
    if (t <= 0.0) return p.shape > 0.0 ? 0.0 : 1.0;
    return std::exp(-std::pow(t, -1.0 / p.shape));
}

double gev_log_pdf(double x, const GevParams& p) {
    validate(p);
    const double z = (x - p.location) / p.scale;
    if (std::abs(p.shape) < kShapeZeroTol) {
        return -std::log(p.scale) - z - std::exp(-z);
    }
    const double t = 1.0 + p.shape * z;
    if (t <= 0.0) {
        // Support boundary: the limit is 0 for xi in (-1,0) and xi > 0,
        // 1/sigma at xi = -1, unbounded below that. Never NaN.
        if (t == 0.0 && p.shape < -1.0) return kInf;
        if (t == 0.0 && p.shape == -1.0) return -std::log(p.scale);
        return -kInf;
    }
    const double log_t = std::log(t);
    return -std::log(p.scale) - (1.0 / p.shape + 1.0) * log_t - std::exp(-log_t / p.shape);
}

double gev_pdf(double x, const GevParams& p) {
    const double lp = gev_log_pdf(x, p);
    if (lp == kInf) return kInf;
    return std::exp(lp);
}

double gev_quantile(double q, const GevParams& p) {
    validate(p);
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("gev_quantile: q outside (0,1)");
    if (std::abs(p.shape) < kShapeZeroTol) {
        return p.location - p.scale * std::log(-std::log(q));
    }
    return p.location + p.scale / p.shape * std::expm1(-p.shape * std::log(-std::log(q)));
}

Eigen::ArrayXd sample(const GevParams& p, Eigen::Index n, Rng& rng) {
    validate(p);
    if (n < 1) throw std::domain_error("sample: n must be >= 1");
    Eigen::ArrayXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = gev_quantile(rng.uniform(), p);
    return out;
}

Eigen::ArrayXd sample(const GevParams& p, Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    return sample(p, n, rng);
}

}  // namespace tailmix
