#include "tailmix/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "tailmix/errors.hpp"
#include "tailmix/nelder_mead.hpp"
#include "tailmix/sample_stats.hpp"

namespace tailmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_fit_input(const Eigen::ArrayXd& data, const char* who) {
    if (data.size() < kMinFitSample) {
        std::ostringstream os;
        os << who << ": need at least " << kMinFitSample << " observations, got " << data.size();
        throw FitError(os.str());
    }
    if (!data.isFinite().all()) throw FitError(std::string(who) + ": non-finite observation");
}

}  // namespace

// ---------------------------------------------------------------------------
// GPD
// ---------------------------------------------------------------------------

double gpd_excess_log_lik(const Eigen::ArrayXd& excesses, double scale, double shape) {
    const double n = static_cast<double>(excesses.size());
    if (!(scale > 0.0)) return -kInf;
    if (std::abs(shape) < kShapeZeroTol) {
        return -n * std::log(scale) - excesses.sum() / scale;
    }
    const Eigen::ArrayXd t = 1.0 + (shape / scale) * excesses;
    if ((t <= 0.0).any()) return -kInf;
    return -n * std::log(scale) - (1.0 / shape + 1.0) * t.log().sum();
}

namespace {

// Moment estimator: mean m, variance s2 of a GPD give
// xi = (1 - m^2/s2)/2, sigma = m (1 - xi).
bool gpd_moment_start(const Eigen::ArrayXd& x, double& scale, double& shape) {
    const double m = x.mean();
    const double s2 = variance(x);
    if (!(s2 > 0.0) || !(m > 0.0)) return false;
    shape = 0.5 * (1.0 - m * m / s2);
    scale = m * (1.0 - shape);
    return scale > 0.0;
}

// Hosking--Wallis probability-weighted moments with plotting positions
// (i - 0.35)/n on the ascending sample: a0 = mean, a1 = mean of x (1 - p).
bool gpd_pwm_start(const Eigen::ArrayXd& sorted, double& scale, double& shape) {
    const auto n = sorted.size();
    const double a0 = sorted.mean();
    double a1 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = (static_cast<double>(i) + 0.65) / static_cast<double>(n);
        a1 += sorted[i] * (1.0 - p);
    }
    a1 /= static_cast<double>(n);
    const double denom = a0 - 2.0 * a1;
    if (!(denom > 0.0)) return false;
    shape = 2.0 - a0 / denom;
    scale = 2.0 * a0 * a1 / denom;
    return scale > 0.0;
}

double clamp_shape(double xi) { return std::clamp(xi, kShapeLower + 1e-6, kShapeUpper - 1e-6); }

}  // namespace

GpdParams fit_gpd_mle(const Eigen::ArrayXd& excesses) {
    check_fit_input(excesses, "fit_gpd_mle");
    if ((excesses <= 0.0).any()) throw FitError("fit_gpd_mle: excesses must be positive");
    const double m = excesses.mean();
    if (!(excesses.maxCoeff() > excesses.minCoeff())) {
        throw FitError("fit_gpd_mle: degenerate (constant) sample");
    }

    auto objective = [&](const Eigen::VectorXd& v) {
        const double scale = std::exp(v[0]);
        const double shape = v[1];
        if (shape <= kShapeLower || shape >= kShapeUpper) return kInf;
        return -gpd_excess_log_lik(excesses, scale, shape);
    };

    std::vector<Eigen::Vector2d> starts;
    double s0, x0;
    if (gpd_moment_start(excesses, s0, x0)) {
        starts.emplace_back(std::log(s0), clamp_shape(x0));
    }
    Eigen::ArrayXd sorted = sorted_copy(excesses);
    if (gpd_pwm_start(sorted, s0, x0)) {
        starts.emplace_back(std::log(s0), clamp_shape(x0));
    }
    starts.emplace_back(std::log(m), 0.1);

    // Exponential submodel floor: sigma = mean, xi = 0.
    double best_ll = gpd_excess_log_lik(excesses, m, 0.0);
    GpdParams best{0.0, m, 0.0};
    bool best_converged = true;

    for (const auto& s : starts) {
        auto r = nelder_mead(objective, s, 0.2, 1e-11, 600);
        const double ll = -r.value;
        if (std::isfinite(ll) && ll > best_ll) {
            best_ll = ll;
            best = GpdParams{0.0, std::exp(r.x[0]), r.x[1]};
            best_converged = r.converged;
        }
    }

    if (!best_converged) {
        Eigen::Vector2d retry(std::log(best.scale), best.shape);
        auto r = nelder_mead(objective, retry, 0.05, 1e-11, 2000);
        if (!r.converged) {
            std::ostringstream os;
            os << "fit_gpd_mle: optimizer did not converge; best so far sigma=" << best.scale
               << " xi=" << best.shape << " loglik=" << best_ll;
            throw FitError(os.str());
        }
        if (-r.value > best_ll) {
            best_ll = -r.value;
            best = GpdParams{0.0, std::exp(r.x[0]), r.x[1]};
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Lognormal
// ---------------------------------------------------------------------------

LognormalParams fit_lognormal_naive_stats(Eigen::Index count, double sum_log, double sum_log2) {
    if (count < kMinFitSample) throw FitError("fit_lognormal: need at least 30 observations");
    const double n = static_cast<double>(count);
    const double mu = sum_log / n;
    const double var = sum_log2 / n - mu * mu;
    if (!(var > 0.0)) throw FitError("fit_lognormal: degenerate (constant) sample");
    return LognormalParams{mu, std::sqrt(var)};
}

double lognormal_truncated_log_lik(Eigen::Index count, double sum_log, double sum_log2,
                                   double truncation, const LognormalParams& p) {
    const double n = static_cast<double>(count);
    const double s2 = p.sigma_log * p.sigma_log;
    // sum over i of log phi((log x_i - mu)/sigma)/ (x_i sigma); the -sum(log x)
    // term is constant in the parameters but kept so values are comparable.
    double ll = -sum_log - n * std::log(p.sigma_log) - n * kLogSqrt2Pi
                - (sum_log2 - 2.0 * p.mu * sum_log + n * p.mu * p.mu) / (2.0 * s2);
    if (std::isfinite(truncation)) {
        ll -= n * norm_log_cdf((std::log(truncation) - p.mu) / p.sigma_log);
    }
    return ll;
}

LognormalParams fit_lognormal_truncated_stats(Eigen::Index count, double sum_log,
                                              double sum_log2, double truncation) {
    LognormalParams naive = fit_lognormal_naive_stats(count, sum_log, sum_log2);
    if (!std::isfinite(truncation)) return naive;

    auto objective = [&](const Eigen::VectorXd& v) {
        const LognormalParams p{v[0], std::exp(v[1])};
        return -lognormal_truncated_log_lik(count, sum_log, sum_log2, truncation, p);
    };
    Eigen::Vector2d start(naive.mu, std::log(naive.sigma_log));
    auto r = nelder_mead(objective, start, 0.2, 1e-12, 800);
    if (!r.converged) {
        r = nelder_mead(objective, r.x, 0.02, 1e-12, 2000);
    }
    if (!r.converged) {
        std::ostringstream os;
        os << "fit_lognormal_truncated: optimizer did not converge; best so far mu=" << r.x[0]
           << " sigma_log=" << std::exp(r.x[1]);
        throw FitError(os.str());
    }
    return LognormalParams{r.x[0], std::exp(r.x[1])};
}

LognormalParams fit_lognormal_naive(const Eigen::ArrayXd& data) {
    check_fit_input(data, "fit_lognormal_naive");
    if ((data <= 0.0).any()) throw FitError("fit_lognormal_naive: values must be positive");
    const Eigen::ArrayXd logs = data.log();
    return fit_lognormal_naive_stats(data.size(), logs.sum(), logs.square().sum());
}

LognormalParams fit_lognormal_truncated(const Eigen::ArrayXd& data, double truncation) {
    check_fit_input(data, "fit_lognormal_truncated");
    if ((data <= 0.0).any()) throw FitError("fit_lognormal_truncated: values must be positive");
    if ((data > truncation).any()) {
        throw std::invalid_argument("fit_lognormal_truncated: data above the truncation point");
    }
    const Eigen::ArrayXd logs = data.log();
    return fit_lognormal_truncated_stats(data.size(), logs.sum(), logs.square().sum(), truncation);
}

// ---------------------------------------------------------------------------
// GEV
// ---------------------------------------------------------------------------

double gev_log_lik(const Eigen::ArrayXd& data, const GevParams& p) {
    if (!(p.scale > 0.0)) return -kInf;
    const double n = static_cast<double>(data.size());
    const Eigen::ArrayXd z = (data - p.location) / p.scale;
    if (std::abs(p.shape) < kShapeZeroTol) {
        return -n * std::log(p.scale) - z.sum() - (-z).exp().sum();
    }
    const Eigen::ArrayXd t = 1.0 + p.shape * z;
    if ((t <= 0.0).any()) return -kInf;
    const Eigen::ArrayXd log_t = t.log();
    return -n * std::log(p.scale) - (1.0 / p.shape + 1.0) * log_t.sum()
           - (-log_t / p.shape).exp().sum();
}

GevParams fit_gev_mle(const Eigen::ArrayXd& data) {
    check_fit_input(data, "fit_gev_mle");
    const double m = data.mean();
    const double s2 = variance(data);
    if (!(s2 > 0.0)) throw FitError("fit_gev_mle: degenerate (constant) sample");
    const double sd = std::sqrt(s2);

    auto objective = [&](const Eigen::VectorXd& v) {
        const GevParams p{v[0], std::exp(v[1]), v[2]};
        if (p.shape <= kShapeLower || p.shape >= kShapeUpper) return kInf;
        return -gev_log_lik(data, p);
    };

    // Gumbel moment start: sigma = sd sqrt(6)/pi, mu = mean - gamma_E sigma.
    const double sigma_g = sd * std::sqrt(6.0) / M_PI;
    const double mu_g = m - 0.5772156649015329 * sigma_g;

    std::vector<Eigen::Vector3d> starts;
    starts.emplace_back(mu_g, std::log(sigma_g), 0.05);
    starts.emplace_back(mu_g, std::log(sigma_g), -0.1);
    starts.emplace_back(mu_g, std::log(sigma_g), 0.3);

    // Hosking PWM start (their k is the negated shape).
    {
        const Eigen::ArrayXd sorted = sorted_copy(data);
        const auto n = sorted.size();
        double b0 = sorted.mean(), b1 = 0.0, b2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = (static_cast<double>(i) + 0.65) / static_cast<double>(n);
            b1 += sorted[i] * p;
            b2 += sorted[i] * p * p;
        }
        b1 /= static_cast<double>(n);
        b2 /= static_cast<double>(n);
        const double denom = 3.0 * b2 - b0;
        if (denom != 0.0) {
            const double c = (2.0 * b1 - b0) / denom - std::log(2.0) / std::log(3.0);
            const double k = 7.8590 * c + 2.9554 * c * c;
            if (std::abs(k) > 1e-6 && k < 1.0) {
                const double g = std::tgamma(1.0 + k);
                const double sig = (2.0 * b1 - b0) * k / (g * (1.0 - std::pow(2.0, -k)));
                const double mu = b0 + sig * (g - 1.0) / k;
                if (std::isfinite(sig) && sig > 0.0 && std::isfinite(mu)) {
                    starts.emplace_back(mu, std::log(sig), clamp_shape(-k));
                }
            }
        }
    }

    double best_ll = -kInf;
    GevParams best;
    bool best_converged = false;
    for (const auto& s : starts) {
        auto r = nelder_mead(objective, s, 0.2, 1e-11, 1200);
        const double ll = -r.value;
        if (std::isfinite(ll) && ll > best_ll) {
            best_ll = ll;
            best = GevParams{r.x[0], std::exp(r.x[1]), r.x[2]};
            best_converged = r.converged;
        }
    }
    if (std::isfinite(best_ll) && !best_converged) {
        Eigen::Vector3d retry(best.location, std::log(best.scale), best.shape);
        auto r = nelder_mead(objective, retry, 0.05, 1e-11, 3000);
        if (r.converged && -r.value >= best_ll) {
            best_ll = -r.value;
            best = GevParams{r.x[0], std::exp(r.x[1]), r.x[2]};
            best_converged = true;
        }
    }
    if (!std::isfinite(best_ll) || !best_converged) {
        std::ostringstream os;
        os << "fit_gev_mle: optimizer did not converge; best loglik=" << best_ll;
        throw FitError(os.str());
    }
    return best;
}

}  // namespace tailmix
