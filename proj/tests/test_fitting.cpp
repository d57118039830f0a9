#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tailmix/distributions.hpp"
#include "tailmix/errors.hpp"
#include "tailmix/fitting.hpp"
#include "tailmix/sample_stats.hpp"

using namespace tailmix;

TEST_CASE("gpd mle recovers simulated parameters") {
    GpdParams truth{0.0, 600.0, 0.2};
    const Eigen::ArrayXd excesses = sample(truth, 100000, 1234);
    const GpdParams fit = fit_gpd_mle(excesses);
    CHECK(fit.scale == doctest::Approx(600.0).epsilon(0.03));
    CHECK(std::abs(fit.shape - 0.2) < 0.03);

    // MLE dominance: the fitted likelihood is at least the truth's.
    CHECK(gpd_excess_log_lik(excesses, fit.scale, fit.shape) >=
          gpd_excess_log_lik(excesses, truth.scale, truth.shape) - 1e-6);
}

TEST_CASE("gpd mle on exponential data finds a near-zero shape") {
    GpdParams truth{0.0, 2.5, 0.0};
    const Eigen::ArrayXd excesses = sample(truth, 100000, 777);
    const GpdParams fit = fit_gpd_mle(excesses);
    CHECK(std::abs(fit.shape) < 0.05);
    // Never reported below the exponential submodel.
    CHECK(gpd_excess_log_lik(excesses, fit.scale, fit.shape) >=
          gpd_excess_log_lik(excesses, excesses.mean(), 0.0) - 1e-6);
}

TEST_CASE("gpd mle rejects degenerate input") {
    CHECK_THROWS_AS(fit_gpd_mle(Eigen::ArrayXd::Constant(100, 3.0)), FitError);
    CHECK_THROWS_AS(fit_gpd_mle(Eigen::ArrayXd::Constant(10, 1.0)), FitError);  // too few
}

TEST_CASE("lognormal naive fit matches the closed form and shows truncation bias") {
    LognormalParams truth{5.0, 1.0};
    const Eigen::ArrayXd data = sample(truth, 100000, 55);

    const LognormalParams naive = fit_lognormal_naive(data);
    const Eigen::ArrayXd logs = data.log();
    CHECK(naive.mu == doctest::Approx(logs.mean()).epsilon(1e-12));
    const double mle_sd = std::sqrt(logs.square().sum() / data.size() -
                                    logs.mean() * logs.mean());
    CHECK(naive.sigma_log == doctest::Approx(mle_sd).epsilon(1e-12));

    // Truncate at the 95th percentile: the naive location drops below 5.
    const double cut = lognormal_quantile(0.95, truth);
    std::vector<double> below;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        if (data[i] <= cut) below.push_back(data[i]);
    }
    Eigen::Map<const Eigen::ArrayXd> truncated(below.data(), static_cast<Eigen::Index>(below.size()));
    const LognormalParams biased = fit_lognormal_naive(truncated);
    CHECK(biased.mu < 5.0 - 0.05);

    // The right-truncated MLE undoes the bias.
    const LognormalParams corrected = fit_lognormal_truncated(truncated, cut);
    CHECK(corrected.mu == doctest::Approx(5.0).epsilon(0.004));  // within +-0.02
    CHECK(corrected.sigma_log == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("lognormal truncated fit with infinite cut equals the naive fit") {
    const Eigen::ArrayXd data = sample(LognormalParams{2.0, 0.5}, 5000, 11);
    const LognormalParams a = fit_lognormal_naive(data);
    const LognormalParams b =
        fit_lognormal_truncated(data, std::numeric_limits<double>::infinity());
    CHECK(a.mu == doctest::Approx(b.mu).epsilon(1e-12));
    CHECK(a.sigma_log == doctest::Approx(b.sigma_log).epsilon(1e-12));
}

TEST_CASE("lognormal fit rejects constant data") {
    CHECK_THROWS_AS(fit_lognormal_naive(Eigen::ArrayXd::Constant(100, 7.0)), FitError);
    CHECK_THROWS_AS(fit_lognormal_truncated(Eigen::ArrayXd::Constant(100, 7.0), 10.0), FitError);
}

TEST_CASE("gev mle recovers gumbel and shaped data") {
    GevParams gumbel{3.0, 2.0, 0.0};
    const Eigen::ArrayXd g = sample(gumbel, 100000, 31);
    const GevParams fit_g = fit_gev_mle(g);
    CHECK(std::abs(fit_g.shape) < 0.05);
    CHECK(fit_g.location == doctest::Approx(3.0).epsilon(0.02));
    CHECK(fit_g.scale == doctest::Approx(2.0).epsilon(0.02));

    GevParams shaped{0.0, 1.0, 0.25};
    const Eigen::ArrayXd s = sample(shaped, 100000, 32);
    const GevParams fit_s = fit_gev_mle(s);
    CHECK(std::abs(fit_s.shape - 0.25) < 0.03);
    CHECK(gev_log_lik(s, fit_s) >= gev_log_lik(s, shaped) - 1e-6);
}

TEST_CASE("gev fit is location equivariant") {
    const Eigen::ArrayXd data = sample(GevParams{1.0, 1.5, 0.1}, 20000, 8);
    const GevParams base = fit_gev_mle(data);
    const GevParams shifted = fit_gev_mle(data + 100.0);
    CHECK(shifted.location == doctest::Approx(base.location + 100.0).epsilon(1e-4));
    CHECK(shifted.scale == doctest::Approx(base.scale).epsilon(1e-4));
    CHECK(shifted.shape == doctest::Approx(base.shape).epsilon(1e-3));
}

TEST_CASE("gev fit rejects degenerate input") {
    CHECK_THROWS_AS(fit_gev_mle(Eigen::ArrayXd::Constant(50, 1.0)), FitError);
}
