#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support/quadrature.hpp"
#include "tailmix/errors.hpp"
#include "tailmix/mixture.hpp"
#include "tailmix/model_io.hpp"

using namespace tailmix;

namespace {

MixtureModel paper_truth() {
    MixtureModel m;
    m.threshold = 700.0;
    m.phi = 0.05;
    m.bulk = LognormalParams{5.0, 1.0};
    m.tail = GpdParams{700.0, 600.0, 0.2};
    return m;
}

}  // namespace

TEST_CASE("fit recovers the simulated design at the true threshold") {
    const MixtureModel truth = paper_truth();
    LossSample data(sample(truth, 100000, 321));

    const MixtureModel fit = fit_mixture(data, 700.0, BulkFit::truncated);
    CHECK(fit.phi == doctest::Approx(0.05).epsilon(0.06));
    CHECK(std::abs(fit.phi - 0.05) < 0.003);
    CHECK(fit.bulk.mu == doctest::Approx(5.0).epsilon(0.01));
    CHECK(fit.tail.scale == doctest::Approx(600.0).epsilon(0.05));
    CHECK(std::abs(fit.tail.shape - 0.2) < 0.05);

    // phi is the exact empirical exceedance count.
    const double exceed = static_cast<double>((data.values > 700.0).count());
    CHECK(fit.phi == exceed / static_cast<double>(data.size()));
}

TEST_CASE("fit fails above the sample maximum and names the threshold") {
    LossSample data(sample(paper_truth(), 1000, 5));
    const double too_high = data.values.maxCoeff() + 1.0;
    CHECK_THROWS_WITH_AS(fit_mixture(data, too_high), doctest::Contains("fit_mixture"), FitError);
    try {
        fit_mixture(data, too_high);
    } catch (const FitError& e) {
        CHECK(std::string(e.what()).find(std::to_string(too_high).substr(0, 6)) != std::string::npos);
    }
}

TEST_CASE("cdf and quantile agree at the splice point") {
    const MixtureModel m = paper_truth();
    CHECK(mixture_cdf(700.0, m) == 1.0 - m.phi);  // exact
    CHECK(mixture_quantile(1.0 - m.phi, m) == 700.0);
    CHECK(mixture_cdf(0.0, m) == 0.0);

    for (double q = 0.001; q < 0.9995; q += 0.003) {
        const double x = mixture_quantile(q, m);
        CHECK(mixture_cdf(x, m) == doctest::Approx(q).epsilon(1e-9));
    }
    // Monotone cdf across the splice.
    double prev = 0.0;
    for (double x = 1.0; x < 5000.0; x *= 1.07) {
        const double c = mixture_cdf(x, m);
        CHECK(c >= prev);
        prev = c;
    }
}

TEST_CASE("fitted density integrates to one") {
    LossSample data(sample(paper_truth(), 20000, 77));
    const MixtureModel fit = fit_mixture(data, 700.0);

    const double bulk_mass = testsupport::integrate(
        [&](double x) { return mixture_pdf(x, fit); }, 1e-8, 700.0, 1e-11);
    const double tail_cap = mixture_quantile(1.0 - 1e-9, fit);
    const double tail_mass = testsupport::integrate(
        [&](double x) { return mixture_pdf(x, fit); }, 700.0, tail_cap, 1e-11);
    CHECK(bulk_mass == doctest::Approx(1.0 - fit.phi).epsilon(1e-6));
    CHECK(tail_mass == doctest::Approx(fit.phi).epsilon(1e-6));
    CHECK(bulk_mass + tail_mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("model cdf tracks the empirical cdf of its own samples") {
    const MixtureModel m = paper_truth();
    Eigen::ArrayXd draws = sample(m, 1000000, 2025);
    std::sort(draws.data(), draws.data() + draws.size());
    double sup = 0.0;
    for (Eigen::Index i = 0; i < draws.size(); i += 101) {
        const double emp = (static_cast<double>(i) + 1.0) / static_cast<double>(draws.size());
        sup = std::max(sup, std::abs(emp - mixture_cdf(draws[i], m)));
    }
    CHECK(sup < 0.002);
}

TEST_CASE("grouped fit matches per-group fits and validates labels") {
    MixtureModel t1 = paper_truth();
    MixtureModel t2;
    t2.threshold = 1000.0;
    t2.phi = 0.05;
    t2.bulk = LognormalParams{6.0, 0.5};
    t2.tail = GpdParams{1000.0, 500.0, 0.1};

    const Eigen::Index n = 100000;
    Eigen::ArrayXd values(2 * n);
    values << sample(t1, n, 1), sample(t2, n, 2);
    std::vector<std::string> labels(2 * static_cast<std::size_t>(n));
    std::fill(labels.begin(), labels.begin() + n, "t1");
    std::fill(labels.begin() + n, labels.end(), "t2");
    LossSample data(values, labels);

    const GroupedMixture grouped =
        fit_grouped(data, std::map<std::string, double>{{"t1", 700.0}, {"t2", 1000.0}});
    CHECK(std::abs(grouped.at("t1").tail.shape - 0.2) < 0.05);
    CHECK(std::abs(grouped.at("t2").tail.shape - 0.1) < 0.05);

    // Single group reduces to fit_mixture.
    LossSample t1_only(sample(t1, 5000, 9), std::vector<std::string>(5000, "a"));
    const auto single = fit_grouped(t1_only, std::map<std::string, double>{{"a", 700.0}});
    const auto direct = fit_mixture(LossSample(t1_only.values), 700.0);
    CHECK(single.at("a").bulk.mu == direct.bulk.mu);
    CHECK(single.at("a").tail.shape == direct.tail.shape);

    // Missing group in the threshold map.
    CHECK_THROWS_WITH_AS(fit_grouped(data, std::map<std::string, double>{{"t1", 700.0}}),
                         doctest::Contains("t2"), FitError);
}

TEST_CASE("model json round-trips exactly") {
    LossSample data(sample(paper_truth(), 20000, 4));
    const MixtureModel fit = fit_mixture(data, 700.0);
    const MixtureModel back = mixture_from_json(to_json(fit));
    CHECK(back.threshold == fit.threshold);
    CHECK(back.phi == fit.phi);
    CHECK(back.bulk.mu == fit.bulk.mu);
    CHECK(back.bulk.sigma_log == fit.bulk.sigma_log);
    CHECK(back.tail.scale == fit.tail.scale);
    CHECK(back.tail.shape == fit.tail.shape);

    GroupedMixture grouped{{"a", fit}, {"b", fit}};
    const GroupedMixture gback = grouped_from_json(to_json(grouped));
    CHECK(gback.size() == 2);
    CHECK(gback.at("b").bulk.mu == fit.bulk.mu);
}
