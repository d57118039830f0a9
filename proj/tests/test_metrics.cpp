#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tailmix/distributions.hpp"
#include "tailmix/errors.hpp"
#include "tailmix/metrics.hpp"
#include "tailmix/mixture.hpp"
#include "tailmix/sample_stats.hpp"
#include "tailmix/special.hpp"

using namespace tailmix;

TEST_CASE("hellinger axioms and closed forms") {
    Eigen::ArrayXd edges = linear_edges(0.0, 4.0, 4);
    Eigen::ArrayXd p(4), q(4);
    p << 0.25, 0.25, 0.25, 0.25;

    const auto same = BinnedDensityPair::from_masses(edges, p, p);
    CHECK(hellinger_sq(same) < 1e-6);
    CHECK(kl_divergence(same) < 1e-6);

    q << 0.0, 0.0, 0.5, 0.5;
    Eigen::ArrayXd disjoint(4);
    disjoint << 0.5, 0.5, 0.0, 0.0;
    const auto apart = BinnedDensityPair::from_masses(edges, disjoint, q);
    CHECK(hellinger_sq(apart) == doctest::Approx(1.0).epsilon(1e-4));

    // Symmetry of the Hellinger distance.
    Eigen::ArrayXd r(4);
    r << 0.1, 0.2, 0.3, 0.4;
    const auto ab = BinnedDensityPair::from_masses(edges, p, r);
    const auto ba = BinnedDensityPair::from_masses(edges, r, p);
    CHECK(hellinger_sq(ab) == doctest::Approx(hellinger_sq(ba)).epsilon(1e-9));
    CHECK(hellinger_sq(ab) >= 0.0);
    CHECK(hellinger_sq(ab) <= 1.0);

    // KL asymmetry on a skewed pair.
    CHECK(kl_divergence(ab) != doctest::Approx(kl_divergence(ba)).epsilon(1e-6));
    CHECK(kl_divergence(ab) > 0.0);
}

TEST_CASE("gaussian hellinger matches 1 - exp(-1/8)") {
    // N(0,1) vs N(1,1) on fine linear bins.
    const Eigen::ArrayXd edges = linear_edges(-9.0, 10.0, 4000);
    auto cdf0 = [](double x) { return norm_cdf(x); };
    auto cdf1 = [](double x) { return norm_cdf(x - 1.0); };
    const auto pair = BinnedDensityPair::from_masses(edges, model_bin_mass(cdf0, edges),
                                                     model_bin_mass(cdf1, edges));
    const double expected = 1.0 - std::exp(-1.0 / 8.0);
    CHECK(hellinger_sq(pair) == doctest::Approx(expected).epsilon(1e-3 / expected));
    CHECK(std::abs(hellinger_sq(pair) - expected) < 1e-3);
}

TEST_CASE("lognormal kl matches the closed form") {
    LognormalParams a{5.0, 1.0};
    LognormalParams b{5.1, 1.0};
    const Eigen::ArrayXd edges =
        log_spaced_edges(lognormal_quantile(1e-6, a), lognormal_quantile(1.0 - 1e-7, b), 4000);
    const auto pair = BinnedDensityPair::from_masses(
        edges, model_bin_mass([&](double x) { return lognormal_cdf(x, a); }, edges),
        model_bin_mass([&](double x) { return lognormal_cdf(x, b); }, edges));
    // KL = (mu1 - mu2)^2 / (2 sigma^2) = 0.005.
    CHECK(kl_divergence(pair) == doctest::Approx(0.005).epsilon(0.10));
}

TEST_CASE("metrics are stable under bin refinement") {
    LognormalParams a{5.0, 1.0};
    LognormalParams b{5.2, 1.1};
    auto value_at = [&](int bins) {
        const Eigen::ArrayXd edges = log_spaced_edges(1.0, 4000.0, bins);
        const auto pair = BinnedDensityPair::from_masses(
            edges, model_bin_mass([&](double x) { return lognormal_cdf(x, a); }, edges),
            model_bin_mass([&](double x) { return lognormal_cdf(x, b); }, edges));
        return std::pair{hellinger_sq(pair), kl_divergence(pair)};
    };
    const auto [h200, kl200] = value_at(200);
    const auto [h400, kl400] = value_at(400);
    CHECK(std::abs(h400 - h200) / h200 < 0.05);
    CHECK(std::abs(kl400 - kl200) / kl200 < 0.05);
}

TEST_CASE("bulk tail report is near zero when the model is the empirical cdf") {
    MixtureModel truth;
    truth.threshold = 700.0;
    truth.phi = 0.05;
    truth.bulk = LognormalParams{5.0, 1.0};
    truth.tail = GpdParams{700.0, 600.0, 0.2};
    const Eigen::ArrayXd test = sample(truth, 30000, 1009);
    Eigen::ArrayXd sorted = sorted_copy(test);

    auto ecdf = [&](double x) {
        const auto* begin = sorted.data();
        return static_cast<double>(std::upper_bound(begin, begin + sorted.size(), x) - begin) /
               static_cast<double>(sorted.size());
    };
    const auto rows = bulk_tail_report(test, ecdf, "self", 700.0, 100);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        CHECK(row.hellinger < 1e-4);
        CHECK(row.kl < 1e-4);
    }
    CHECK(rows[0].region == "bulk");
    CHECK(rows[1].region == "tail");
    CHECK(rows[0].n_obs + rows[1].n_obs == test.size());

    // Empty side errors out.
    CHECK_THROWS_AS(bulk_tail_report(test, ecdf, "self", sorted.maxCoeff() + 1.0, 100), FitError);
}

TEST_CASE("mrl curve is flat for exponential data and sloped for gpd data") {
    // Exponential: memorylessness makes e(v) constant at sigma.
    const Eigen::ArrayXd expo = sample(GpdParams{0.0, 3.0, 0.0}, 400000, 3131);
    Eigen::ArrayXd grid(8);
    grid << 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0;
    const MrlCurve flat = mrl_curve(expo, grid);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        CHECK(flat.mean_excess[i] == doctest::Approx(3.0).epsilon(0.03));
    }

    // GPD(xi = 0.2): e(v) = (sigma + xi v)/(1 - xi), slope xi/(1-xi) = 0.25.
    const Eigen::ArrayXd heavy = sample(GpdParams{0.0, 600.0, 0.2}, 400000, 3132);
    Eigen::ArrayXd vgrid(11);
    for (int i = 0; i <= 10; ++i) vgrid[i] = 100.0 * i;
    const MrlCurve sloped = mrl_curve(heavy, vgrid);
    // Least-squares slope over the grid.
    const double vbar = vgrid.mean();
    const double ebar = sloped.mean_excess.mean();
    const double slope = ((vgrid - vbar) * (sloped.mean_excess - ebar)).sum() /
                         (vgrid - vbar).square().sum();
    CHECK(slope == doctest::Approx(0.25).epsilon(0.08));

    // Counts never increase; a point past the maximum is flagged empty.
    for (Eigen::Index i = 1; i < sloped.counts.size(); ++i) {
        CHECK(sloped.counts[i] <= sloped.counts[i - 1]);
    }
    Eigen::ArrayXd beyond(1);
    beyond << heavy.maxCoeff() + 1.0;
    const MrlCurve empty = mrl_curve(heavy, beyond);
    CHECK(empty.counts[0] == 0);
    CHECK(std::isnan(empty.mean_excess[0]));
}

TEST_CASE("pooled mrl lies between the group curves") {
    const Eigen::ArrayXd g1 = sample(LognormalParams{5.0, 1.0}, 20000, 41);
    const Eigen::ArrayXd g2 = sample(LognormalParams{6.0, 0.5}, 20000, 42);
    Eigen::ArrayXd pooled(g1.size() + g2.size());
    pooled << g1, g2;

    Eigen::ArrayXd grid(6);
    grid << 50.0, 150.0, 300.0, 500.0, 800.0, 1200.0;
    const MrlCurve c1 = mrl_curve(g1, grid);
    const MrlCurve c2 = mrl_curve(g2, grid);
    const MrlCurve cp = mrl_curve(pooled, grid);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        if (c1.counts[i] == 0 || c2.counts[i] == 0) continue;
        const double lo = std::min(c1.mean_excess[i], c2.mean_excess[i]);
        const double hi = std::max(c1.mean_excess[i], c2.mean_excess[i]);
        CHECK(cp.mean_excess[i] >= lo - 1e-9);
        CHECK(cp.mean_excess[i] <= hi + 1e-9);
    }
}

TEST_CASE("forward stop rule matches hand evaluations") {
    // All p = 0.04 at alpha = 0.05: -log(0.96) ~ 0.0408 <= alpha for every k.
    std::vector<double> p(7, 0.04);
    CHECK(-std::log(0.96) == doctest::Approx(0.0408).epsilon(1e-3));
    auto k = forward_stop_index(p, 0.05);
    REQUIRE(k.has_value());
    CHECK(*k == 7);

    // A huge first term sinks every prefix.
    std::vector<double> bad{0.999999, 0.04, 0.04};
    CHECK_FALSE(forward_stop_index(bad, 0.05).has_value());

    // Later failure truncates the run.
    std::vector<double> mixed{0.01, 0.02, 0.9, 0.01};
    k = forward_stop_index(mixed, 0.05);
    REQUIRE(k.has_value());
    CHECK(*k == 2);
}

TEST_CASE("anderson darling statistic is small for uniform transforms") {
    Eigen::ArrayXd z(99);
    for (int i = 0; i < 99; ++i) z[i] = (i + 1.0) / 100.0;  // near-perfect uniforms
    const double a2 = anderson_darling_statistic(z);
    CHECK(a2 < 1.0);

    Eigen::ArrayXd clumped(99);
    for (int i = 0; i < 99; ++i) clumped[i] = 0.4 + 0.2 * (i + 1.0) / 100.0;
    CHECK(anderson_darling_statistic(clumped) > a2 + 1.0);
}

TEST_CASE("forward stop runs the grid and drops sparse points") {
    MixtureModel truth;
    truth.threshold = 700.0;
    truth.phi = 0.05;
    truth.bulk = LognormalParams{5.0, 1.0};
    truth.tail = GpdParams{700.0, 600.0, 0.2};
    const Eigen::ArrayXd data = sample(truth, 20000, 515);

    Eigen::ArrayXd grid(5);
    grid << 300.0, 400.0, 500.0, 600.0, 650.0;
    const auto result = forward_stop(data, grid, 0.05, 60, 99);
    for (const auto& point : result.points) {
        CHECK(point.used);
        CHECK(point.p_value > 0.0);
        CHECK(point.p_value < 1.0);
    }
    // Sub-threshold fits are rejected wholesale, so the rule runs to the end.
    REQUIRE(result.threshold.has_value());
    CHECK(*result.threshold == 650.0);

    // A grid point beyond the data is dropped, not fatal.
    Eigen::ArrayXd sparse_grid(2);
    sparse_grid << 500.0, data.maxCoeff() - 1.0;
    const auto sparse = forward_stop(data, sparse_grid, 0.05, 20, 99);
    CHECK(sparse.points[0].used);
    CHECK_FALSE(sparse.points[1].used);

    // Deterministic under the seed.
    const auto again = forward_stop(data, grid, 0.05, 60, 99);
    CHECK(again.points[2].p_value == result.points[2].p_value);
}
