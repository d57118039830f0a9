#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "tailmix/distributions.hpp"
#include "tailmix/quantile_boot.hpp"
#include "tailmix/rng.hpp"
#include "tailmix/sample_stats.hpp"

using namespace tailmix;

TEST_CASE("sorted_quantile follows the median-unbiased rule") {
    const Eigen::ArrayXd x = (Eigen::ArrayXd(5) << 1.0, 2.0, 3.0, 4.0, 5.0).finished();
    // h = (5 + 1/3) * 0.5 + 1/3 = 3 exactly.
    CHECK(sorted_quantile(x, 0.5) == doctest::Approx(3.0));
    CHECK(sorted_quantile(x, 0.0) == 1.0);
    CHECK(sorted_quantile(x, 1.0) == 5.0);
    // Interpolates between order statistics.
    const double q = sorted_quantile(x, 0.75);
    CHECK(q > 3.0);
    CHECK(q < 5.0);
}

TEST_CASE("bootstrap matrix is reproducible and row-wise seed-stable") {
    LossSample data(sample(LognormalParams{2.0, 0.4}, 300, 17));
    const QuantileGrid grid = QuantileGrid::equally_spaced(9);

    const Eigen::MatrixXd a = bootstrap_quantiles(data, grid, 2, 99);
    const Eigen::MatrixXd b = bootstrap_quantiles(data, grid, 2, 99);
    CHECK(a == b);

    // Row b depends only on (seed, b): a longer run starts with the same rows.
    const Eigen::MatrixXd longer = bootstrap_quantiles(data, grid, 5, 99);
    CHECK(longer.topRows(2) == a);

    const Eigen::MatrixXd other = bootstrap_quantiles(data, grid, 2, 100);
    CHECK(a != other);
}

TEST_CASE("constant data bootstraps to the constant") {
    LossSample data(Eigen::ArrayXd::Constant(50, 4.2));
    const auto m = bootstrap_quantiles(data, QuantileGrid::equally_spaced(5), 10, 3);
    CHECK((m.array() == 4.2).all());

    const auto moments = quantile_moments(m);
    CHECK((moments.sigma == 0.0).all());
    CHECK((moments.gamma == 0.0).all());
    CHECK(moments.zero_variance[0]);
}

TEST_CASE("bootstrap sd of the median matches the asymptotic value") {
    // N(0,1) sample via the skew-normal with alpha = 0.
    const Eigen::ArrayXd normals = sample(SkewNormalParams{0.0, 1.0, 0.0}, 10000, 1301);
    LossSample data(normals + 100.0);  // shift positive; sd unaffected

    Eigen::ArrayXd p(1);
    p << 0.5;
    const auto m = bootstrap_quantiles(data, QuantileGrid(p), 400, 7);
    const auto moments = quantile_moments(m);
    const double expected = std::sqrt(M_PI / 2.0) / std::sqrt(10000.0);
    CHECK(moments.sigma[0] == doctest::Approx(expected).epsilon(0.15));
}

TEST_CASE("quantile moments match hand computations") {
    Eigen::MatrixXd m(3, 2);
    m.col(0) << 1.0, 2.0, 3.0;
    m.col(1) << 0.0, 0.0, 3.0;
    const auto moments = quantile_moments(m);

    // {1,2,3}: variance (1+0+1)/2 = 1, symmetric so skewness 0.
    CHECK(moments.sigma[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(moments.gamma[0] == doctest::Approx(0.0));

    // {0,0,3}: mean 1, variance (1+1+4)/2 = 3, skewness (1/3)(-1-1+8)/3^1.5.
    CHECK(moments.sigma[1] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(moments.gamma[1] == doctest::Approx(2.0 / std::pow(3.0, 1.5)).epsilon(1e-12));
}

TEST_CASE("moment inversion reproduces the target moments") {
    // gamma = 0 is the identity case.
    const SkewNormalParams sym = skew_normal_from_moments(10.0, 2.0, 0.0);
    CHECK(sym.location == 10.0);
    CHECK(sym.scale == 2.0);
    CHECK(sym.shape == 0.0);

    for (double g = -0.9; g <= 0.9001; g += 0.06) {
        const SkewNormalParams p = skew_normal_from_moments(5.0, 1.7, g);
        CHECK(skew_normal_mean(p) == doctest::Approx(5.0).epsilon(1e-8));
        CHECK(std::sqrt(skew_normal_variance(p)) == doctest::Approx(1.7).epsilon(1e-8));
        CHECK(skew_normal_skewness(p) == doctest::Approx(g).epsilon(1e-8));
    }
}

TEST_CASE("alpha grows monotonically with gamma") {
    double prev = -std::numeric_limits<double>::infinity();
    for (double g = -0.9; g <= 0.9001; g += 0.045) {
        const SkewNormalParams p = skew_normal_from_moments(0.0, 1.0, g);
        CHECK(p.shape > prev);
        prev = p.shape;
    }
}

TEST_CASE("infeasible skewness is clamped to finite parameters") {
    const SkewNormalParams p = skew_normal_from_moments(0.0, 1.0, 2.0);
    CHECK(std::isfinite(p.shape));
    CHECK(std::isfinite(p.scale));
    CHECK(std::isfinite(p.location));
    CHECK(p.scale > 0.0);
    // Clamped to just below the family maximum.
    CHECK(skew_normal_skewness(p) == doctest::Approx(0.99 * skew_normal_max_skewness()).epsilon(1e-9));
    CHECK(skew_normal_max_skewness() == doctest::Approx(0.9952717).epsilon(1e-6));
}

TEST_CASE("error model builds and serializes") {
    LossSample data(sample(LognormalParams{3.0, 0.8}, 2000, 23));
    const auto qem = build_quantile_error_model(data, QuantileGrid::equally_spaced(20), 100, 5);
    CHECK(qem.size() == 20);
    CHECK(qem.bootstrap_count == 100);
    for (const auto& sn : qem.sn) CHECK(sn.scale > 0.0);
    // Observed quantiles ascend with the grid.
    for (Eigen::Index q = 1; q < qem.size(); ++q) CHECK(qem.observed[q] >= qem.observed[q - 1]);

    std::ostringstream os;
    write_csv(os, qem);
    CHECK(os.str().find("prob,y_q,sigma_q") == 0);
}
