#include "tailmix/quantile_boot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "tailmix/errors.hpp"
#include "tailmix/parallel.hpp"
#include "tailmix/rng.hpp"
#include "tailmix/sample_stats.hpp"

namespace tailmix {

QuantileGrid::QuantileGrid(Eigen::ArrayXd p) : probs(std::move(p)) {
    if (probs.size() == 0) throw std::invalid_argument("QuantileGrid: empty grid");
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        if (!(probs[i] > 0.0 && probs[i] < 1.0)) {
            throw std::invalid_argument("QuantileGrid: probabilities must lie in (0,1)");
        }
        if (i > 0 && !(probs[i] > probs[i - 1])) {
            throw std::invalid_argument("QuantileGrid: probabilities must be strictly increasing");
        }
    }
}

QuantileGrid QuantileGrid::equally_spaced(int q_count) {
    if (q_count < 1) throw std::invalid_argument("QuantileGrid: need at least one quantile");
    Eigen::ArrayXd p(q_count);
    for (int i = 1; i <= q_count; ++i) p[i - 1] = static_cast<double>(i) / (q_count + 1.0);
    return QuantileGrid(std::move(p));
}

QuantileGrid QuantileGrid::tail_weighted(int q_count, double power) {
    if (q_count < 1) throw std::invalid_argument("QuantileGrid: need at least one quantile");
    if (!(power > 0.0)) throw std::invalid_argument("QuantileGrid: power must be positive");
    Eigen::ArrayXd p(q_count);
    for (int i = 1; i <= q_count; ++i) {
        p[i - 1] = 1.0 - std::pow(1.0 - static_cast<double>(i) / (q_count + 1.0), power);
    }
    return QuantileGrid(std::move(p));
}

std::vector<Eigen::Index> bootstrap_indices(Eigen::Index n, std::uint64_t seed, int iteration) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(iteration));
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (auto& i : idx) i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    return idx;
}

Eigen::MatrixXd bootstrap_quantiles(const LossSample& data, const QuantileGrid& grid,
                                    int bootstrap_count, std::uint64_t seed) {
    const Eigen::Index n = data.size();
    if (n == 0) throw std::invalid_argument("bootstrap_quantiles: empty sample");
    if (bootstrap_count < 2) throw std::invalid_argument("bootstrap_quantiles: need B >= 2");

    Eigen::MatrixXd out(bootstrap_count, grid.size());
    parallel_for(static_cast<std::size_t>(bootstrap_count), [&](std::size_t b) {
        const auto idx = bootstrap_indices(n, seed, static_cast<int>(b));
        Eigen::ArrayXd resample(n);
        for (Eigen::Index i = 0; i < n; ++i) resample[i] = data.values[idx[static_cast<std::size_t>(i)]];
        std::sort(resample.data(), resample.data() + n);
        for (Eigen::Index q = 0; q < grid.size(); ++q) {
            out(static_cast<Eigen::Index>(b), q) = sorted_quantile(resample, grid.probs[q]);
        }
    });
    return out;
}

QuantileMoments quantile_moments(const Eigen::MatrixXd& matrix) {
    const Eigen::Index b = matrix.rows();
    const Eigen::Index q = matrix.cols();
    if (b < 3) throw std::invalid_argument("quantile_moments: need B >= 3");

    QuantileMoments out;
    out.sigma.resize(q);
    out.gamma.resize(q);
    out.zero_variance.assign(static_cast<std::size_t>(q), false);
    for (Eigen::Index j = 0; j < q; ++j) {
        const Eigen::ArrayXd col = matrix.col(j).array();
        const double m = col.mean();
        const Eigen::ArrayXd dev = col - m;
        const double var = dev.square().sum() / static_cast<double>(b - 1);
        if (var <= 0.0) {
            out.sigma[j] = 0.0;
            out.gamma[j] = 0.0;
            out.zero_variance[static_cast<std::size_t>(j)] = true;
            continue;
        }
        const double sd = std::sqrt(var);
        out.sigma[j] = sd;
        out.gamma[j] = dev.cube().sum() / static_cast<double>(b) / (sd * sd * sd);
    }
    return out;
}

SkewNormalParams skew_normal_from_moments(double center, double sigma, double gamma) {
    if (!(sigma > 0.0)) throw std::domain_error("skew_normal_from_moments: sigma must be positive");

    const double limit = 0.99 * skew_normal_max_skewness();
    const double g = std::clamp(gamma, -limit, limit);
    if (g == 0.0) return SkewNormalParams{center, sigma, 0.0};

    const double g23 = std::pow(std::abs(g), 2.0 / 3.0);
    const double c = std::pow((4.0 - M_PI) / 2.0, 2.0 / 3.0);
    const double delta2 = (M_PI / 2.0) * g23 / (g23 + c);
    const double delta = std::copysign(std::sqrt(delta2), g);

    const double alpha = delta / std::sqrt(1.0 - delta2);
    const double omega = sigma / std::sqrt(1.0 - 2.0 * delta2 / M_PI);
    const double location = center - omega * delta * std::sqrt(2.0 / M_PI);
    return SkewNormalParams{location, omega, alpha};
}

QuantileErrorModel build_quantile_error_model(const LossSample& data, const QuantileGrid& grid,
                                              int bootstrap_count, std::uint64_t seed) {
    const Eigen::MatrixXd boot = bootstrap_quantiles(data, grid, bootstrap_count, seed);
    const QuantileMoments moments = quantile_moments(boot);
    const Eigen::ArrayXd sorted = sorted_copy(data.values);

    QuantileErrorModel qem;
    qem.probs = grid.probs;
    qem.sigma = moments.sigma;
    qem.gamma = moments.gamma;
    qem.bootstrap_count = bootstrap_count;
    qem.observed.resize(grid.size());
    qem.sn.reserve(static_cast<std::size_t>(grid.size()));
    for (Eigen::Index q = 0; q < grid.size(); ++q) {
        qem.observed[q] = sorted_quantile(sorted, grid.probs[q]);
        if (moments.zero_variance[static_cast<std::size_t>(q)]) {
            throw FitError("quantile error model: zero bootstrap variance at prob " +
                           std::to_string(grid.probs[q]) + " (degenerate data)");
        }
        qem.sn.push_back(skew_normal_from_moments(qem.observed[q], moments.sigma[q], moments.gamma[q]));
    }
    return qem;
}

void write_csv(std::ostream& out, const QuantileErrorModel& qem) {
    out << "prob,y_q,sigma_q,gamma_q,alpha_q,omega_q,xi_q\n";
    char buf[256];
    for (Eigen::Index q = 0; q < qem.size(); ++q) {
        const auto& sn = qem.sn[static_cast<std::size_t>(q)];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      qem.probs[q], qem.observed[q], qem.sigma[q], qem.gamma[q], sn.shape,
                      sn.scale, sn.location);
        out << buf;
    }
}

}  // namespace tailmix
