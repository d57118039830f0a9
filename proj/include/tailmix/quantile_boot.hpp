#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "tailmix/distributions.hpp"
#include "tailmix/loss_sample.hpp"

namespace tailmix {

/// Ascending probabilities in (0,1) at which quantiles are tracked.
struct QuantileGrid {
    Eigen::ArrayXd probs;

    explicit QuantileGrid(Eigen::ArrayXd p);

    /// Q equally spaced probabilities i/(Q+1), i = 1..Q.
    static QuantileGrid equally_spaced(int q_count);

    /// Q probabilities 1 - (1 - i/(Q+1))^power. power = 1 is the equally
    /// spaced grid; larger powers shift grid mass into the upper tail, where
    /// candidate tail models actually differ. power 1.5 puts ~13 of 100
    /// points above the 95th percentile instead of 5.
    static QuantileGrid tail_weighted(int q_count, double power);

    Eigen::Index size() const { return probs.size(); }
};

/// Draws `bootstrap_count` with-replacement resamples of the data (each of
/// the original size) and returns the B x Q matrix of their grid quantiles,
/// computed with the project-wide median-unbiased interpolation rule.
/// Row b depends only on (seed, b), so results are schedule-independent.
Eigen::MatrixXd bootstrap_quantiles(const LossSample& data, const QuantileGrid& grid,
                                    int bootstrap_count, std::uint64_t seed);

/// With-replacement resample indices for iteration b; shared with the
/// model-refit path so observed and refitted quantiles pair up.
std::vector<Eigen::Index> bootstrap_indices(Eigen::Index n, std::uint64_t seed, int iteration);

struct QuantileMoments {
    Eigen::ArrayXd sigma;              // per-quantile sd, B-1 denominator
    Eigen::ArrayXd gamma;              // per-quantile skewness, 1/B third moment
    std::vector<bool> zero_variance;   // gamma forced to 0 where flagged
};

/// Column-wise sd and skewness of a bootstrap quantile matrix.
QuantileMoments quantile_moments(const Eigen::MatrixXd& matrix);

/// Method-of-moments skew-normal recovery: finds the skew-normal whose mean,
/// sd and skewness are (center, sigma, gamma). |gamma| is clamped to 0.99 of
/// the family's attainable maximum before inversion, so any input yields
/// finite parameters.
SkewNormalParams skew_normal_from_moments(double center, double sigma, double gamma);

/// Per-quantile skew-normal uncertainty model built from a bootstrap.
struct QuantileErrorModel {
    Eigen::ArrayXd probs;
    Eigen::ArrayXd observed;   // data quantile y_q
    Eigen::ArrayXd sigma;
    Eigen::ArrayXd gamma;
    std::vector<SkewNormalParams> sn;
    int bootstrap_count = 0;

    Eigen::Index size() const { return probs.size(); }
};

QuantileErrorModel build_quantile_error_model(const LossSample& data, const QuantileGrid& grid,
                                              int bootstrap_count, std::uint64_t seed);

/// CSV rows: prob,y_q,sigma_q,gamma_q,alpha_q,omega_q,xi_q.
void write_csv(std::ostream& out, const QuantileErrorModel& qem);

}  // namespace tailmix
