#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tailmix {

/// Mass floor applied to candidate bins before KL so sparse tail bins cannot
/// produce infinities.
inline constexpr double kMassFloor = 1e-10;

/// Two probability mass vectors on shared bin edges. The reference keeps its
/// exact (possibly zero) masses; the candidate is floored at kMassFloor and
/// renormalized at construction.
struct BinnedDensityPair {
    Eigen::ArrayXd edges;      // K+1 ascending
    Eigen::ArrayXd reference;  // sums to 1
    Eigen::ArrayXd candidate;  // sums to 1 after smoothing

    static BinnedDensityPair from_masses(Eigen::ArrayXd edges, Eigen::ArrayXd reference,
                                         Eigen::ArrayXd candidate);
};

Eigen::ArrayXd log_spaced_edges(double lo, double hi, int bins);
Eigen::ArrayXd linear_edges(double lo, double hi, int bins);

/// Bin masses of a sample: (edge_i, edge_{i+1}] counts over n, with the first
/// bin closed below. Values outside the edge range fall into the end bins.
Eigen::ArrayXd empirical_bin_mass(const Eigen::ArrayXd& values, const Eigen::ArrayXd& edges);

/// Model mass per bin from CDF differences, renormalized to the edge range
/// (a conditional-on-range comparison against the empirical masses).
Eigen::ArrayXd model_bin_mass(const std::function<double(double)>& cdf, const Eigen::ArrayXd& edges);

/// Squared Hellinger distance 1 - sum sqrt(p q); 0 for equal masses, 1 for
/// disjoint supports.
double hellinger_sq(const BinnedDensityPair& pair);

/// sum p log(p/q); zero-mass reference bins contribute 0.
double kl_divergence(const BinnedDensityPair& pair);

struct EvalRow {
    std::string method;
    std::string region;  // "bulk" or "tail"
    double hellinger = 0.0;
    double kl = 0.0;
    Eigen::Index n_obs = 0;
};

/// Hellinger/KL of a model CDF against the empirical test masses, computed
/// separately below and above split_u on log-spaced bins (default 200 per
/// side). Throws if either side of the split is empty.
std::vector<EvalRow> bulk_tail_report(const Eigen::ArrayXd& test,
                                      const std::function<double(double)>& model_cdf,
                                      const std::string& method, double split_u, int bins = 200);

/// Mean excess e(v) = mean(x - v | x > v) over a threshold grid. Grid points
/// at or above the sample maximum get count 0 and NaN mean excess.
struct MrlCurve {
    Eigen::ArrayXd thresholds;
    Eigen::ArrayXd mean_excess;
    Eigen::ArrayX<Eigen::Index> counts;
};

MrlCurve mrl_curve(const Eigen::ArrayXd& data, const Eigen::ArrayXd& grid);

/// Anderson-Darling statistic of ascending probability transforms.
double anderson_darling_statistic(const Eigen::ArrayXd& sorted_uniforms);

/// The stopping rule alone: largest k (1-based) whose running mean of
/// -log(1 - p_i) stays at or below alpha.
std::optional<std::size_t> forward_stop_index(const std::vector<double>& p_values, double alpha);

struct ForwardStopPoint {
    double threshold = 0.0;
    Eigen::Index n_excess = 0;
    double statistic = 0.0;
    double p_value = 0.0;
    bool used = false;  // false when dropped (too few excesses or failed fit)
};

struct ForwardStopResult {
    std::vector<ForwardStopPoint> points;
    std::optional<double> threshold;  // grid value at the stop index
};

/// Fits a GPD at every grid threshold, computes Anderson-Darling p-values by
/// parametric bootstrap (n_boot refits per point), and applies the stopping
/// rule over the retained points in ascending order.
ForwardStopResult forward_stop(const Eigen::ArrayXd& data, const Eigen::ArrayXd& grid, double alpha,
                               int n_boot, std::uint64_t seed);

}  // namespace tailmix
