#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tailmix/bma.hpp"
#include "tailmix/loss_sample.hpp"
#include "tailmix/metrics.hpp"
#include "tailmix/quantile_boot.hpp"

namespace tailmix {

struct SelectOptions {
    std::vector<double> thresholds;  // absolute candidate thresholds, ascending
    int bootstrap_count = 200;       // B
    int quantile_count = 100;        // Q
    double grid_power = 1.5;         // quantile grid tail weighting
    int error_draws = 500;           // S (heterogeneous only)
    std::array<double, 3> split = {0.5, 0.0, 0.5};  // train/calib/test; calib 0 reuses train
    std::uint64_t seed = 0;
    PredictionMode prediction = PredictionMode::refit;
    WeightAggregation aggregation = WeightAggregation::per_quantile;
    BulkFit bulk_fit = BulkFit::truncated;
    int bins = 200;
    Eigen::Index min_group = 100;
};

struct DataSplit {
    LossSample train;
    LossSample calib;
    LossSample test;
    bool calib_is_train = false;
};

/// Seeded shuffle split; a zero calibration share reuses the training part as
/// the calibration set.
DataSplit split_sample(const LossSample& data, const std::array<double, 3>& fractions,
                       std::uint64_t seed);

struct HomSelectResult {
    DataSplit split;
    CandidateSet candidates;
    QuantileErrorModel qem;
    WeightReport report;              // u_star filled
    std::vector<EvalRow> eval_rows;   // test metrics at u_star (empty when none identified)
    MrlCurve mrl;                     // of the full input sample
    int refit_fallbacks = 0;
};

/// Homogeneous selection: split, fit candidates on train, bootstrap the
/// calibration quantiles, compute w/w*, identify u*, and score the two
/// combinations plus the identified-threshold model on the test split.
HomSelectResult run_hom_select(const LossSample& data, const SelectOptions& options);

struct HetSelectResult {
    DataSplit split;
    GroupedCandidateSet candidates;
    HetResult het;  // per-group reports with u_star filled
    std::map<std::string, std::vector<EvalRow>> eval_rows;
    MrlCurve mrl;
};

/// Grouped selection over the sample's labels.
HetSelectResult run_het_select(const LossSample& data, const SelectOptions& options);

/// Default MRL grid: 200 thresholds from the sample minimum to its 99.5th
/// percentile.
Eigen::ArrayXd default_mrl_grid(const Eigen::ArrayXd& values, int points = 200);

/// Resolves a quantile range specification lo:hi:step into absolute
/// thresholds of the sample.
std::vector<double> thresholds_from_quantiles(const Eigen::ArrayXd& values, double lo, double hi,
                                              double step);

}  // namespace tailmix
