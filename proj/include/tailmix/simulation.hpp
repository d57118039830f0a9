#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tailmix/bma.hpp"
#include "tailmix/loss_sample.hpp"
#include "tailmix/mixture.hpp"

namespace tailmix {

/// One claim type: a truncated-lognormal bulk below the tail threshold and a
/// GPD tail occupying tail_fraction of the type's mass.
struct TypeSpec {
    std::string name;
    double weight = 1.0;  // mixing proportion across types
    LognormalParams bulk;
    GpdParams tail;  // tail.location is the type's true threshold
    double tail_fraction = 0.05;
};

struct ScenarioSpec {
    std::string name = "scenario";
    std::vector<TypeSpec> types;
    Eigen::Index n = 10000;
    std::vector<double> thresholds;
    int replications = 200;
    std::uint64_t seed = 1;
    std::array<double, 3> split = {0.49, 0.21, 0.30};  // train / calibration / test
                                                       // (zero calibration share reuses train)
    int bootstrap_count = 200;                         // B
    int quantile_count = 100;                          // Q
    double grid_power = 1.5;                           // quantile grid tail weighting
    int error_draws = 500;                             // S (heterogeneous only)
    PredictionMode prediction = PredictionMode::refit;
    WeightAggregation aggregation = WeightAggregation::per_quantile;
    BulkFit bulk_fit = BulkFit::truncated;
    int bins = 200;
};

void validate(const ScenarioSpec& spec);

/// The exact distribution of one type as a mixture model (useful as a truth
/// reference in tests).
MixtureModel true_mixture(const TypeSpec& type);

struct SimulatedData {
    LossSample train;  // labels = type names
    LossSample calib;
    LossSample test;
    std::vector<std::string> size_class_train;  // small / medium / large, cut on train quantiles
    std::vector<std::string> size_class_calib;
    std::vector<std::string> size_class_test;
    double small_cut = 0.0;  // 20th percentile of train
    double large_cut = 0.0;  // 80th percentile of train
};

/// Draws n observations (type by mixing weight, then truncated bulk with
/// probability 1 - tail_fraction, else GPD tail), splits them
/// train/calibration/test, and attaches 20/60/20 size classes computed from
/// the training split only. Deterministic in the seed.
SimulatedData generate(const ScenarioSpec& spec, std::uint64_t seed);

struct StudyRow {
    int replication = 0;
    std::string group;  // type name, or "all" for the homogeneous study
    std::optional<double> u_star;
    bool boundary_flag = false;  // reversal at the very first threshold
    double split_u = 0.0;        // region split used for the metric columns
    double ref_threshold = 0.0;  // single-threshold reference model
    double bulk_kl_ei = 0.0, bulk_kl_wei = 0.0, bulk_kl_ref = 0.0;
    double tail_kl_ei = 0.0, tail_kl_wei = 0.0, tail_kl_ref = 0.0;
    double bulk_h_ei = 0.0, bulk_h_wei = 0.0, bulk_h_ref = 0.0;
    double tail_h_ei = 0.0, tail_h_wei = 0.0, tail_h_ref = 0.0;
    bool metrics_valid = false;
    bool monotone_reversal = false;  // sign of (w* - w) nondecreasing in the threshold
    std::string error;               // nonempty marks a failed replication
};

struct GroupAggregate {
    std::string group;
    int identified = 0;  // replications with a u*
    int failed = 0;
    double u_mean = 0.0;
    double u_sd = 0.0;
    // Proportion of valid replications where the combination beat the
    // reference single-threshold model (strictly smaller divergence).
    double prop_bulk_kl_ei = 0.0, prop_bulk_kl_wei = 0.0;
    double prop_tail_kl_ei = 0.0, prop_tail_kl_wei = 0.0;
    double prop_bulk_h_ei = 0.0, prop_bulk_h_wei = 0.0;
    double prop_tail_h_ei = 0.0, prop_tail_h_wei = 0.0;
    double monotone_fraction = 0.0;
    int metric_rows = 0;
};

struct StudyResult {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<StudyRow> rows;
    std::vector<GroupAggregate> aggregates;
};

/// Per replication: generate, fit the candidate grid on the training split,
/// run the quantile-bootstrap weighting on the calibration split, identify
/// u*, and score both combinations and the true-threshold single model on
/// the test split (regions split at the true threshold). Replication
/// failures are recorded in the rows and tolerated up to 5% of R.
StudyResult run_homogeneous_study(const ScenarioSpec& spec);

/// Grouped pipeline: candidates fitted per type, error-integration weights
/// per type, per-type u*; metrics compare against the identified-threshold
/// model with regions split at the identified value.
StudyResult run_heterogeneous_study(const ScenarioSpec& spec);

void write_csv(std::ostream& out, const StudyResult& result);

GroupAggregate aggregate_rows(const std::string& group, const std::vector<StudyRow>& rows);

}  // namespace tailmix
