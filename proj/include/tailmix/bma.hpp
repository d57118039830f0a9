#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailmix/mixture.hpp"
#include "tailmix/quantile_boot.hpp"

namespace tailmix {

/// Whether model quantile predictions are refit on every bootstrap resample
/// or evaluated once from the full-data fit.
enum class PredictionMode { refit, fixed };

/// Candidate mixtures over an ascending grid of distinct thresholds with
/// prior model probabilities (uniform unless supplied).
struct CandidateSet {
    std::vector<MixtureModel> models;
    Eigen::VectorXd priors;

    std::vector<double> thresholds() const;
    void check() const;

    static CandidateSet fit(const LossSample& train, const std::vector<double>& thresholds,
                            BulkFit bulk_fit = BulkFit::truncated,
                            Eigen::VectorXd priors = Eigen::VectorXd());
};

struct WeightRow {
    double threshold = 0.0;
    double w = 0.0;
    double w_star = 0.0;
};

/// Per-model unweighted and tail-weighted weights, plus the threshold
/// identified by the weight-reversal rule when one exists.
struct WeightReport {
    std::string group;  // empty in the homogeneous setting
    std::vector<WeightRow> rows;
    std::optional<double> u_star;
    bool all_reversed = false;   // w* >= w everywhere: u* is the lowest threshold, flagged
    bool none_reversed = false;  // w* < w everywhere: no reversal inside the range
};

struct HomOptions {
    PredictionMode mode = PredictionMode::refit;
    int bootstrap_count = 200;  // must match the error model's B in refit mode
    std::uint64_t seed = 0;     // same base seed as the bootstrap so resamples pair up
    BulkFit bulk_fit = BulkFit::truncated;
};

struct HomLikelihoods {
    Eigen::MatrixXd log_lik;    // M x Q
    Eigen::MatrixXd predicted;  // M x Q quantiles of the full-data fits
    int refit_fallbacks = 0;    // resample refits that fell back to the full-data model
};

/// Geometric-mean skew-normal likelihood of each model's quantile predictions
/// under the bootstrap error model, computed in log space:
/// log L(m,q) = log(2/omega_q) + mean_b [log phi(z_mbq) + log Phi(alpha_q z_mbq)].
HomLikelihoods hom_log_likelihoods(const CandidateSet& candidates, const QuantileErrorModel& qem,
                                   const LossSample& calib, const HomOptions& options);

/// How per-quantile likelihoods aggregate into model weights.
/// - likelihood_mean: L(D|M) = (1/Q) sum L, L*(D|M) = sum (yhat_q/sum yhat) L,
///   normalized across models once at the end.
/// - per_quantile: models are normalized against each other at every quantile
///   (Bayes ratio per quantile), then averaged uniformly (w) or with observed
///   quantile shares y_q / sum y (w*) -- the error-integration form with
///   quantiles standing in for observations.
enum class WeightAggregation { likelihood_mean, per_quantile };

/// Aggregates per-quantile likelihoods into model weights. `observed` (the
/// data quantiles y_q) feeds the per_quantile tail weights and may be empty
/// for likelihood_mean. Both weight columns sum to 1.
WeightReport hom_weights(const Eigen::MatrixXd& log_lik, const Eigen::MatrixXd& predicted,
                         const Eigen::VectorXd& priors, const std::vector<double>& thresholds,
                         WeightAggregation aggregation = WeightAggregation::per_quantile,
                         const Eigen::ArrayXd& observed = Eigen::ArrayXd());

/// Weight-reversal rule: the smallest threshold whose tail-weighted weight
/// meets or exceeds its unweighted weight. Fills the report's u_star and
/// boundary flags; returns the identified threshold if any.
std::optional<double> identify_threshold(WeightReport& report);

double posterior_pdf(double x, std::span<const MixtureModel> models, const Eigen::VectorXd& weights);
double posterior_cdf(double x, std::span<const MixtureModel> models, const Eigen::VectorXd& weights);

// ---------------------------------------------------------------------------
// Heterogeneous (grouped) error integration
// ---------------------------------------------------------------------------

/// One grouped mixture per candidate threshold; every grouped model carries a
/// fit for each group label.
struct GroupedCandidateSet {
    std::vector<double> thresholds;
    std::vector<GroupedMixture> models;
    Eigen::VectorXd priors;

    void check() const;

    static GroupedCandidateSet fit(const LossSample& train, const std::vector<double>& thresholds,
                                   BulkFit bulk_fit = BulkFit::truncated,
                                   Eigen::VectorXd priors = Eigen::VectorXd());
};

/// Calibration residual model for one group: skew-normal for observations at
/// or below the boundary (the median candidate threshold), GEV above it.
/// When too few tail residuals exist the bulk model covers both regimes.
struct ResidualModel {
    SkewNormalParams bulk;
    std::optional<GevParams> tail;
    double boundary = 0.0;
    bool tail_fallback = false;
    Eigen::Index bulk_count = 0;
    Eigen::Index tail_count = 0;
};

/// Fits the residual model from rank-matched ensemble predictions: each
/// calibration value's residual is y - mean over candidates of that group's
/// model quantile at the value's plotting position.
ResidualModel fit_residual_model(const Eigen::ArrayXd& group_values,
                                 const GroupedCandidateSet& candidates, const std::string& group,
                                 double boundary, Eigen::Index min_tail = 30);

struct HetOptions {
    int error_draws = 500;  // S
    std::uint64_t seed = 0;
    Eigen::Index min_group = 100;
    Eigen::Index min_tail_residuals = 30;
};

struct HetResult {
    std::map<std::string, WeightReport> groups;       // keyed by report label
    std::map<std::string, ResidualModel> residuals;   // keyed by fit label
    Eigen::Index skipped_observations = 0;            // no valid perturbed density under any model
};

/// Error-integration weights per group: for every calibration observation and
/// error draw, models are scored by their density at the perturbed value
/// y + eps, normalized across models, then averaged with 1/|D_group| (w) and
/// with within-group y/sum(y) tail weights (w*). Observations use the model
/// and residual regime of their own (fit) group; report_labels, when given,
/// regroups the per-observation weights for reporting (defaults to the fit
/// labels).
HetResult het_weights(const GroupedCandidateSet& candidates, const LossSample& calib,
                      const HetOptions& options,
                      const std::vector<std::string>* report_labels = nullptr);

/// Same, with caller-supplied residual models (used by tests to inject
/// degenerate error distributions).
HetResult het_weights_with_residuals(const GroupedCandidateSet& candidates, const LossSample& calib,
                                     const std::map<std::string, ResidualModel>& residuals,
                                     const HetOptions& options,
                                     const std::vector<std::string>* report_labels = nullptr);

/// Applies the weight-reversal rule to every group's report.
std::map<std::string, std::optional<double>> het_identify(HetResult& result);

}  // namespace tailmix
