#pragma once

#include <Eigen/Core>
#include <map>
#include <string>

#include "tailmix/distributions.hpp"
#include "tailmix/loss_sample.hpp"
#include "tailmix/sample_stats.hpp"

namespace tailmix {

/// How the sub-threshold (bulk) lognormal is estimated. The truncated fit
/// maximizes the conditional likelihood h/H and is the corrective choice;
/// the naive fit ignores the truncation and reproduces the classical
/// downward bias of the location parameter.
enum class BulkFit { truncated, naive };

/// Spliced bulk + GPD severity model at a fixed threshold. The two branches
/// carry masses 1 - phi and phi, where phi is the empirical exceedance
/// fraction (a count, not a fitted parameter).
struct MixtureModel {
    double threshold = 0.0;
    double phi = 0.0;  // exceedance fraction, in (0,1)
    LognormalParams bulk;
    GpdParams tail;  // tail.location == threshold
};

void validate(const MixtureModel& m);

/// Fits the mixture at threshold u: phi = (#values > u)/n exactly, bulk from
/// the values <= u, GPD scale/shape from the excesses over u. Requires at
/// least 30 observations on each side; the error message names u otherwise.
MixtureModel fit_mixture(const LossSample& data, double u, BulkFit bulk_fit = BulkFit::truncated);

/// Fast-path fit from a pre-sorted sample with log prefix sums, used by
/// bootstrap refits. `sorted` must be ascending and positive.
MixtureModel fit_mixture_sorted(const Eigen::ArrayXd& sorted, const LogPrefixSums& prefix,
                                double u, BulkFit bulk_fit);

double mixture_pdf(double x, const MixtureModel& m);
double mixture_log_pdf(double x, const MixtureModel& m);

/// cdf(threshold) equals 1 - phi exactly.
double mixture_cdf(double x, const MixtureModel& m);

/// Inverse CDF for q in [0,1); quantile(1 - phi) is the threshold exactly.
double mixture_quantile(double q, const MixtureModel& m);

Eigen::ArrayXd sample(const MixtureModel& m, Eigen::Index n, std::uint64_t seed);
Eigen::ArrayXd sample(const MixtureModel& m, Eigen::Index n, Rng& rng);

/// Per-group mixtures, keyed by group label (sorted, deterministic order).
using GroupedMixture = std::map<std::string, MixtureModel>;

/// Independent per-group fits. Every group present in the data must have a
/// threshold in u_per_group; fit errors are rethrown with the group label
/// attached. Groups are fitted in parallel and merged in label order.
GroupedMixture fit_grouped(const LossSample& data, const std::map<std::string, double>& u_per_group,
                           BulkFit bulk_fit = BulkFit::truncated);

/// Convenience: one shared threshold for every group.
GroupedMixture fit_grouped(const LossSample& data, double u, BulkFit bulk_fit = BulkFit::truncated);

}  // namespace tailmix
