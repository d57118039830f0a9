#include "tailmix/bma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "tailmix/errors.hpp"
#include "tailmix/fitting.hpp"
#include "tailmix/parallel.hpp"
#include "tailmix/sample_stats.hpp"
#include "tailmix/special.hpp"

namespace tailmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd uniform_priors(Eigen::Index m) {
    return Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
}

void check_priors(const Eigen::VectorXd& priors) {
    if ((priors.array() <= 0.0).any()) throw std::invalid_argument("priors must be positive");
    if (std::abs(priors.sum() - 1.0) > 1e-9) throw std::invalid_argument("priors must sum to 1");
}

void check_thresholds(const std::vector<double>& thresholds) {
    if (thresholds.size() < 2) throw std::invalid_argument("candidate set needs at least 2 models");
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > thresholds[i - 1])) {
            throw std::invalid_argument("candidate thresholds must be strictly increasing");
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Candidate sets
// ---------------------------------------------------------------------------

std::vector<double> CandidateSet::thresholds() const {
    std::vector<double> out;
    out.reserve(models.size());
    for (const auto& m : models) out.push_back(m.threshold);
    return out;
}

void CandidateSet::check() const {
    check_thresholds(thresholds());
    if (priors.size() != static_cast<Eigen::Index>(models.size())) {
        throw std::invalid_argument("CandidateSet: prior count mismatch");
    }
    check_priors(priors);
    for (const auto& m : models) validate(m);
}

CandidateSet CandidateSet::fit(const LossSample& train, const std::vector<double>& thresholds,
                               BulkFit bulk_fit, Eigen::VectorXd priors) {
    check_thresholds(thresholds);
    const Eigen::ArrayXd sorted = sorted_copy(train.values);
    if ((sorted <= 0.0).any()) throw FitError("CandidateSet: losses must be positive");
    const LogPrefixSums prefix = LogPrefixSums::build(sorted);

    CandidateSet set;
    set.models.resize(thresholds.size());
    std::vector<std::string> failures(thresholds.size());
    parallel_for(thresholds.size(), [&](std::size_t i) {
        try {
            set.models[i] = fit_mixture_sorted(sorted, prefix, thresholds[i], bulk_fit);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!failures[i].empty()) throw FitError(failures[i]);
    }
    set.priors = priors.size() == 0 ? uniform_priors(static_cast<Eigen::Index>(thresholds.size()))
                                    : std::move(priors);
    set.check();
    return set;
}

void GroupedCandidateSet::check() const {
    check_thresholds(thresholds);
    if (models.size() != thresholds.size()) {
        throw std::invalid_argument("GroupedCandidateSet: model count mismatch");
    }
    if (priors.size() != static_cast<Eigen::Index>(models.size())) {
        throw std::invalid_argument("GroupedCandidateSet: prior count mismatch");
    }
    check_priors(priors);
}

GroupedCandidateSet GroupedCandidateSet::fit(const LossSample& train,
                                             const std::vector<double>& thresholds,
                                             BulkFit bulk_fit, Eigen::VectorXd priors) {
    check_thresholds(thresholds);
    GroupedCandidateSet set;
    set.thresholds = thresholds;
    set.models.reserve(thresholds.size());
    for (double u : thresholds) {
        set.models.push_back(fit_grouped(train, u, bulk_fit));
    }
    set.priors = priors.size() == 0 ? uniform_priors(static_cast<Eigen::Index>(thresholds.size()))
                                    : std::move(priors);
    set.check();
    return set;
}

// ---------------------------------------------------------------------------
// Homogeneous likelihoods and weights
// ---------------------------------------------------------------------------

HomLikelihoods hom_log_likelihoods(const CandidateSet& candidates, const QuantileErrorModel& qem,
                                   const LossSample& calib, const HomOptions& options) {
    candidates.check();
    const auto m_count = static_cast<Eigen::Index>(candidates.models.size());
    const Eigen::Index q_count = qem.size();

    HomLikelihoods out;
    out.predicted.resize(m_count, q_count);
    for (Eigen::Index m = 0; m < m_count; ++m) {
        for (Eigen::Index q = 0; q < q_count; ++q) {
            out.predicted(m, q) =
                mixture_quantile(qem.probs[q], candidates.models[static_cast<std::size_t>(m)]);
        }
    }

    // Per-(m,q) average over b of log phi(z) + log Phi(alpha z).
    Eigen::MatrixXd kernel_mean(m_count, q_count);

    if (options.mode == PredictionMode::fixed) {
        for (Eigen::Index m = 0; m < m_count; ++m) {
            for (Eigen::Index q = 0; q < q_count; ++q) {
                const auto& sn = qem.sn[static_cast<std::size_t>(q)];
                const double z = (out.predicted(m, q) - sn.location) / sn.scale;
                kernel_mean(m, q) = norm_log_pdf(z) + norm_log_cdf(sn.shape * z);
            }
        }
    } else {
        const int b_count = options.bootstrap_count;
        if (b_count != qem.bootstrap_count) {
            throw std::invalid_argument(
                "hom_log_likelihoods: refit mode requires the error model's bootstrap count");
        }
        if (calib.size() == 0) throw std::invalid_argument("hom_log_likelihoods: empty calibration data");

        std::vector<Eigen::MatrixXd> per_b(static_cast<std::size_t>(b_count));
        std::vector<int> fallbacks(static_cast<std::size_t>(b_count), 0);
        const Eigen::Index n = calib.size();

        parallel_for(static_cast<std::size_t>(b_count), [&](std::size_t b) {
            const auto idx = bootstrap_indices(n, options.seed, static_cast<int>(b));
            Eigen::ArrayXd resample(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                resample[i] = calib.values[idx[static_cast<std::size_t>(i)]];
            }
            std::sort(resample.data(), resample.data() + n);
            const LogPrefixSums prefix = LogPrefixSums::build(resample);

            Eigen::MatrixXd contrib(m_count, q_count);
            for (Eigen::Index m = 0; m < m_count; ++m) {
                const auto& full_model = candidates.models[static_cast<std::size_t>(m)];
                MixtureModel refit;
                bool ok = true;
                try {
                    refit = fit_mixture_sorted(resample, prefix, full_model.threshold,
                                               options.bulk_fit);
                } catch (const FitError&) {
                    refit = full_model;  // keep the b slot; uses the full-data prediction
                    ok = false;
                }
                if (!ok) ++fallbacks[b];
                for (Eigen::Index q = 0; q < q_count; ++q) {
                    const auto& sn = qem.sn[static_cast<std::size_t>(q)];
                    const double yhat = mixture_quantile(qem.probs[q], refit);
                    const double z = (yhat - sn.location) / sn.scale;
                    contrib(m, q) = norm_log_pdf(z) + norm_log_cdf(sn.shape * z);
                }
            }
            per_b[b] = std::move(contrib);
        });

        kernel_mean.setZero();
        for (const auto& contrib : per_b) kernel_mean += contrib;
        kernel_mean /= static_cast<double>(b_count);
        for (int f : fallbacks) out.refit_fallbacks += f;
    }

    out.log_lik.resize(m_count, q_count);
    for (Eigen::Index q = 0; q < q_count; ++q) {
        const double log_norm = std::log(2.0 / qem.sn[static_cast<std::size_t>(q)].scale);
        for (Eigen::Index m = 0; m < m_count; ++m) {
            const double v = log_norm + kernel_mean(m, q);
            if (std::isnan(v)) {
                std::ostringstream os;
                os << "hom_log_likelihoods: NaN likelihood at model " << m << ", quantile " << q;
                throw FitError(os.str());
            }
            out.log_lik(m, q) = v;
        }
    }
    return out;
}

namespace {

// Printed-form weights: aggregate L across quantiles per model, then apply
// Bayes' rule once.
void likelihood_mean_weights(const Eigen::ArrayXXd& lik, const Eigen::MatrixXd& predicted,
                             const Eigen::VectorXd& priors, WeightReport& report) {
    const Eigen::Index m_count = lik.rows();
    Eigen::VectorXd mean_lik(m_count);      // L(D|M_m), up to a common shift
    Eigen::VectorXd weighted_lik(m_count);  // L*(D|M_m)
    for (Eigen::Index m = 0; m < m_count; ++m) {
        mean_lik[m] = lik.row(m).mean();
        const Eigen::ArrayXd yhat = predicted.row(m).transpose().array();
        const double total = yhat.sum();
        if (!(total > 0.0)) throw FitError("hom_weights: nonpositive predicted quantiles");
        weighted_lik[m] = (yhat / total * lik.row(m).transpose().array()).sum();
    }

    const double denom = (mean_lik.array() * priors.array()).sum();
    const double denom_star = (weighted_lik.array() * priors.array()).sum();
    if (!(denom > 0.0) || !(denom_star > 0.0)) {
        throw FitError("hom_weights: degenerate model set (all likelihoods zero)");
    }
    for (Eigen::Index m = 0; m < m_count; ++m) {
        report.rows[static_cast<std::size_t>(m)].w = mean_lik[m] * priors[m] / denom;
        report.rows[static_cast<std::size_t>(m)].w_star = weighted_lik[m] * priors[m] / denom_star;
    }
}

// Error-integration form with quantiles as observations: Bayes ratios across
// models at every quantile, averaged uniformly (w) or by observed quantile
// share (w*).
void per_quantile_weights(const Eigen::MatrixXd& log_lik, const Eigen::VectorXd& priors,
                          const Eigen::ArrayXd& observed, WeightReport& report) {
    const Eigen::Index m_count = log_lik.rows();
    const Eigen::Index q_count = log_lik.cols();
    if (observed.size() != q_count) {
        throw std::invalid_argument("hom_weights: per-quantile aggregation needs observed quantiles");
    }
    if ((observed <= 0.0).any()) throw FitError("hom_weights: nonpositive observed quantiles");

    const Eigen::ArrayXd log_priors = priors.array().log();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m_count);
    Eigen::VectorXd w_star = Eigen::VectorXd::Zero(m_count);
    const double y_total = observed.sum();
    for (Eigen::Index q = 0; q < q_count; ++q) {
        Eigen::ArrayXd col = log_lik.col(q).array() + log_priors;
        const double shift = col.maxCoeff();
        if (!std::isfinite(shift)) {
            throw FitError("hom_weights: all likelihoods vanish at quantile " + std::to_string(q));
        }
        const Eigen::ArrayXd ratio_unnorm = (col - shift).exp();
        const Eigen::ArrayXd ratio = ratio_unnorm / ratio_unnorm.sum();
        w.array() += ratio / static_cast<double>(q_count);
        w_star.array() += observed[q] / y_total * ratio;
    }
    for (Eigen::Index m = 0; m < m_count; ++m) {
        report.rows[static_cast<std::size_t>(m)].w = w[m];
        report.rows[static_cast<std::size_t>(m)].w_star = w_star[m];
    }
}

}  // namespace

WeightReport hom_weights(const Eigen::MatrixXd& log_lik, const Eigen::MatrixXd& predicted,
                         const Eigen::VectorXd& priors, const std::vector<double>& thresholds,
                         WeightAggregation aggregation, const Eigen::ArrayXd& observed) {
    const Eigen::Index m_count = log_lik.rows();
    const Eigen::Index q_count = log_lik.cols();
    if (predicted.rows() != m_count || predicted.cols() != q_count) {
        throw std::invalid_argument("hom_weights: prediction matrix shape mismatch");
    }
    if (priors.size() != m_count || static_cast<Eigen::Index>(thresholds.size()) != m_count) {
        throw std::invalid_argument("hom_weights: size mismatch");
    }
    check_priors(priors);
    if (!((log_lik.array() == log_lik.array()).all())) {
        throw FitError("hom_weights: NaN in likelihood matrix");
    }

    WeightReport report;
    report.rows.resize(static_cast<std::size_t>(m_count));
    for (Eigen::Index m = 0; m < m_count; ++m) {
        report.rows[static_cast<std::size_t>(m)].threshold = thresholds[static_cast<std::size_t>(m)];
    }

    if (aggregation == WeightAggregation::likelihood_mean) {
        // One global shift keeps every ratio exact while avoiding underflow.
        const double shift = log_lik.maxCoeff();
        if (!std::isfinite(shift)) {
            throw FitError("hom_weights: degenerate model set (all likelihoods zero)");
        }
        const Eigen::ArrayXXd lik = (log_lik.array() - shift).exp();
        likelihood_mean_weights(lik, predicted, priors, report);
    } else {
        per_quantile_weights(log_lik, priors, observed, report);
    }
    return report;
}

std::optional<double> identify_threshold(WeightReport& report) {
    report.u_star.reset();
    report.all_reversed = false;
    report.none_reversed = false;
    std::size_t reversed = 0;
    for (const auto& row : report.rows) {
        if (row.w_star >= row.w) {
            if (!report.u_star) report.u_star = row.threshold;
            ++reversed;
        }
    }
    if (!report.u_star) {
        report.none_reversed = true;
    } else if (reversed == report.rows.size()) {
        report.all_reversed = true;
    }
    return report.u_star;
}

double posterior_pdf(double x, std::span<const MixtureModel> models, const Eigen::VectorXd& weights) {
    if (static_cast<Eigen::Index>(models.size()) != weights.size()) {
        throw std::invalid_argument("posterior_pdf: weight count mismatch");
    }
    double out = 0.0;
    for (Eigen::Index m = 0; m < weights.size(); ++m) {
        out += weights[m] * mixture_pdf(x, models[static_cast<std::size_t>(m)]);
    }
    return out;
}

double posterior_cdf(double x, std::span<const MixtureModel> models, const Eigen::VectorXd& weights) {
    if (static_cast<Eigen::Index>(models.size()) != weights.size()) {
        throw std::invalid_argument("posterior_cdf: weight count mismatch");
    }
    double out = 0.0;
    for (Eigen::Index m = 0; m < weights.size(); ++m) {
        out += weights[m] * mixture_cdf(x, models[static_cast<std::size_t>(m)]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Heterogeneous error integration
// ---------------------------------------------------------------------------

ResidualModel fit_residual_model(const Eigen::ArrayXd& group_values,
                                 const GroupedCandidateSet& candidates, const std::string& group,
                                 double boundary, Eigen::Index min_tail) {
    const Eigen::Index n = group_values.size();
    if (n < 3) throw FitError("fit_residual_model: group '" + group + "' too small");

    // Rank-matched ensemble prediction at the Hazen plotting position.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return group_values[a] < group_values[b]; });

    const auto m_count = candidates.models.size();
    Eigen::ArrayXd residuals(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::Index i = order[static_cast<std::size_t>(r)];
        const double p = (static_cast<double>(r) + 0.5) / static_cast<double>(n);
        double yhat = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
            yhat += mixture_quantile(p, candidates.models[m].at(group));
        }
        yhat /= static_cast<double>(m_count);
        residuals[i] = group_values[i] - yhat;
    }

    std::vector<double> bulk_res, tail_res;
    for (Eigen::Index i = 0; i < n; ++i) {
        (group_values[i] <= boundary ? bulk_res : tail_res).push_back(residuals[i]);
    }

    ResidualModel out;
    out.boundary = boundary;
    out.bulk_count = static_cast<Eigen::Index>(bulk_res.size());
    out.tail_count = static_cast<Eigen::Index>(tail_res.size());

    auto sn_from = [&](const std::vector<double>& r) {
        Eigen::Map<const Eigen::ArrayXd> arr(r.data(), static_cast<Eigen::Index>(r.size()));
        const double sd = std::sqrt(variance(arr));
        if (!(sd > 0.0)) throw FitError("fit_residual_model: zero residual variance in group '" + group + "'");
        return skew_normal_from_moments(arr.mean(), sd, skewness(arr));
    };

    if (bulk_res.size() >= 3) {
        out.bulk = sn_from(bulk_res);
    } else if (tail_res.size() >= 3) {
        out.bulk = sn_from(tail_res);  // group sits entirely above the boundary
    } else {
        throw FitError("fit_residual_model: too few residuals in group '" + group + "'");
    }

    if (static_cast<Eigen::Index>(tail_res.size()) >= min_tail) {
        Eigen::Map<const Eigen::ArrayXd> arr(tail_res.data(), static_cast<Eigen::Index>(tail_res.size()));
        try {
            out.tail = fit_gev_mle(arr);
        } catch (const FitError&) {
            out.tail_fallback = true;
        }
    } else {
        out.tail_fallback = true;  // bulk skew-normal covers the tail regime
    }
    return out;
}

namespace {

double draw_residual(const ResidualModel& model, bool tail_regime, Rng& rng) {
    if (tail_regime && model.tail) {
        return gev_quantile(rng.uniform(), *model.tail);
    }
    const auto& sn = model.bulk;
    const double d = sn.shape / std::sqrt(1.0 + sn.shape * sn.shape);
    const double z0 = rng.normal();
    const double z1 = rng.normal();
    return sn.location + sn.scale * (d * std::abs(z0) + std::sqrt(1.0 - d * d) * z1);
}

}  // namespace

HetResult het_weights_with_residuals(const GroupedCandidateSet& candidates, const LossSample& calib,
                                     const std::map<std::string, ResidualModel>& residuals,
                                     const HetOptions& options,
                                     const std::vector<std::string>* report_labels) {
    candidates.check();
    if (!calib.labeled()) throw std::invalid_argument("het_weights: calibration sample must be labeled");
    if (options.error_draws < 1) throw std::invalid_argument("het_weights: need at least one error draw");
    const Eigen::Index n = calib.size();
    const auto m_count = static_cast<Eigen::Index>(candidates.models.size());

    const std::vector<std::string>& reports = report_labels ? *report_labels : calib.labels;
    if (reports.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("het_weights: report label count mismatch");
    }

    for (const auto& [label, model] : residuals) {
        (void)model;
        if (!candidates.models.front().count(label)) {
            throw std::invalid_argument("het_weights: residual model for unknown group '" + label + "'");
        }
    }

    // Per-observation weight vectors, then a deterministic grouped reduction.
    Eigen::MatrixXd obs_weights(n, m_count);
    std::vector<char> obs_valid(static_cast<std::size_t>(n), 0);

    parallel_for(static_cast<std::size_t>(n), [&](std::size_t k) {
        const auto ki = static_cast<Eigen::Index>(k);
        const std::string& fit_label = calib.labels[k];
        const auto res_it = residuals.find(fit_label);
        if (res_it == residuals.end()) {
            throw FitError("het_weights: no residual model for group '" + fit_label + "'");
        }
        const ResidualModel& res = res_it->second;
        const double y = calib.values[ki];
        const bool tail_regime = y > res.boundary;

        Rng rng = Rng::stream(options.seed, k);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(m_count);
        Eigen::VectorXd dens(m_count);
        int valid = 0;
        for (int s = 0; s < options.error_draws; ++s) {
            const double x = y + draw_residual(res, tail_regime, rng);
            double denom = 0.0;
            for (Eigen::Index m = 0; m < m_count; ++m) {
                const double f =
                    x > 0.0 ? mixture_pdf(x, candidates.models[static_cast<std::size_t>(m)].at(fit_label))
                            : 0.0;
                dens[m] = candidates.priors[m] * f;
                denom += dens[m];
            }
            if (denom > 0.0 && std::isfinite(denom)) {
                acc += dens / denom;
                ++valid;
            }
        }
        if (valid > 0) {
            obs_weights.row(ki) = acc.transpose() / static_cast<double>(valid);
            obs_valid[k] = 1;
        }
    });

    // Grouped aggregation: plain mean (w) and within-group y-share mean (w*).
    std::map<std::string, Eigen::VectorXd> sum_w, sum_wstar;
    std::map<std::string, double> sum_y;
    std::map<std::string, Eigen::Index> count;
    HetResult out;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!obs_valid[static_cast<std::size_t>(k)]) {
            ++out.skipped_observations;
            continue;
        }
        const std::string& g = reports[static_cast<std::size_t>(k)];
        auto [it, fresh] = sum_w.try_emplace(g, Eigen::VectorXd::Zero(m_count));
        if (fresh) {
            sum_wstar.emplace(g, Eigen::VectorXd::Zero(m_count));
            sum_y.emplace(g, 0.0);
            count.emplace(g, 0);
        }
        it->second += obs_weights.row(k).transpose();
        sum_wstar[g] += calib.values[k] * obs_weights.row(k).transpose();
        sum_y[g] += calib.values[k];
        ++count[g];
    }

    for (auto& [g, w_sum] : sum_w) {
        WeightReport report;
        report.group = g;
        report.rows.resize(static_cast<std::size_t>(m_count));
        const Eigen::VectorXd w = w_sum / static_cast<double>(count[g]);
        const Eigen::VectorXd w_star = sum_wstar[g] / sum_y[g];
        for (Eigen::Index m = 0; m < m_count; ++m) {
            auto& row = report.rows[static_cast<std::size_t>(m)];
            row.threshold = candidates.thresholds[static_cast<std::size_t>(m)];
            row.w = w[m];
            row.w_star = w_star[m];
        }
        out.groups.emplace(g, std::move(report));
    }
    out.residuals = residuals;
    return out;
}

HetResult het_weights(const GroupedCandidateSet& candidates, const LossSample& calib,
                      const HetOptions& options, const std::vector<std::string>* report_labels) {
    candidates.check();
    if (!calib.labeled()) throw std::invalid_argument("het_weights: calibration sample must be labeled");

    const auto groups = calib.by_group();
    for (const auto& [label, sample] : groups) {
        if (sample.size() < options.min_group) {
            throw FitError("het_weights: group '" + label + "' has " + std::to_string(sample.size()) +
                           " calibration observations (need " + std::to_string(options.min_group) + ")");
        }
        if (!candidates.models.front().count(label)) {
            throw FitError("het_weights: no candidate models for group '" + label + "'");
        }
    }

    std::vector<double> sorted_u = candidates.thresholds;
    std::sort(sorted_u.begin(), sorted_u.end());
    const std::size_t mid = sorted_u.size() / 2;
    const double boundary = sorted_u.size() % 2 == 1
                                ? sorted_u[mid]
                                : 0.5 * (sorted_u[mid - 1] + sorted_u[mid]);

    std::map<std::string, ResidualModel> residuals;
    for (const auto& [label, sample] : groups) {
        residuals.emplace(label, fit_residual_model(sample.values, candidates, label, boundary,
                                                    options.min_tail_residuals));
    }
    return het_weights_with_residuals(candidates, calib, residuals, options, report_labels);
}

std::map<std::string, std::optional<double>> het_identify(HetResult& result) {
    std::map<std::string, std::optional<double>> out;
    for (auto& [group, report] : result.groups) {
        out.emplace(group, identify_threshold(report));
    }
    return out;
}

}  // namespace tailmix
