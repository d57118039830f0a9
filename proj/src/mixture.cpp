#include "tailmix/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "tailmix/errors.hpp"
#include "tailmix/fitting.hpp"
#include "tailmix/parallel.hpp"

namespace tailmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// GPD evaluations tolerant of a finite upper endpoint (fitted xi < 0):
// beyond the endpoint the density is 0 and the cdf is 1.
double tail_cdf(double x, const GpdParams& p) {
    if (x <= p.location) return 0.0;
    if (x >= gpd_support_upper(p)) return 1.0;
    return gpd_cdf(x, p);
}

double tail_log_pdf(double x, const GpdParams& p) {
    if (x <= p.location || x >= gpd_support_upper(p)) return -kInf;
    return gpd_log_pdf(x, p);
}

}  // namespace

void validate(const MixtureModel& m) {
    if (!(m.phi > 0.0 && m.phi < 1.0)) throw std::domain_error("MixtureModel: phi outside (0,1)");
    if (m.tail.location != m.threshold) {
        throw std::domain_error("MixtureModel: tail location must equal the threshold");
    }
    validate(m.bulk);
    validate(m.tail);
}

MixtureModel fit_mixture_sorted(const Eigen::ArrayXd& sorted, const LogPrefixSums& prefix,
                                double u, BulkFit bulk_fit) {
    const Eigen::Index n = sorted.size();
    const auto* begin = sorted.data();
    const auto* cut = std::upper_bound(begin, begin + n, u);
    const Eigen::Index n_bulk = cut - begin;
    const Eigen::Index n_tail = n - n_bulk;
    if (n_bulk < kMinFitSample || n_tail < kMinFitSample) {
        std::ostringstream os;
        os << "fit_mixture: threshold " << u << " leaves " << n_bulk << " bulk / " << n_tail
           << " tail observations (need " << kMinFitSample << " on each side)";
        throw FitError(os.str());
    }

    MixtureModel m;
    m.threshold = u;
    m.phi = static_cast<double>(n_tail) / static_cast<double>(n);

    const double sl = prefix.sum_log[static_cast<std::size_t>(n_bulk)];
    const double sl2 = prefix.sum_log2[static_cast<std::size_t>(n_bulk)];
    m.bulk = bulk_fit == BulkFit::truncated
                 ? fit_lognormal_truncated_stats(n_bulk, sl, sl2, u)
                 : fit_lognormal_naive_stats(n_bulk, sl, sl2);

    const Eigen::ArrayXd excesses = sorted.segment(n_bulk, n_tail) - u;
    GpdParams tail = fit_gpd_mle(excesses);
    tail.location = u;
    m.tail = tail;
    return m;
}

MixtureModel fit_mixture(const LossSample& data, double u, BulkFit bulk_fit) {
    if ((data.values <= 0.0).any()) throw FitError("fit_mixture: losses must be positive");
    const Eigen::ArrayXd sorted = sorted_copy(data.values);
    const LogPrefixSums prefix = LogPrefixSums::build(sorted);
    return fit_mixture_sorted(sorted, prefix, u, bulk_fit);
}

double mixture_log_pdf(double x, const MixtureModel& m) {
    if (x <= 0.0) return -kInf;
    if (x <= m.threshold) {
        const double log_h = lognormal_log_pdf(x, m.bulk);
        const double log_h_u = std::log(lognormal_cdf(m.threshold, m.bulk));
        return std::log1p(-m.phi) + log_h - log_h_u;
    }
    return std::log(m.phi) + tail_log_pdf(x, m.tail);
}

double mixture_pdf(double x, const MixtureModel& m) { return std::exp(mixture_log_pdf(x, m)); }

double mixture_cdf(double x, const MixtureModel& m) {
    if (x <= 0.0) return 0.0;
    if (x <= m.threshold) {
        return (1.0 - m.phi) * lognormal_cdf(x, m.bulk) / lognormal_cdf(m.threshold, m.bulk);
    }
    return (1.0 - m.phi) + m.phi * tail_cdf(x, m.tail);
}

double mixture_quantile(double q, const MixtureModel& m) {
    if (!(q >= 0.0 && q < 1.0)) throw std::domain_error("mixture_quantile: q outside [0,1)");
    const double bulk_mass = 1.0 - m.phi;
    if (q == bulk_mass) return m.threshold;
    if (q < bulk_mass) {
        const double target = q / bulk_mass * lognormal_cdf(m.threshold, m.bulk);
        return lognormal_quantile(target, m.bulk);
    }
    return gpd_quantile((q - bulk_mass) / m.phi, m.tail);
}

Eigen::ArrayXd sample(const MixtureModel& m, Eigen::Index n, Rng& rng) {
    if (n < 1) throw std::domain_error("sample: n must be >= 1");
    Eigen::ArrayXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = mixture_quantile(rng.uniform(), m);
    return out;
}

Eigen::ArrayXd sample(const MixtureModel& m, Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    return sample(m, n, rng);
}

GroupedMixture fit_grouped(const LossSample& data, const std::map<std::string, double>& u_per_group,
                           BulkFit bulk_fit) {
    const auto groups = data.by_group();
    std::vector<std::pair<std::string, const LossSample*>> order;
    order.reserve(groups.size());
    for (const auto& [label, sample] : groups) {
        if (!u_per_group.count(label)) {
            throw FitError("fit_grouped: no threshold supplied for group '" + label + "'");
        }
        order.emplace_back(label, &sample);
    }

    std::vector<MixtureModel> fitted(order.size());
    std::vector<std::string> failures(order.size());
    parallel_for(order.size(), [&](std::size_t i) {
        try {
            fitted[i] = fit_mixture(*order[i].second, u_per_group.at(order[i].first), bulk_fit);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    GroupedMixture out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (!failures[i].empty()) {
            throw FitError("group '" + order[i].first + "': " + failures[i]);
        }
        out.emplace(order[i].first, fitted[i]);
    }
    return out;
}

GroupedMixture fit_grouped(const LossSample& data, double u, BulkFit bulk_fit) {
    std::map<std::string, double> thresholds;
    for (const auto& label : data.labels) thresholds.emplace(label, u);
    return fit_grouped(data, thresholds, bulk_fit);
}

}  // namespace tailmix
