#include "tailmix/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tailmix/errors.hpp"
#include "tailmix/rng.hpp"
#include "tailmix/sample_stats.hpp"

namespace tailmix {

DataSplit split_sample(const LossSample& data, const std::array<double, 3>& fractions,
                       std::uint64_t seed) {
    const double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(sum - 1.0) > 1e-9 || fractions[0] <= 0.0 || fractions[2] <= 0.0 ||
        fractions[1] < 0.0) {
        throw std::invalid_argument("split_sample: fractions must be nonnegative and sum to 1");
    }
    const Eigen::Index n = data.size();
    if (n < 2) throw std::invalid_argument("split_sample: sample too small");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    Rng rng = Rng::stream(seed, 0xD5);
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    const auto n_train = static_cast<Eigen::Index>(std::llround(fractions[0] * static_cast<double>(n)));
    const auto n_calib = static_cast<Eigen::Index>(std::llround(fractions[1] * static_cast<double>(n)));

    auto take = [&](Eigen::Index offset, Eigen::Index count) {
        Eigen::ArrayXd values(count);
        std::vector<std::string> labels;
        if (data.labeled()) labels.resize(static_cast<std::size_t>(count));
        for (Eigen::Index i = 0; i < count; ++i) {
            const Eigen::Index src = order[static_cast<std::size_t>(offset + i)];
            values[i] = data.values[src];
            if (data.labeled()) {
                labels[static_cast<std::size_t>(i)] = data.labels[static_cast<std::size_t>(src)];
            }
        }
        return LossSample(std::move(values), std::move(labels));
    };

    DataSplit out;
    out.train = take(0, n_train);
    out.test = take(n_train + n_calib, n - n_train - n_calib);
    if (n_calib > 0) {
        out.calib = take(n_train, n_calib);
    } else {
        out.calib = out.train;
        out.calib_is_train = true;
    }
    return out;
}

Eigen::ArrayXd default_mrl_grid(const Eigen::ArrayXd& values, int points) {
    const Eigen::ArrayXd sorted = sorted_copy(values);
    const double lo = sorted.minCoeff();
    const double hi = sorted_quantile(sorted, 0.995);
    if (!(hi > lo)) throw FitError("default_mrl_grid: degenerate sample range");
    Eigen::ArrayXd grid(points);
    for (int i = 0; i < points; ++i) {
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    }
    return grid;
}

std::vector<double> thresholds_from_quantiles(const Eigen::ArrayXd& values, double lo, double hi,
                                              double step) {
    if (!(lo > 0.0 && hi < 1.0 && hi > lo && step > 0.0)) {
        throw std::invalid_argument("thresholds_from_quantiles: need 0 < lo < hi < 1 and step > 0");
    }
    const Eigen::ArrayXd sorted = sorted_copy(values);
    std::vector<double> out;
    for (double p = lo; p <= hi + 1e-12; p += step) {
        const double u = sorted_quantile(sorted, std::min(p, hi));
        if (out.empty() || u > out.back()) out.push_back(u);
    }
    if (out.size() < 2) throw FitError("thresholds_from_quantiles: grid collapsed to fewer than 2 values");
    return out;
}

HomSelectResult run_hom_select(const LossSample& data, const SelectOptions& options) {
    HomSelectResult out;
    out.split = split_sample(data, options.split, options.seed);
    out.candidates = CandidateSet::fit(out.split.train, options.thresholds, options.bulk_fit);

    const std::uint64_t boot_seed = substream_seed(options.seed, 1);
    const auto grid = QuantileGrid::tail_weighted(options.quantile_count, options.grid_power);
    out.qem = build_quantile_error_model(out.split.calib, grid, options.bootstrap_count, boot_seed);

    HomOptions hom;
    hom.mode = options.prediction;
    hom.bootstrap_count = options.bootstrap_count;
    hom.seed = boot_seed;
    hom.bulk_fit = options.bulk_fit;
    const auto lik = hom_log_likelihoods(out.candidates, out.qem, out.split.calib, hom);
    out.refit_fallbacks = lik.refit_fallbacks;
    out.report = hom_weights(lik.log_lik, lik.predicted, out.candidates.priors,
                             out.candidates.thresholds(), options.aggregation, out.qem.observed);
    identify_threshold(out.report);

    out.mrl = mrl_curve(data.values, default_mrl_grid(data.values));

    if (out.report.u_star) {
        const double u_star = *out.report.u_star;
        Eigen::VectorXd w(out.report.rows.size()), w_star(out.report.rows.size());
        std::size_t star_index = 0;
        for (std::size_t m = 0; m < out.report.rows.size(); ++m) {
            w[static_cast<Eigen::Index>(m)] = out.report.rows[m].w;
            w_star[static_cast<Eigen::Index>(m)] = out.report.rows[m].w_star;
            if (out.report.rows[m].threshold == u_star) star_index = m;
        }
        const auto& models = out.candidates.models;
        const MixtureModel star_model = models[star_index];
        auto append = [&](std::vector<EvalRow> rows) {
            for (auto& r : rows) out.eval_rows.push_back(std::move(r));
        };
        append(bulk_tail_report(
            out.split.test.values, [&](double x) { return posterior_cdf(x, models, w); }, "hom-EI",
            u_star, options.bins));
        append(bulk_tail_report(
            out.split.test.values, [&](double x) { return posterior_cdf(x, models, w_star); },
            "w-hom-EI", u_star, options.bins));
        append(bulk_tail_report(
            out.split.test.values, [&](double x) { return mixture_cdf(x, star_model); },
            "single-u_star", u_star, options.bins));
    }
    return out;
}

HetSelectResult run_het_select(const LossSample& data, const SelectOptions& options) {
    if (!data.labeled()) throw InputError("heterogeneous mode requires a group column");
    HetSelectResult out;
    out.split = split_sample(data, options.split, options.seed);
    out.candidates = GroupedCandidateSet::fit(out.split.train, options.thresholds, options.bulk_fit);

    HetOptions het;
    het.error_draws = options.error_draws;
    het.seed = substream_seed(options.seed, 2);
    het.min_group = options.min_group;
    out.het = het_weights(out.candidates, out.split.calib, het);
    het_identify(out.het);

    out.mrl = mrl_curve(data.values, default_mrl_grid(data.values));

    const auto test_groups = out.split.test.by_group();
    for (const auto& [group, report] : out.het.groups) {
        if (!report.u_star) continue;
        const auto it = test_groups.find(group);
        if (it == test_groups.end()) continue;
        const double u_star = *report.u_star;

        Eigen::VectorXd w(report.rows.size()), w_star(report.rows.size());
        std::vector<MixtureModel> models;
        std::size_t star_index = 0;
        for (std::size_t m = 0; m < report.rows.size(); ++m) {
            w[static_cast<Eigen::Index>(m)] = report.rows[m].w;
            w_star[static_cast<Eigen::Index>(m)] = report.rows[m].w_star;
            models.push_back(out.candidates.models[m].at(group));
            if (report.rows[m].threshold == u_star) star_index = m;
        }
        const MixtureModel star_model = models[star_index];

        std::vector<EvalRow> rows;
        auto append = [&](std::vector<EvalRow> more) {
            for (auto& r : more) rows.push_back(std::move(r));
        };
        try {
            append(bulk_tail_report(
                it->second.values, [&](double x) { return posterior_cdf(x, models, w); }, "het-EI",
                u_star, options.bins));
            append(bulk_tail_report(
                it->second.values, [&](double x) { return posterior_cdf(x, models, w_star); },
                "w-het-EI", u_star, options.bins));
            append(bulk_tail_report(
                it->second.values, [&](double x) { return mixture_cdf(x, star_model); },
                "single-u_star", u_star, options.bins));
            out.eval_rows.emplace(group, std::move(rows));
        } catch (const FitError&) {
            // Split outside the group's test range; weights remain reported.
        }
    }
    return out;
}

}  // namespace tailmix
