#include "tailmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tailmix/distributions.hpp"
#include "tailmix/errors.hpp"
#include "tailmix/fitting.hpp"
#include "tailmix/parallel.hpp"
#include "tailmix/rng.hpp"
#include "tailmix/sample_stats.hpp"

namespace tailmix {

BinnedDensityPair BinnedDensityPair::from_masses(Eigen::ArrayXd edges, Eigen::ArrayXd reference,
                                                 Eigen::ArrayXd candidate) {
    const Eigen::Index k = edges.size() - 1;
    if (k < 1 || reference.size() != k || candidate.size() != k) {
        throw std::invalid_argument("BinnedDensityPair: size mismatch");
    }
    for (Eigen::Index i = 0; i < k; ++i) {
        if (!(edges[i + 1] > edges[i])) throw std::invalid_argument("BinnedDensityPair: edges not increasing");
        if (reference[i] < 0.0 || candidate[i] < 0.0) {
            throw std::invalid_argument("BinnedDensityPair: negative mass");
        }
    }
    const double ref_sum = reference.sum();
    if (!(ref_sum > 0.0)) throw std::invalid_argument("BinnedDensityPair: empty reference");
    reference /= ref_sum;

    candidate = candidate.max(kMassFloor);
    candidate /= candidate.sum();

    BinnedDensityPair out;
    out.edges = std::move(edges);
    out.reference = std::move(reference);
    out.candidate = std::move(candidate);
    return out;
}

Eigen::ArrayXd log_spaced_edges(double lo, double hi, int bins) {
    if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("log_spaced_edges: need 0 < lo < hi");
    if (bins < 1) throw std::invalid_argument("log_spaced_edges: need at least one bin");
    Eigen::ArrayXd edges(bins + 1);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i <= bins; ++i) {
        edges[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / bins);
    }
    edges[0] = lo;
    edges[bins] = hi;
    return edges;
}

Eigen::ArrayXd linear_edges(double lo, double hi, int bins) {
    if (!(hi > lo)) throw std::invalid_argument("linear_edges: need lo < hi");
    if (bins < 1) throw std::invalid_argument("linear_edges: need at least one bin");
    Eigen::ArrayXd edges(bins + 1);
    for (int i = 0; i <= bins; ++i) {
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / bins;
    }
    return edges;
}

Eigen::ArrayXd empirical_bin_mass(const Eigen::ArrayXd& values, const Eigen::ArrayXd& edges) {
    const Eigen::Index k = edges.size() - 1;
    if (values.size() == 0) throw std::invalid_argument("empirical_bin_mass: empty sample");
    Eigen::ArrayXd mass = Eigen::ArrayXd::Zero(k);
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double x = values[i];
        const auto* begin = edges.data();
        auto idx = static_cast<Eigen::Index>(std::lower_bound(begin, begin + edges.size(), x) - begin);
        // (edge_{j}, edge_{j+1}] bins; clamp outliers into the end bins.
        Eigen::Index bin = idx - 1;
        if (bin < 0) bin = 0;
        if (bin >= k) bin = k - 1;
        mass[bin] += 1.0;
    }
    return mass / static_cast<double>(values.size());
}

Eigen::ArrayXd model_bin_mass(const std::function<double(double)>& cdf, const Eigen::ArrayXd& edges) {
    const Eigen::Index k = edges.size() - 1;
    Eigen::ArrayXd mass(k);
    double prev = cdf(edges[0]);
    const double total = cdf(edges[k]) - prev;
    if (!(total > 0.0)) throw FitError("model_bin_mass: model has no mass on the bin range");
    for (Eigen::Index i = 0; i < k; ++i) {
        const double next = cdf(edges[i + 1]);
        mass[i] = std::max(0.0, next - prev) / total;
        prev = next;
    }
    return mass;
}

double hellinger_sq(const BinnedDensityPair& pair) {
    const double bc = (pair.reference * pair.candidate).sqrt().sum();
    return std::clamp(1.0 - bc, 0.0, 1.0);
}

double kl_divergence(const BinnedDensityPair& pair) {
    double kl = 0.0;
    for (Eigen::Index i = 0; i < pair.reference.size(); ++i) {
        const double p = pair.reference[i];
        if (p > 0.0) kl += p * std::log(p / pair.candidate[i]);
    }
    return kl;
}

std::vector<EvalRow> bulk_tail_report(const Eigen::ArrayXd& test,
                                      const std::function<double(double)>& model_cdf,
                                      const std::string& method, double split_u, int bins) {
    std::vector<double> bulk, tail;
    for (Eigen::Index i = 0; i < test.size(); ++i) {
        (test[i] <= split_u ? bulk : tail).push_back(test[i]);
    }
    if (bulk.empty() || tail.empty()) {
        throw FitError("bulk_tail_report: split " + std::to_string(split_u) +
                       " leaves an empty side of the test set");
    }

    auto side_row = [&](const std::vector<double>& side, const std::string& region, double lo,
                        double hi) {
        Eigen::Map<const Eigen::ArrayXd> vals(side.data(), static_cast<Eigen::Index>(side.size()));
        if (!(hi > lo)) throw FitError("bulk_tail_report: degenerate " + region + " range");
        const Eigen::ArrayXd edges = log_spaced_edges(lo, hi, bins);
        auto pair = BinnedDensityPair::from_masses(edges, empirical_bin_mass(vals, edges),
                                                   model_bin_mass(model_cdf, edges));
        EvalRow row;
        row.method = method;
        row.region = region;
        row.hellinger = hellinger_sq(pair);
        row.kl = kl_divergence(pair);
        row.n_obs = vals.size();
        return row;
    };

    Eigen::Map<const Eigen::ArrayXd> bulk_vals(bulk.data(), static_cast<Eigen::Index>(bulk.size()));
    Eigen::Map<const Eigen::ArrayXd> tail_vals(tail.data(), static_cast<Eigen::Index>(tail.size()));
    std::vector<EvalRow> rows;
    // The lower edge sits a hair below the side minimum so that bin masses
    // from cdf differences keep any atom at the minimum itself.
    rows.push_back(side_row(bulk, "bulk", bulk_vals.minCoeff() * (1.0 - 1e-9), split_u));
    rows.push_back(side_row(tail, "tail", split_u, tail_vals.maxCoeff()));
    return rows;
}

MrlCurve mrl_curve(const Eigen::ArrayXd& data, const Eigen::ArrayXd& grid) {
    if (data.size() == 0) throw std::invalid_argument("mrl_curve: empty sample");
    const Eigen::ArrayXd sorted = sorted_copy(data);
    const Eigen::Index n = sorted.size();

    // Suffix sums let each grid point cost one binary search.
    std::vector<double> suffix(static_cast<std::size_t>(n) + 1, 0.0);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        suffix[static_cast<std::size_t>(i)] = suffix[static_cast<std::size_t>(i) + 1] + sorted[i];
    }

    MrlCurve out;
    out.thresholds = grid;
    out.mean_excess.resize(grid.size());
    out.counts.resize(grid.size());
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
        const double v = grid[g];
        const auto* begin = sorted.data();
        const auto idx = static_cast<Eigen::Index>(std::upper_bound(begin, begin + n, v) - begin);
        const Eigen::Index count = n - idx;
        out.counts[g] = count;
        out.mean_excess[g] = count > 0
                                 ? suffix[static_cast<std::size_t>(idx)] / static_cast<double>(count) - v
                                 : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

double anderson_darling_statistic(const Eigen::ArrayXd& sorted_uniforms) {
    const Eigen::Index n = sorted_uniforms.size();
    if (n < 1) throw std::invalid_argument("anderson_darling_statistic: empty input");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double zi = std::clamp(sorted_uniforms[i], 1e-12, 1.0 - 1e-12);
        const double zr = std::clamp(sorted_uniforms[n - 1 - i], 1e-12, 1.0 - 1e-12);
        acc += (2.0 * static_cast<double>(i) + 1.0) * (std::log(zi) + std::log1p(-zr));
    }
    return -static_cast<double>(n) - acc / static_cast<double>(n);
}

std::optional<std::size_t> forward_stop_index(const std::vector<double>& p_values, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("forward_stop: alpha outside (0,1)");
    std::optional<std::size_t> best;
    double running = 0.0;
    for (std::size_t k = 0; k < p_values.size(); ++k) {
        const double p = std::min(p_values[k], 1.0 - 1e-15);
        running += -std::log1p(-p);
        if (running / static_cast<double>(k + 1) <= alpha) best = k + 1;
    }
    return best;
}

ForwardStopResult forward_stop(const Eigen::ArrayXd& data, const Eigen::ArrayXd& grid, double alpha,
                               int n_boot, std::uint64_t seed) {
    if (n_boot < 1) throw std::invalid_argument("forward_stop: need n_boot >= 1");
    for (Eigen::Index i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("forward_stop: grid not ascending");
    }
    const Eigen::ArrayXd sorted = sorted_copy(data);
    const Eigen::Index n = sorted.size();

    ForwardStopResult out;
    out.points.resize(static_cast<std::size_t>(grid.size()));

    parallel_for(static_cast<std::size_t>(grid.size()), [&](std::size_t gi) {
        ForwardStopPoint& point = out.points[gi];
        point.threshold = grid[static_cast<Eigen::Index>(gi)];

        const auto* begin = sorted.data();
        const auto idx =
            static_cast<Eigen::Index>(std::upper_bound(begin, begin + n, point.threshold) - begin);
        const Eigen::Index n_excess = n - idx;
        point.n_excess = n_excess;
        if (n_excess < kMinFitSample) return;  // dropped, used stays false

        const Eigen::ArrayXd excesses = sorted.segment(idx, n_excess) - point.threshold;
        GpdParams fit;
        try {
            fit = fit_gpd_mle(excesses);
        } catch (const FitError&) {
            return;
        }

        auto ad_of = [&](const Eigen::ArrayXd& exc, const GpdParams& p) {
            Eigen::ArrayXd z(exc.size());
            for (Eigen::Index i = 0; i < exc.size(); ++i) z[i] = gpd_cdf(exc[i], p);
            std::sort(z.data(), z.data() + z.size());
            return anderson_darling_statistic(z);
        };
        point.statistic = ad_of(excesses, fit);

        // Parametric bootstrap p-value: refit on samples from the fitted GPD.
        const std::uint64_t point_seed = substream_seed(seed, gi);
        int hits = 0, valid = 0;
        for (int r = 0; r < n_boot; ++r) {
            Rng rng = Rng::stream(point_seed, static_cast<std::uint64_t>(r));
            Eigen::ArrayXd boot(n_excess);
            for (Eigen::Index i = 0; i < n_excess; ++i) boot[i] = gpd_quantile(rng.uniform(), fit);
            try {
                const GpdParams refit = fit_gpd_mle(boot);
                if (ad_of(boot, refit) >= point.statistic) ++hits;
                ++valid;
            } catch (const FitError&) {
            }
        }
        if (valid == 0) return;
        point.p_value = (1.0 + hits) / (static_cast<double>(valid) + 1.0);
        point.used = true;
    });

    std::vector<double> p_values;
    std::vector<double> thresholds;
    for (const auto& point : out.points) {
        if (point.used) {
            p_values.push_back(point.p_value);
            thresholds.push_back(point.threshold);
        }
    }
    if (const auto k = forward_stop_index(p_values, alpha)) {
        out.threshold = thresholds[*k - 1];
    }
    return out;
}

}  // namespace tailmix
