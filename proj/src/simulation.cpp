#include "tailmix/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "tailmix/errors.hpp"
#include "tailmix/metrics.hpp"
#include "tailmix/parallel.hpp"
#include "tailmix/rng.hpp"
#include "tailmix/sample_stats.hpp"

namespace tailmix {

void validate(const ScenarioSpec& spec) {
    if (spec.types.empty()) throw std::invalid_argument("ScenarioSpec: no types");
    double total = 0.0;
    for (const auto& t : spec.types) {
        if (!(t.weight > 0.0)) throw std::invalid_argument("ScenarioSpec: type weights must be positive");
        if (!(t.tail_fraction > 0.0 && t.tail_fraction < 1.0)) {
            throw std::invalid_argument("ScenarioSpec: tail fraction outside (0,1)");
        }
        validate(t.bulk);
        validate(t.tail);
        total += t.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("ScenarioSpec: type weights must sum to 1");
    if (spec.thresholds.size() < 2) throw std::invalid_argument("ScenarioSpec: need at least 2 thresholds");
    for (std::size_t i = 1; i < spec.thresholds.size(); ++i) {
        if (!(spec.thresholds[i] > spec.thresholds[i - 1])) {
            throw std::invalid_argument("ScenarioSpec: thresholds must be strictly increasing");
        }
    }
    if (spec.n < 100) throw std::invalid_argument("ScenarioSpec: n too small");
    if (spec.replications < 1) throw std::invalid_argument("ScenarioSpec: need at least 1 replication");
    const double split_sum = spec.split[0] + spec.split[1] + spec.split[2];
    if (std::abs(split_sum - 1.0) > 1e-9 || spec.split[0] <= 0.0 || spec.split[2] <= 0.0) {
        throw std::invalid_argument("ScenarioSpec: split fractions must be positive and sum to 1");
    }
}

MixtureModel true_mixture(const TypeSpec& type) {
    MixtureModel m;
    m.threshold = type.tail.location;
    m.phi = type.tail_fraction;
    m.bulk = type.bulk;
    m.tail = type.tail;
    return m;
}

SimulatedData generate(const ScenarioSpec& spec, std::uint64_t seed) {
    validate(spec);
    const Eigen::Index n = spec.n;
    Rng rng = Rng::stream(seed, 0);

    Eigen::ArrayXd values(n);
    std::vector<std::string> labels(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        // Type by mixing weight.
        double pick = rng.uniform();
        std::size_t t = 0;
        for (; t + 1 < spec.types.size(); ++t) {
            if (pick < spec.types[t].weight) break;
            pick -= spec.types[t].weight;
        }
        const TypeSpec& type = spec.types[t];
        labels[static_cast<std::size_t>(i)] = type.name;

        const double u = rng.uniform();
        if (u < type.tail_fraction) {
            values[i] = gpd_quantile(rng.uniform(), type.tail);
        } else {
            // Inverse-CDF draw from the bulk conditioned to (0, threshold].
            const double cap = lognormal_cdf(type.tail.location, type.bulk);
            values[i] = lognormal_quantile(rng.uniform() * cap, type.bulk);
        }
    }

    const auto n_train = static_cast<Eigen::Index>(std::llround(spec.split[0] * static_cast<double>(n)));
    const auto n_calib = static_cast<Eigen::Index>(std::llround(spec.split[1] * static_cast<double>(n)));
    const Eigen::Index n_test = n - n_train - n_calib;
    if (n_train < 1 || n_test < 1) throw std::invalid_argument("generate: split leaves an empty part");

    auto slice = [&](Eigen::Index offset, Eigen::Index count) {
        Eigen::ArrayXd v = values.segment(offset, count);
        std::vector<std::string> l(labels.begin() + offset, labels.begin() + offset + count);
        return LossSample(std::move(v), std::move(l));
    };

    SimulatedData out;
    out.train = slice(0, n_train);
    out.calib = n_calib > 0 ? slice(n_train, n_calib) : LossSample();
    out.test = slice(n_train + n_calib, n_test);

    const Eigen::ArrayXd train_sorted = sorted_copy(out.train.values);
    out.small_cut = sorted_quantile(train_sorted, 0.2);
    out.large_cut = sorted_quantile(train_sorted, 0.8);
    auto classify = [&](const LossSample& s) {
        std::vector<std::string> cls(static_cast<std::size_t>(s.size()));
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            cls[static_cast<std::size_t>(i)] = s.values[i] <= out.small_cut  ? "small"
                                               : s.values[i] <= out.large_cut ? "medium"
                                                                              : "large";
        }
        return cls;
    };
    out.size_class_train = classify(out.train);
    out.size_class_calib = classify(out.calib);
    out.size_class_test = classify(out.test);
    return out;
}

namespace {

bool monotone_sign_pattern(const WeightReport& report) {
    // Once w* - w turns nonnegative it must stay nonnegative.
    bool seen_reversal = false;
    for (const auto& row : report.rows) {
        const bool reversed = row.w_star >= row.w;
        if (seen_reversal && !reversed) return false;
        if (reversed) seen_reversal = true;
    }
    return true;
}

struct MetricTriple {
    double kl_ei, kl_wei, kl_ref;
    double h_ei, h_wei, h_ref;
};

// Scores the two combinations and a reference model on one region set.
void fill_metrics(StudyRow& row, const Eigen::ArrayXd& test_values,
                  const std::function<double(double)>& cdf_ei,
                  const std::function<double(double)>& cdf_wei,
                  const std::function<double(double)>& cdf_ref, double split_u, int bins) {
    const auto rows_ei = bulk_tail_report(test_values, cdf_ei, "ei", split_u, bins);
    const auto rows_wei = bulk_tail_report(test_values, cdf_wei, "wei", split_u, bins);
    const auto rows_ref = bulk_tail_report(test_values, cdf_ref, "ref", split_u, bins);
    row.split_u = split_u;
    row.bulk_h_ei = rows_ei[0].hellinger;
    row.bulk_kl_ei = rows_ei[0].kl;
    row.tail_h_ei = rows_ei[1].hellinger;
    row.tail_kl_ei = rows_ei[1].kl;
    row.bulk_h_wei = rows_wei[0].hellinger;
    row.bulk_kl_wei = rows_wei[0].kl;
    row.tail_h_wei = rows_wei[1].hellinger;
    row.tail_kl_wei = rows_wei[1].kl;
    row.bulk_h_ref = rows_ref[0].hellinger;
    row.bulk_kl_ref = rows_ref[0].kl;
    row.tail_h_ref = rows_ref[1].hellinger;
    row.tail_kl_ref = rows_ref[1].kl;
    row.metrics_valid = true;
}

void check_failure_budget(const std::vector<StudyRow>& rows, int replications) {
    int failed = 0;
    for (const auto& r : rows) {
        if (!r.error.empty()) ++failed;
    }
    if (failed * 20 > replications) {  // more than 5%
        throw FitError("study: " + std::to_string(failed) + " of " + std::to_string(replications) +
                       " replications failed");
    }
}

}  // namespace

GroupAggregate aggregate_rows(const std::string& group, const std::vector<StudyRow>& rows) {
    GroupAggregate agg;
    agg.group = group;
    std::vector<double> u_values;
    int monotone = 0, monotone_total = 0;
    for (const auto& row : rows) {
        if (row.group != group) continue;
        if (!row.error.empty()) {
            ++agg.failed;
            continue;
        }
        ++monotone_total;
        if (row.monotone_reversal) ++monotone;
        if (row.u_star) {
            u_values.push_back(*row.u_star);
        }
        if (row.metrics_valid) {
            ++agg.metric_rows;
            agg.prop_bulk_kl_ei += row.bulk_kl_ei < row.bulk_kl_ref;
            agg.prop_bulk_kl_wei += row.bulk_kl_wei < row.bulk_kl_ref;
            agg.prop_tail_kl_ei += row.tail_kl_ei < row.tail_kl_ref;
            agg.prop_tail_kl_wei += row.tail_kl_wei < row.tail_kl_ref;
            agg.prop_bulk_h_ei += row.bulk_h_ei < row.bulk_h_ref;
            agg.prop_bulk_h_wei += row.bulk_h_wei < row.bulk_h_ref;
            agg.prop_tail_h_ei += row.tail_h_ei < row.tail_h_ref;
            agg.prop_tail_h_wei += row.tail_h_wei < row.tail_h_ref;
        }
    }
    agg.identified = static_cast<int>(u_values.size());
    if (!u_values.empty()) {
        Eigen::Map<const Eigen::ArrayXd> u(u_values.data(), static_cast<Eigen::Index>(u_values.size()));
        agg.u_mean = u.mean();
        agg.u_sd = u_values.size() > 1 ? std::sqrt(variance(u)) : 0.0;
    }
    if (agg.metric_rows > 0) {
        const double d = agg.metric_rows;
        agg.prop_bulk_kl_ei /= d;
        agg.prop_bulk_kl_wei /= d;
        agg.prop_tail_kl_ei /= d;
        agg.prop_tail_kl_wei /= d;
        agg.prop_bulk_h_ei /= d;
        agg.prop_bulk_h_wei /= d;
        agg.prop_tail_h_ei /= d;
        agg.prop_tail_h_wei /= d;
    }
    agg.monotone_fraction = monotone_total > 0 ? static_cast<double>(monotone) / monotone_total : 0.0;
    return agg;
}

StudyResult run_homogeneous_study(const ScenarioSpec& spec) {
    validate(spec);
    if (spec.types.size() != 1) throw std::invalid_argument("run_homogeneous_study: spec must have one type");
    const double true_u = spec.types[0].tail.location;
    const bool true_u_in_grid =
        std::find(spec.thresholds.begin(), spec.thresholds.end(), true_u) != spec.thresholds.end();

    std::vector<StudyRow> rows(static_cast<std::size_t>(spec.replications));
    parallel_for(static_cast<std::size_t>(spec.replications), [&](std::size_t r) {
        StudyRow& row = rows[r];
        row.replication = static_cast<int>(r);
        row.group = "all";
        try {
            const std::uint64_t rep_seed = substream_seed(spec.seed, r);
            const SimulatedData data = generate(spec, rep_seed);
            const LossSample& calib = data.calib.size() > 0 ? data.calib : data.train;

            auto candidates = CandidateSet::fit(data.train, spec.thresholds, spec.bulk_fit);
            const std::uint64_t boot_seed = substream_seed(rep_seed, 1);
            const auto grid = QuantileGrid::tail_weighted(spec.quantile_count, spec.grid_power);
            const auto qem = build_quantile_error_model(calib, grid, spec.bootstrap_count, boot_seed);

            HomOptions options;
            options.mode = spec.prediction;
            options.bootstrap_count = spec.bootstrap_count;
            options.seed = boot_seed;
            options.bulk_fit = spec.bulk_fit;
            const auto lik = hom_log_likelihoods(candidates, qem, calib, options);
            auto report = hom_weights(lik.log_lik, lik.predicted, candidates.priors,
                                      candidates.thresholds(), spec.aggregation, qem.observed);
            row.u_star = identify_threshold(report);
            row.boundary_flag = report.all_reversed;
            row.monotone_reversal = monotone_sign_pattern(report);

            if (true_u_in_grid) {
                Eigen::VectorXd w(report.rows.size()), w_star(report.rows.size());
                std::size_t ref_index = 0;
                for (std::size_t m = 0; m < report.rows.size(); ++m) {
                    w[static_cast<Eigen::Index>(m)] = report.rows[m].w;
                    w_star[static_cast<Eigen::Index>(m)] = report.rows[m].w_star;
                    if (report.rows[m].threshold == true_u) ref_index = m;
                }
                const auto& models = candidates.models;
                const MixtureModel ref = models[ref_index];
                row.ref_threshold = true_u;
                fill_metrics(
                    row, data.test.values,
                    [&](double x) { return posterior_cdf(x, models, w); },
                    [&](double x) { return posterior_cdf(x, models, w_star); },
                    [&](double x) { return mixture_cdf(x, ref); }, true_u, spec.bins);
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });

    check_failure_budget(rows, spec.replications);
    StudyResult out;
    out.scenario = spec.name;
    out.seed = spec.seed;
    out.rows = std::move(rows);
    out.aggregates.push_back(aggregate_rows("all", out.rows));
    return out;
}

StudyResult run_heterogeneous_study(const ScenarioSpec& spec) {
    validate(spec);
    if (spec.types.size() < 2) {
        throw std::invalid_argument("run_heterogeneous_study: spec needs at least 2 types");
    }

    std::vector<std::vector<StudyRow>> rep_rows(static_cast<std::size_t>(spec.replications));
    parallel_for(static_cast<std::size_t>(spec.replications), [&](std::size_t r) {
        auto& rows = rep_rows[r];
        try {
            const std::uint64_t rep_seed = substream_seed(spec.seed, r);
            const SimulatedData data = generate(spec, rep_seed);

            const LossSample& calib = data.calib.size() > 0 ? data.calib : data.train;
            auto candidates = GroupedCandidateSet::fit(data.train, spec.thresholds, spec.bulk_fit);
            HetOptions options;
            options.error_draws = spec.error_draws;
            options.seed = substream_seed(rep_seed, 2);
            auto het = het_weights(candidates, calib, options);
            het_identify(het);

            const auto test_groups = data.test.by_group();
            for (auto& [group, report] : het.groups) {
                StudyRow row;
                row.replication = static_cast<int>(r);
                row.group = group;
                row.u_star = report.u_star;
                row.boundary_flag = report.all_reversed;
                row.monotone_reversal = monotone_sign_pattern(report);

                const auto test_it = test_groups.find(group);
                if (row.u_star && test_it != test_groups.end()) {
                    // Reference = the candidate at the identified threshold,
                    // regions split at the identified value.
                    std::size_t ref_index = 0;
                    Eigen::VectorXd w(report.rows.size()), w_star(report.rows.size());
                    std::vector<MixtureModel> group_models;
                    group_models.reserve(report.rows.size());
                    for (std::size_t m = 0; m < report.rows.size(); ++m) {
                        w[static_cast<Eigen::Index>(m)] = report.rows[m].w;
                        w_star[static_cast<Eigen::Index>(m)] = report.rows[m].w_star;
                        group_models.push_back(candidates.models[m].at(group));
                        if (report.rows[m].threshold == *row.u_star) ref_index = m;
                    }
                    const MixtureModel ref = group_models[ref_index];
                    row.ref_threshold = *row.u_star;
                    try {
                        fill_metrics(
                            row, test_it->second.values,
                            [&](double x) { return posterior_cdf(x, group_models, w); },
                            [&](double x) { return posterior_cdf(x, group_models, w_star); },
                            [&](double x) { return mixture_cdf(x, ref); }, *row.u_star, spec.bins);
                    } catch (const FitError&) {
                        row.metrics_valid = false;  // e.g. empty side at this split
                    }
                }
                rows.push_back(std::move(row));
            }
        } catch (const std::exception& e) {
            rows.clear();
            for (const auto& type : spec.types) {
                StudyRow row;
                row.replication = static_cast<int>(r);
                row.group = type.name;
                row.error = e.what();
                rows.push_back(std::move(row));
            }
        }
    });

    StudyResult out;
    out.scenario = spec.name;
    out.seed = spec.seed;
    for (auto& rows : rep_rows) {
        for (auto& row : rows) out.rows.push_back(std::move(row));
    }
    check_failure_budget(out.rows, spec.replications * static_cast<int>(spec.types.size()));
    for (const auto& type : spec.types) {
        out.aggregates.push_back(aggregate_rows(type.name, out.rows));
    }
    return out;
}

void write_csv(std::ostream& out, const StudyResult& result) {
    out << "replication,group,u_star,boundary_flag,split_u,ref_threshold,"
           "bulk_kl_ei,bulk_kl_wei,bulk_kl_ref,tail_kl_ei,tail_kl_wei,tail_kl_ref,"
           "bulk_h_ei,bulk_h_wei,bulk_h_ref,tail_h_ei,tail_h_wei,tail_h_ref,"
           "metrics_valid,monotone_reversal,error\n";
    char buf[640];
    for (const auto& r : result.rows) {
        std::string u_star;
        if (r.u_star) {
            char tmp[64];
            std::snprintf(tmp, sizeof(tmp), "%.17g", *r.u_star);
            u_star = tmp;
        }
        std::string error = r.error;
        for (char& c : error) {
            if (c == ',' || c == '\n' || c == '\r') c = ';';
        }
        std::snprintf(buf, sizeof(buf),
                      "%d,%s,%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g,%.17g,%.17g,%.17g,%d,%d,%s\n",
                      r.replication, r.group.c_str(), u_star.c_str(), r.boundary_flag ? 1 : 0,
                      r.split_u, r.ref_threshold, r.bulk_kl_ei, r.bulk_kl_wei, r.bulk_kl_ref,
                      r.tail_kl_ei, r.tail_kl_wei, r.tail_kl_ref, r.bulk_h_ei, r.bulk_h_wei,
                      r.bulk_h_ref, r.tail_h_ei, r.tail_h_wei, r.tail_h_ref, r.metrics_valid ? 1 : 0,
                      r.monotone_reversal ? 1 : 0, error.c_str());
        out << buf;
    }
}

}  // namespace tailmix
