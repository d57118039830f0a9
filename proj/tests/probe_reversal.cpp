// Dev probe: single-draw weight tables for the homogeneous design under both
// bulk-fit modes and prediction modes. Not registered with ctest.
#include <cstdio>
#include <string>

#include "tailmix/bma.hpp"
#include "tailmix/metrics.hpp"
#include "tailmix/rng.hpp"
#include "tailmix/simulation.hpp"

using namespace tailmix;

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 20250801ULL;

    ScenarioSpec spec;
    spec.types.push_back(TypeSpec{"t1", 1.0, LognormalParams{5.0, 1.0},
                                  GpdParams{700.0, 600.0, 0.2}, 0.05});
    spec.n = 10000;
    spec.thresholds = {400, 500, 600, 700, 800, 900, 1000};
    spec.replications = 1;
    spec.seed = seed;

    const SimulatedData data = generate(spec, seed);
    std::printf("n train=%ld calib=%ld test=%ld exceed(700)=%.4f\n", (long)data.train.size(),
                (long)data.calib.size(), (long)data.test.size(),
                (double)(data.train.values > 700.0).count() / data.train.size());

    for (BulkFit bf : {BulkFit::naive, BulkFit::truncated}) {
        for (PredictionMode pm : {PredictionMode::refit, PredictionMode::fixed}) {
            CandidateSet candidates = CandidateSet::fit(data.train, spec.thresholds, bf);
            const std::uint64_t boot_seed = substream_seed(seed, 1);
            const auto grid = QuantileGrid::equally_spaced(spec.quantile_count);
            const auto qem = build_quantile_error_model(data.calib, grid, spec.bootstrap_count, boot_seed);
            HomOptions options{pm, spec.bootstrap_count, boot_seed, bf};
            const auto lik = hom_log_likelihoods(candidates, qem, data.calib, options);
            auto report = hom_weights(lik.log_lik, lik.predicted, candidates.priors,
                                      candidates.thresholds(), WeightAggregation::per_quantile,
                                      qem.observed);
            identify_threshold(report);

            std::printf("\nbulk=%s mode=%s  u*=%s%s\n", bf == BulkFit::naive ? "naive" : "trunc",
                        pm == PredictionMode::refit ? "refit" : "fixed",
                        report.u_star ? std::to_string((int)*report.u_star).c_str() : "none",
                        report.all_reversed ? " (all reversed)" : "");
            for (const auto& row : report.rows) {
                std::printf("  u=%5.0f  w=%.4f  w*=%.4f  %s\n", row.threshold, row.w, row.w_star,
                            row.w_star >= row.w ? "<-- reversed" : "");
            }
            // Bulk/tail KL vs the true-threshold single model.
            Eigen::VectorXd w(report.rows.size()), ws(report.rows.size());
            std::size_t i700 = 0;
            for (std::size_t m = 0; m < report.rows.size(); ++m) {
                w[m] = report.rows[m].w;
                ws[m] = report.rows[m].w_star;
                if (report.rows[m].threshold == 700.0) i700 = m;
            }
            const auto& models = candidates.models;
            auto r_ei = bulk_tail_report(data.test.values,
                                         [&](double x) { return posterior_cdf(x, models, w); },
                                         "ei", 700.0, 200);
            auto r_wei = bulk_tail_report(data.test.values,
                                          [&](double x) { return posterior_cdf(x, models, ws); },
                                          "wei", 700.0, 200);
            auto r_ref = bulk_tail_report(data.test.values,
                                          [&](double x) { return mixture_cdf(x, models[i700]); },
                                          "ref", 700.0, 200);
            std::printf("  bulkKL: ei=%.5f wei=%.5f ref=%.5f | tailKL: ei=%.5f wei=%.5f ref=%.5f\n",
                        r_ei[0].kl, r_wei[0].kl, r_ref[0].kl, r_ei[1].kl, r_wei[1].kl, r_ref[1].kl);
        }
    }
    return 0;
}
