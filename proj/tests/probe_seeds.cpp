// Dev probe: distribution of the identified threshold across seeds.
#include <cstdio>
#include <map>
#include <string>
#include <cmath>

#include "tailmix/bma.hpp"
#include "tailmix/rng.hpp"
#include "tailmix/simulation.hpp"

using namespace tailmix;

int main(int argc, char** argv) {
    const int runs = argc > 1 ? std::stoi(argv[1]) : 20;
    const int mode_arg = argc > 2 ? std::stoi(argv[2]) : 1;  // 0 refit, 1 fixed
    const int bulk_arg = argc > 3 ? std::stoi(argv[3]) : 0;  // 0 naive, 1 trunc
    const int q_count = argc > 4 ? std::stoi(argv[4]) : 100;
    const int b_count = argc > 5 ? std::stoi(argv[5]) : 200;
    const int agg_arg = argc > 6 ? std::stoi(argv[6]) : 1;  // 0 printed, 1 per-quantile
    const int calib_arg = argc > 7 ? std::stoi(argv[7]) : 0;  // 0 separate 21%, 1 calib = train (70/30)
    const double grid_power = argc > 8 ? std::stod(argv[8]) : 1.0;

    ScenarioSpec spec;
    spec.types.push_back(TypeSpec{"t1", 1.0, LognormalParams{5.0, 1.0},
                                  GpdParams{700.0, 600.0, 0.2}, 0.05});
    spec.n = 10000;
    spec.thresholds = {400, 500, 600, 700, 800, 900, 1000};
    spec.quantile_count = q_count;
    spec.bootstrap_count = b_count;
    if (calib_arg == 1) spec.split = {0.7, 0.0, 0.3};
    if (calib_arg == 2) spec.split = {0.8, 0.0, 0.2};

    const BulkFit bf = bulk_arg ? BulkFit::truncated : BulkFit::naive;
    const PredictionMode pm = mode_arg ? PredictionMode::fixed : PredictionMode::refit;
    const WeightAggregation agg =
        agg_arg ? WeightAggregation::per_quantile : WeightAggregation::likelihood_mean;

    std::map<std::string, int> histogram;
    double sum = 0.0;
    int found = 0;
    for (int r = 0; r < runs; ++r) {
        const std::uint64_t base = [] {
            const char* env = std::getenv("PROBE_BASE");
            return env ? std::stoull(env) : 777ULL;
        }();
        const std::uint64_t seed = substream_seed(base, r);
        const SimulatedData data = generate(spec, seed);
        const LossSample& calib = calib_arg ? data.train : data.calib;
        CandidateSet candidates = CandidateSet::fit(data.train, spec.thresholds, bf);
        const std::uint64_t boot_seed = substream_seed(seed, 1);
        Eigen::ArrayXd probs(spec.quantile_count);
        for (int i = 1; i <= spec.quantile_count; ++i) {
            const double base = static_cast<double>(i) / (spec.quantile_count + 1.0);
            probs[i - 1] = 1.0 - std::pow(1.0 - base, grid_power);
        }
        const QuantileGrid grid{probs};
        const auto qem = build_quantile_error_model(calib, grid, spec.bootstrap_count, boot_seed);
        HomOptions options{pm, spec.bootstrap_count, boot_seed, bf};
        const auto lik = hom_log_likelihoods(candidates, qem, calib, options);
        auto report = hom_weights(lik.log_lik, lik.predicted, candidates.priors,
                                  candidates.thresholds(), agg, qem.observed);
        identify_threshold(report);
        if (report.u_star) {
            histogram[std::to_string((int)*report.u_star)]++;
            sum += *report.u_star;
            ++found;
        } else {
            histogram["none"]++;
        }
        if (std::getenv("PROBE_VERBOSE") && (!report.u_star || *report.u_star != 700.0)) {
            std::printf("  seed run %d -> %s\n", r,
                        report.u_star ? std::to_string((int)*report.u_star).c_str() : "none");
            for (const auto& row : report.rows) {
                std::printf("    u=%5.0f w=%.4f w*=%.4f d=%+.5f\n", row.threshold, row.w,
                            row.w_star, row.w_star - row.w);
            }
        }
    }
    std::printf("mode=%s bulk=%s agg=%s calib=%s Q=%d B=%d pow=%.2f: ", mode_arg ? "fixed" : "refit",
                bulk_arg ? "trunc" : "naive", agg_arg ? "perq" : "printed",
                calib_arg ? "train" : "split", q_count, b_count, grid_power);
    for (const auto& [k, v] : histogram) std::printf("%s:%d ", k.c_str(), v);
    if (found) std::printf(" mean=%.1f", sum / found);
    std::printf("\n");
    return 0;
}
