// Compares the bit allocations chosen by each solver on one channel draw.
//   allocation_demo [seed] [num_streams]

#include "vrba/allocation.hpp"

#include <cstdio>
#include <cstdlib>

int main(int argc, char **argv)
{
    using namespace vrba;
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;
    const int Ns = argc > 2 ? std::atoi(argv[2]) : 8;
    const int Nb = 4;

    ArrayConfig cfg;
    cfg.num_streams = Ns;
    const ChannelRealization chan = generate_channel(cfg, ScattererScenario{}, seed);
    const HybridCombiner hc = design_combiner(chan);
    PowerModel pm;
    pm.N_s = Ns;
    pm.P_ADC_budget = 0.5 * 2.0 * pm.step_power() * Ns * std::exp2(Nb);
    const SolutionSpace space(Ns, Nb, pm);

    std::printf("channel seed %llu, N_s=%d, |B_set|=%llu, P_ADC budget %.4f W\n",
                static_cast<unsigned long long>(seed), Ns, static_cast<unsigned long long>(space.cardinality()),
                pm.P_ADC_budget);
    std::printf("%6s  %-8s  %-26s  %10s  %10s  %12s\n", "SNR", "solver", "b*", "rate", "power W", "EE bit/Hz/J");
    for (double snr : {-10.0, 0.0, 10.0, 20.0}) {
        const LinkContext ctx(chan, hc, pm, std::pow(10.0, snr / 10.0), 1.0);
        const QTable qt(ctx, Nb);
        SaConfig sa9;
        sa9.seed = seed;
        SaConfig sa5 = sa9;
        sa5.r = 0.5;
        const std::pair<const char *, AllocationResult> rows[] = {
            {"fixed1", evaluate_fixed(1, ctx, Nb)},
            {"fixed2", evaluate_fixed(2, ctx, Nb)},
            {"es", solve_exhaustive(space, ctx)},
            {"qsearch", solve_qsearch(space, qt, ctx)},
            {"sa9", solve_sa(space, qt, ctx, sa9)},
            {"sa5", solve_sa(space, qt, ctx, sa5)},
        };
        for (const auto &[name, res] : rows) {
            std::printf("%6.0f  %-8s  %-26s  %10.4f  %10.4f  %12.6f\n", snr, name, res.b_star.to_string().c_str(),
                        res.report.rate_bits, res.report.total_power, res.report.ee);
        }
    }
    return 0;
}
