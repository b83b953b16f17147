// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "rissim/channel.hpp"
#include "rissim/coexist.hpp"
#include "rissim/deploy.hpp"
#include "rissim/numkernel.hpp"
#include "rissim/random.hpp"
#include "rissim/ris.hpp"

using namespace rissim;

namespace {

void BM_Svd(benchmark::State &state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const ComplexMatrix h = ComplexMatrix::gaussian(n, n, rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(singular_values(h));
}
BENCHMARK(BM_Svd)->Arg(4)->Arg(16)->Arg(64);

void BM_WaterfillCapacity(benchmark::State &state)
{
    Rng rng(2);
    const ComplexMatrix h = ComplexMatrix::gaussian(8, 8, rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(waterfill_capacity(h, 10.0, 1.0));
}
BENCHMARK(BM_WaterfillCapacity);

void BM_AlignDiscrete(benchmark::State &state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    ComplexVector g(n), h(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = rng.complex_normal(1.0);
        h[i] = rng.complex_normal(1.0);
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(align_phases_discrete(g, h, Complex(0.0, 0.0), 2));
}
BENCHMARK(BM_AlignDiscrete)->Arg(16)->Arg(256);

void BM_OptimizePhasesMimo(benchmark::State &state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(4);
    ChannelRealization real;
    real.g_nb_ris = ComplexMatrix::gaussian(n, 4, rng);
    real.h_ris_ue = ComplexMatrix::gaussian(4, n, rng);
    const RisPanel panel(n);
    for (auto _ : state)
        benchmark::DoNotOptimize(optimize_phases_mimo(real, panel, 10.0, 1.0, 20, 1e-9));
}
BENCHMARK(BM_OptimizePhasesMimo)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SnrMap(benchmark::State &state)
{
    Scene s;
    s.extent = {0, 0, 200, 100};
    s.obstacles = {{80, 30, 120, 70}, {20, 10, 30, 20}};
    s.base_stations = {{{20, 50, 25}, 30.0, 8}};
    s.candidate_sites = {{60, 95, 10}};
    s.grid_resolution = static_cast<double>(state.range(0)) / 10.0;
    DeploymentPlan plan;
    plan.placed_panels.push_back({0, RisPanel(256, s.candidate_sites[0])});
    ChannelParams p;
    p.noise_power = 1e-12;
    for (auto _ : state)
        benchmark::DoNotOptimize(snr_map(s, plan, p, 10.0));
}
BENCHMARK(BM_SnrMap)->Arg(20)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_LbtSim(benchmark::State &state)
{
    CoexScenario s;
    for (auto _ : state)
        benchmark::DoNotOptimize(run_lbt_sim(s, LbtConfig{}, 10000, 5));
}
BENCHMARK(BM_LbtSim)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
