#include "ncd/projection.hpp"
#include "ncd/scenario.hpp"
#include "ncd/synthetic.hpp"
#include "ncd/trend.hpp"

#include <benchmark/benchmark.h>

namespace {

struct Stratum {
    ncd::RunConfig config;
    ncd::CountryDataset ds;
    ncd::BauTrajectories bau;
};

// Arg: disease count (0 = the four demo diseases).
Stratum stratum(int diseases) {
    Stratum s;
    ncd::synthetic::StratumParams p;
    p.diseases = diseases == 0 ? ncd::synthetic::demo_diseases() : ncd::synthetic::generic_diseases(diseases);
    s.ds = ncd::synthetic::make_stratum(p, s.config);
    s.bau = ncd::build_bau(s.ds, s.config);
    return s;
}

void BM_BuildBau(benchmark::State &state) {
    const Stratum s = stratum(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ncd::build_bau(s.ds, s.config));
    }
}
BENCHMARK(BM_BuildBau)->Arg(4)->Arg(44)->Unit(benchmark::kMillisecond);

void BM_ProjectBau(benchmark::State &state) {
    const Stratum s = stratum(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ncd::run_projection(s.ds, s.bau, s.config));
    }
}
BENCHMARK(BM_ProjectBau)->Arg(4)->Arg(44)->Unit(benchmark::kMillisecond);

void BM_ProjectScenario(benchmark::State &state) {
    const Stratum s = stratum(static_cast<int>(state.range(0)));
    const auto scen =
        ncd::apply_acceleration(s.bau, ncd::ScenarioSpec::for_kind(ncd::ScenarioKind::treatment_default, 0.02, s.config));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ncd::run_projection(s.ds, s.bau, scen, s.config));
    }
}
BENCHMARK(BM_ProjectScenario)->Arg(4)->Arg(44)->Unit(benchmark::kMillisecond);

void BM_SolvePrevention(benchmark::State &state) {
    const Stratum s = stratum(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ncd::solve_acceleration(s.ds, s.bau, ncd::ScenarioKind::prevention, s.config));
    }
}
BENCHMARK(BM_SolvePrevention)->Arg(4)->Arg(44)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
