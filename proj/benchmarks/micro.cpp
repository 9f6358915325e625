// Microbenchmarks for the hot paths: traffic solving, analytic metrics,
// and raw discrete-event simulation throughput.
#include <benchmark/benchmark.h>

#include <qnet/analytic.hpp>
#include <qnet/model.hpp>
#include <qnet/optimizer.hpp>
#include <qnet/scenarios.hpp>
#include <qnet/simulator.hpp>
#include <qnet/traffic.hpp>

#include <random>

using namespace qnet;

namespace {

/// Serial chain of n single-server nodes, every job visiting all of them.
NetworkSpec tandem(int n) {
    NetworkSpec spec;
    spec.nodes.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        spec.nodes[static_cast<std::size_t>(i)].id = "n" + std::to_string(i);
        spec.nodes[static_cast<std::size_t>(i)].service_rate = 100.0;
    }
    const auto sz = static_cast<std::size_t>(n);
    spec.routing.entry.assign(sz, 0.0);
    spec.routing.entry[0] = 1.0;
    spec.routing.hop.assign(sz, std::vector<double>(sz, 0.0));
    for (std::size_t i = 0; i + 1 < sz; ++i) spec.routing.hop[i][i + 1] = 1.0;
    spec.arrival_rate = 10.0;
    return spec;
}

void SolveTrafficPreset(benchmark::State& state) {
    const auto spec = preset_cims(1.0);
    for (auto _ : state) {
        auto ts = solve_traffic(spec);
        benchmark::DoNotOptimize(ts);
    }
}
BENCHMARK(SolveTrafficPreset);

void SolveTrafficTandem(benchmark::State& state) {
    const auto spec = tandem(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto ts = solve_traffic(spec);
        benchmark::DoNotOptimize(ts);
    }
}
BENCHMARK(SolveTrafficTandem)->Arg(8)->Arg(32)->Arg(128);

void ChainMetricsPreset(benchmark::State& state) {
    const auto spec = preset_cims(1.0);
    for (auto _ : state) {
        auto cm = chain_metrics(spec);
        benchmark::DoNotOptimize(cm);
    }
}
BENCHMARK(ChainMetricsPreset);

void ChainMetricsMulticlass(benchmark::State& state) {
    const auto spec =
        make_shared_hss_chain(0.3, 0.6, Discipline::ps, 3e-3, 6e-3, 50.0);
    for (auto _ : state) {
        auto cm = chain_metrics(spec);
        benchmark::DoNotOptimize(cm);
    }
}
BENCHMARK(ChainMetricsMulticlass);

void MultiServerMetrics(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const double mu = 100.0;
    const double lam = 0.7 * m * mu;
    for (auto _ : state) {
        auto nm = mmm_metrics(lam, mu, m);
        benchmark::DoNotOptimize(nm);
    }
}
BENCHMARK(MultiServerMetrics)->Arg(2)->Arg(8)->Arg(32);

void BatchWaiting(benchmark::State& state) {
    BulkSpec b;
    b.kind = BulkSpec::Kind::uniform;
    b.size = 100;
    for (auto _ : state) {
        double w = bulk_waiting(1.0, 101.0, b);
        benchmark::DoNotOptimize(w);
    }
}
BENCHMARK(BatchWaiting);

void AllocationSolve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    AllocationProblem p;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lam_d(0.5, 5.0), c_d(0.5, 4.0);
    double base = 0.0;
    for (int i = 0; i < n; ++i) {
        p.arrival_rates.push_back(lam_d(rng));
        p.capacity_factors.push_back(c_d(rng));
        base += p.arrival_rates.back() * p.capacity_factors.back();
    }
    p.budget = 2.0 * base + 100.0;
    for (auto _ : state) {
        auto s = solve_allocation(p);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(AllocationSolve)->Arg(8)->Arg(128);

/// End-to-end simulator throughput, reported as completed requests/second.
void SimulateThroughput(benchmark::State& state) {
    SimConfig cfg;
    cfg.spec = preset_cims(50.0);
    cfg.job_horizon = state.range(0);
    cfg.replications = 1;
    cfg.seed = 31337;
    for (auto _ : state) {
        auto res = simulate(cfg);
        benchmark::DoNotOptimize(res);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(SimulateThroughput)->Arg(20000)->Unit(benchmark::kMillisecond);

} // namespace
