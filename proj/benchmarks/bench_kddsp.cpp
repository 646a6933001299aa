#include <benchmark/benchmark.h>

#include <map>

#include "kddsp/brkga.hpp"
#include "kddsp/influence.hpp"
#include "kddsp/metrics.hpp"

using namespace kddsp;

namespace {

const DirectedGraph &graph_of(std::size_t n) {
    static std::map<std::size_t, DirectedGraph> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, generate_erdos_renyi(n, 6.0 / n, n)).first;
    return it->second;
}

std::vector<NodeId> spread_seeds(std::size_t n, std::size_t k) {
    std::vector<NodeId> s;
    for (std::size_t i = 0; i < k; ++i) s.push_back(static_cast<NodeId>(i * n / k));
    return s;
}

}  // namespace

static void BM_Coverage(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const int d = static_cast<int>(state.range(1));
    const auto &g = graph_of(n);
    CoverageEvaluator eval(g);
    const auto seeds = spread_seeds(n, 32);
    for (auto _ : state) benchmark::DoNotOptimize(eval.count(seeds, d));
}
BENCHMARK(BM_Coverage)->ArgsProduct({{1000, 10000, 100000}, {1, 2, 3}});

static void BM_Decode(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto &g = graph_of(n);
    Decoder dec(g, 32, 2);
    Rng rng(1);
    Individual ind;
    ind.keys.resize(n);
    for (double &k : ind.keys) k = uniform01(rng);
    const std::vector<double> probs(n, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(dec.evaluate(ind, probs));
}
BENCHMARK(BM_Decode)->Arg(1000)->Arg(10000)->Arg(100000);

static void BM_Betweenness(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto &g = graph_of(n);
    for (auto _ : state) benchmark::DoNotOptimize(compute_betweenness(g, static_cast<unsigned>(state.range(1))));
}
BENCHMARK(BM_Betweenness)->Args({500, 1})->Args({2000, 1})->Args({2000, 4})->Unit(benchmark::kMillisecond);

static void BM_Generation(benchmark::State &state) {
    const auto &g = graph_of(5000);
    BrkgaConfig c;
    c.budget.generations = 1;
    BrkgaSolver solver(g, 32, 2, GuidanceMode::uniform(), c);
    auto pop = solver.initial_population();
    std::size_t gen = 1;
    for (auto _ : state) benchmark::DoNotOptimize(solver.evolve(pop, gen++));
}
BENCHMARK(BM_Generation)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
