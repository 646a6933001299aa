#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "kddsp/brkga.hpp"
#include "kddsp/error.hpp"
#include "oracles.hpp"

using namespace kddsp;

namespace {

BrkgaConfig small_config(std::size_t generations, std::uint64_t seed = 1) {
    BrkgaConfig c;
    c.population_size = 30;
    c.rng_seed = seed;
    c.budget.generations = generations;
    return c;
}

std::vector<double> random_vector(Rng &rng, std::size_t n, double lo) {
    std::vector<double> v(n);
    for (auto &x : v) x = lo + (1.0 - lo) * uniform01(rng);
    return v;
}

void expect_same_trajectory(const RunResult &a, const RunResult &b) {
    ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
    for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
        EXPECT_EQ(a.trajectory[i].best_fitness, b.trajectory[i].best_fitness);
        EXPECT_EQ(a.trajectory[i].evaluations, b.trajectory[i].evaluations);
        EXPECT_EQ(a.trajectory[i].best_solution, b.trajectory[i].best_solution);
        EXPECT_EQ(a.trajectory[i].params, b.trajectory[i].params);
    }
    EXPECT_EQ(a.best.seeds.nodes(), b.best.seeds.nodes());
}

}  // namespace

TEST(Population, SeedIndividualAndKeyRange) {
    auto c = small_config(1);
    const auto pop = init_population(c, 50);
    ASSERT_EQ(pop.size(), 30u);
    for (double k : pop.back().keys) EXPECT_EQ(k, 0.5);
    for (std::size_t i = 0; i + 1 < pop.size(); ++i)
        for (double k : pop[i].keys) {
            EXPECT_GE(k, 0.0);
            EXPECT_LT(k, 1.0);
        }
    c.seed_individual = false;
    const auto plain = init_population(c, 50);
    EXPECT_FALSE(std::all_of(plain.back().keys.begin(), plain.back().keys.end(), [](double k) { return k == 0.5; }));
    EXPECT_EQ(plain[0].keys, pop[0].keys);
}

TEST(Crossover, InheritanceProbability) {
    Individual elite{std::vector<double>(100000, 1.0), {}, {}};
    Individual other{std::vector<double>(100000, 0.0), {}, {}};
    Rng rng(9);
    const auto child = crossover(elite, other, 0.7, rng);
    const double share = std::accumulate(child.keys.begin(), child.keys.end(), 0.0) / 100000.0;
    EXPECT_NEAR(share, 0.7, 0.01);

    const auto copy = crossover(elite, other, 1.0, rng);
    EXPECT_EQ(copy.keys, elite.keys);

    Individual twin{std::vector<double>{0.1, 0.2, 0.3}, {}, {}};
    EXPECT_EQ(crossover(twin, twin, 0.6, rng).keys, twin.keys);

    Individual shorter{std::vector<double>{0.1}, {}, {}};
    EXPECT_THROW(crossover(twin, shorter, 0.7, rng), ShapeError);
}

TEST(Decoder, PathGraphHandCase) {
    const auto g = DirectedGraph::from_arcs(4, std::vector<Arc>{{0, 1}, {1, 2}, {2, 3}});
    Decoder dec(g, 2, 1);
    const std::vector<double> keys(4, 0.5), probs(4, 1.0);
    EXPECT_EQ(dec.select(keys, probs), (std::vector<NodeId>{0, 1}));
    Individual ind{keys, {}, {}};
    EXPECT_EQ(dec.evaluate(ind, probs), 3u);
    EXPECT_EQ(ind.selection, (std::vector<NodeId>{0, 1}));
}

TEST(Decoder, GuidanceBreaksEqualKeys) {
    const auto star = DirectedGraph::from_arcs(5, std::vector<Arc>{{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    Decoder dec(star, 1, 1);
    EXPECT_EQ(dec.select(std::vector<double>(5, 0.5), std::vector<double>{0.6, 0.6, 0.9, 0.6, 0.6}),
              std::vector<NodeId>{2});
}

TEST(Decoder, MatchesFullSortOracle) {
    Rng rng(31);
    for (std::uint32_t t = 0; t < 200; ++t) {
        const std::size_t n = 20 + t % 30;
        const auto g = oracle::random_digraph(n, 0.1, t);
        const std::size_t k = 1 + t % 7;
        Decoder dec(g, k, 2);
        auto keys = random_vector(rng, n, 0.0);
        auto probs = random_vector(rng, n, 0.5);
        if (t % 4 == 0) std::fill(keys.begin(), keys.end(), 0.5);
        if (t % 5 == 0) std::fill(probs.begin(), probs.end(), 1.0);
        std::vector<double> phi(n);
        for (NodeId v = 0; v < n; ++v) phi[v] = double(g.out_degree(v)) * keys[v] * probs[v];
        EXPECT_EQ(dec.select(keys, probs), oracle::top_k_by_sort(phi, k));
    }
}

TEST(Decoder, ScalingProbabilitiesDoesNotChangeSelection) {
    Rng rng(4);
    for (std::uint32_t t = 0; t < 50; ++t) {
        const auto g = oracle::random_digraph(40, 0.08, 100 + t);
        Decoder dec(g, 5, 1);
        const auto keys = random_vector(rng, 40, 0.0);
        const auto probs = random_vector(rng, 40, 0.5);
        auto scaled = probs;
        for (auto &p : scaled) p *= 4.0;
        EXPECT_EQ(dec.select(keys, probs), dec.select(keys, scaled));
    }
}

TEST(Decoder, RejectsBadShapes) {
    const auto g = generate_erdos_renyi(5, 0.5, 1);
    EXPECT_THROW(Decoder(g, 0, 1), ConfigError);
    EXPECT_THROW(Decoder(g, 6, 1), ConfigError);
    EXPECT_THROW(Decoder(g, 2, 0), ConfigError);
    Decoder dec(g, 2, 1);
    EXPECT_THROW(dec.select(std::vector<double>(4, 0.5), std::vector<double>(5, 1.0)), ShapeError);
}

TEST(Solver, ElitesSurviveUnchanged) {
    const auto g = generate_erdos_renyi(80, 0.04, 3);
    BrkgaSolver solver(g, 6, 2, GuidanceMode::uniform(), small_config(10));
    auto pop = solver.initial_population();
    for (std::size_t gen = 1; gen <= 10; ++gen) {
        std::vector<std::size_t> order(pop.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return *pop[a].fitness > *pop[b].fitness; });
        const auto best_before = *pop[order[0]].fitness;
        const auto elite_keys = pop[order[0]].keys;
        const auto stats = solver.evolve(pop, gen);
        EXPECT_EQ(pop[0].keys, elite_keys);
        EXPECT_GE(*pop[best_index(pop)].fitness, best_before);
        EXPECT_EQ(pop.size(), 30u);
        EXPECT_EQ(stats.elites + stats.mutants + stats.offspring, 30u);
        for (const auto &ind : pop) EXPECT_TRUE(ind.fitness.has_value());
    }
}

TEST(Solver, OnlyNewIndividualsAreEvaluated) {
    const auto g = generate_erdos_renyi(60, 0.05, 2);
    const auto c = small_config(7);
    const auto r = BrkgaSolver(g, 4, 1, GuidanceMode::uniform(), c).run();
    EXPECT_EQ(r.generations, 7u);
    EXPECT_EQ(r.evaluations, c.population_size + 7 * (c.mutant_count() + c.crossover_count()));
    for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
        EXPECT_EQ(r.trajectory[i].evaluations - r.trajectory[i - 1].evaluations,
                  c.mutant_count() + c.crossover_count());
        EXPECT_GE(r.trajectory[i].best_fitness, r.trajectory[i - 1].best_fitness);
    }
}

TEST(Solver, CountsMatchFractions) {
    BrkgaConfig c;
    c.population_size = 100;
    EXPECT_EQ(c.elite_count(), 15u);
    EXPECT_EQ(c.mutant_count(), 15u);
    EXPECT_EQ(c.crossover_count(), 70u);
    c.population_size = 5;
    EXPECT_EQ(c.elite_count(), 1u);
    EXPECT_EQ(c.mutant_count(), 1u);
}

TEST(Solver, FixedSeedIsDeterministic) {
    const auto g = generate_erdos_renyi(100, 0.03, 8);
    const auto a = BrkgaSolver(g, 8, 2, GuidanceMode::uniform(), small_config(15, 42)).run();
    const auto b = BrkgaSolver(g, 8, 2, GuidanceMode::uniform(), small_config(15, 42)).run();
    expect_same_trajectory(a, b);
    std::ostringstream sa, sb;
    write_trajectory_csv(sa, a, false, false);
    write_trajectory_csv(sb, b, false, false);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(Solver, DynamicGuidanceIsReproducibleAndChanges) {
    const auto g = generate_erdos_renyi(70, 0.05, 12);
    const auto m = compute_metrics(g);
    const auto a = BrkgaSolver(g, 5, 2, GuidanceMode::dynamic_random(7), small_config(6), &m).run();
    const auto b = BrkgaSolver(g, 5, 2, GuidanceMode::dynamic_random(7), small_config(6), &m).run();
    expect_same_trajectory(a, b);
    ASSERT_TRUE(a.trajectory[1].params && a.trajectory[2].params);
    EXPECT_NE(a.trajectory[1].params, a.trajectory[2].params);

    const auto s = BrkgaSolver(g, 5, 2, GuidanceMode::static_random(7), small_config(6), &m).run();
    for (const auto &r : s.trajectory) EXPECT_EQ(r.params, s.trajectory[0].params);

    EXPECT_THROW(BrkgaSolver(g, 5, 2, GuidanceMode::dynamic_random(7), small_config(6)), ConfigError);
}

TEST(Solver, ThreadsGiveSerialResult) {
    const auto g = generate_erdos_renyi(120, 0.03, 5);
    auto c = small_config(8, 3);
    const auto serial = BrkgaSolver(g, 10, 2, GuidanceMode::uniform(), c).run();
    c.threads = 4;
    const auto parallel = BrkgaSolver(g, 10, 2, GuidanceMode::uniform(), c).run();
    expect_same_trajectory(serial, parallel);
}

TEST(Solver, ZeroGenerationBudget) {
    const auto g = generate_erdos_renyi(30, 0.1, 1);
    const auto r = BrkgaSolver(g, 3, 1, GuidanceMode::uniform(), small_config(0)).run();
    EXPECT_EQ(r.generations, 0u);
    EXPECT_EQ(r.evaluations, 30u);
    ASSERT_EQ(r.trajectory.size(), 1u);
    EXPECT_EQ(r.trajectory[0].best_fitness, r.best.objective);
}

TEST(Solver, EvaluationBudgetStopsRun) {
    const auto g = generate_erdos_renyi(30, 0.1, 1);
    BrkgaConfig c;
    c.population_size = 30;
    c.budget.evaluations = 100;
    const auto r = BrkgaSolver(g, 3, 1, GuidanceMode::uniform(), c).run();
    EXPECT_GE(r.evaluations, 100u);
    EXPECT_LT(r.evaluations, 100u + c.mutant_count() + c.crossover_count());
}

TEST(Solver, FindsOptimumOnTinyInstances) {
    int hits = 0;
    for (std::uint32_t t = 0; t < 20; ++t) {
        const auto g = oracle::random_digraph(12, 0.2, 300 + t);
        const auto best = oracle::exhaustive_optimum(oracle::adjacency(g), 2, 1);
        const auto r = BrkgaSolver(g, 2, 1, GuidanceMode::uniform(), small_config(40, t + 1)).run();
        EXPECT_LE(r.best.objective, best);
        hits += r.best.objective == best;
    }
    EXPECT_GE(hits, 19);
}

TEST(Solver, BestSolutionIsConsistent) {
    const auto g = generate_erdos_renyi(90, 0.04, 17);
    const auto r = BrkgaSolver(g, 7, 2, GuidanceMode::uniform(), small_config(12)).run();
    EXPECT_EQ(r.best.seeds.size(), 7u);
    EXPECT_EQ(oracle::influence(oracle::adjacency(g), r.best.seeds.nodes(), 2).size(), r.best.objective);
    EXPECT_EQ(r.trajectory.back().best_fitness, r.best.objective);
}

TEST(Solver, ProbabilityChecks) {
    const auto g = generate_erdos_renyi(20, 0.2, 1);
    const auto m = compute_metrics(g);
    const auto other = compute_metrics(generate_erdos_renyi(20, 0.2, 2));
    const auto p = probabilities_for_graph(other, validate_params({.2, .2, .2, .2, .2}, {.5, .5, .5, .5, .5}));
    EXPECT_THROW(BrkgaSolver(g, 3, 1, GuidanceMode::fixed(p), small_config(1), &m), ShapeError);
    EXPECT_NO_THROW(BrkgaSolver(g, 3, 1, GuidanceMode::fixed(p), small_config(1)));
    EXPECT_THROW(BrkgaSolver(g, 3, 1, GuidanceMode::fixed(uniform_guidance(19)), small_config(1)), ShapeError);
}

TEST(Config, Validation) {
    auto bad = [](auto mutate) {
        BrkgaConfig c;
        c.budget.generations = 1;
        mutate(c);
        return c;
    };
    EXPECT_NO_THROW(bad([](BrkgaConfig &) {}).validate());
    EXPECT_THROW(bad([](BrkgaConfig &c) { c.population_size = 2; }).validate(), ConfigError);
    EXPECT_THROW(bad([](BrkgaConfig &c) { c.elite_fraction = 0.0; }).validate(), ConfigError);
    EXPECT_THROW(bad([](BrkgaConfig &c) { c.mutant_fraction = 1.0; }).validate(), ConfigError);
    EXPECT_THROW(bad([](BrkgaConfig &c) { c.elite_fraction = 0.5, c.mutant_fraction = 0.5; }).validate(), ConfigError);
    EXPECT_THROW(bad([](BrkgaConfig &c) { c.prob_elite = 0.5; }).validate(), ConfigError);
    EXPECT_THROW(bad([](BrkgaConfig &c) { c.budget = Budget{}; }).validate(), ConfigError);
    EXPECT_THROW(bad([](BrkgaConfig &c) { c.threads = 0; }).validate(), ConfigError);
}

TEST(Trajectory, CsvColumns) {
    const auto g = generate_erdos_renyi(30, 0.1, 1);
    const auto m = compute_metrics(g);
    const auto r = BrkgaSolver(g, 3, 1, GuidanceMode::static_random(1), small_config(2), &m).run();
    std::ostringstream out;
    write_trajectory_csv(out, r, true, false);
    const auto text = out.str();
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "generation,evaluations,best_fitness,best_solution,alpha_1,alpha_2,alpha_3,alpha_4,alpha_5,"
              "beta_1,beta_2,beta_3,beta_4,beta_5");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}
