#include <gtest/gtest.h>

#include <random>

#include "kddsp/error.hpp"
#include "kddsp/influence.hpp"
#include "oracles.hpp"

using namespace kddsp;

namespace {

DirectedGraph path(std::size_t n) {
    std::vector<Arc> arcs;
    for (NodeId v = 0; v + 1 < n; ++v) arcs.push_back({v, v + 1});
    return DirectedGraph::from_arcs(n, arcs);
}

std::vector<NodeId> sample_seeds(std::mt19937 &gen, std::size_t n, std::size_t count) {
    std::vector<NodeId> all(n);
    std::iota(all.begin(), all.end(), NodeId{0});
    std::shuffle(all.begin(), all.end(), gen);
    all.resize(std::min(count, n));
    return all;
}

// 11 nodes, 12 arcs; seeds v4 and v5 (ids 3 and 4) reach three new nodes per hop.
DirectedGraph three_hop_pattern() {
    auto a = [](NodeId s, NodeId t) { return Arc{s - 1, t - 1}; };
    const std::vector<Arc> arcs{a(4, 3), a(4, 7), a(5, 6),  a(3, 2),  a(7, 8), a(6, 11),
                                a(2, 1), a(8, 9), a(11, 10), a(1, 2), a(9, 4), a(10, 5)};
    return DirectedGraph::from_arcs(11, arcs);
}

}  // namespace

TEST(SeedSet, Validation) {
    EXPECT_EQ(SeedSet({3, 1, 2}, 3, 5).nodes(), (std::vector<NodeId>{1, 2, 3}));
    EXPECT_THROW(SeedSet({1, 1}, 3, 5), ValidationError);
    EXPECT_THROW(SeedSet({1, 9}, 3, 5), ValidationError);
    EXPECT_THROW(SeedSet({0, 1, 2}, 2, 5), ValidationError);
}

TEST(Influence, HandTraces) {
    const auto p = path(4);
    EXPECT_EQ(influence_set(p, SeedSet({0}, 1, 4), 2), (std::vector<NodeId>{0, 1, 2}));
    EXPECT_EQ(objective(p, SeedSet({0}, 1, 4), 3), 4u);
    const auto star = DirectedGraph::from_arcs(4, std::vector<Arc>{{0, 1}, {0, 2}, {0, 3}});
    EXPECT_EQ(influence_set(star, SeedSet({0}, 1, 4), 1), (std::vector<NodeId>{0, 1, 2, 3}));
}

TEST(Influence, DeepHopLimitGivesReachableSet) {
    const auto g = oracle::random_digraph(30, 0.08, 4);
    const auto dist = oracle::floyd_warshall(oracle::adjacency(g));
    for (NodeId v = 0; v < 30; ++v) {
        std::size_t reachable = 0;
        for (NodeId w = 0; w < 30; ++w) reachable += dist[v][w] < oracle::kUnreachable;
        EXPECT_EQ(objective(g, SeedSet({v}, 1, 30), 30), reachable);
    }
}

TEST(Influence, MultiHopCoveragePattern) {
    const auto g = three_hop_pattern();
    ASSERT_EQ(g.arc_count(), 12u);
    const SeedSet u({3, 4}, 2, 11);
    const auto f1 = objective(g, u, 1), f2 = objective(g, u, 2), f3 = objective(g, u, 3);
    EXPECT_EQ(f1, 5u);
    EXPECT_EQ(f2, 8u);
    EXPECT_EQ(f3, 11u);
    EXPECT_LT(f1, f2);
    EXPECT_LT(f2, f3);
}

TEST(Influence, EmptySeedSetAndBadDepth) {
    const auto p = path(3);
    EXPECT_EQ(objective(p, SeedSet({}, 2, 3), 1), 0u);
    EXPECT_TRUE(influence_set(p, SeedSet({}, 2, 3), 2).empty());
    EXPECT_THROW(objective(p, SeedSet({0}, 1, 3), 0), ConfigError);
}

TEST(Influence, MatchesPerSeedUnion) {
    std::mt19937 gen(99);
    for (std::uint32_t trial = 0; trial < 60; ++trial) {
        const auto g = oracle::random_digraph(40, 0.08, trial);
        const auto adj = oracle::adjacency(g);
        CoverageEvaluator eval(g);
        const auto seeds = sample_seeds(gen, 40, 3);
        for (int d = 1; d <= 3; ++d) {
            const auto ref = oracle::influence(adj, seeds, d);
            EXPECT_EQ(eval.count(seeds, d), ref.size());
            EXPECT_EQ(eval.covered(seeds, d), std::vector<NodeId>(ref.begin(), ref.end()));
        }
    }
}

TEST(Influence, MonotoneInDepthAndSeeds) {
    std::mt19937 gen(5);
    for (std::uint32_t trial = 0; trial < 40; ++trial) {
        const auto g = oracle::random_digraph(35, 0.07, 1000 + trial);
        auto seeds = sample_seeds(gen, 35, 4);
        const SeedSet big(seeds, 4, 35);
        seeds.pop_back();
        const SeedSet small(seeds, 4, 35);
        for (int d = 1; d <= 4; ++d) {
            const auto a = influence_set(g, small, d);
            const auto b = influence_set(g, small, d + 1);
            const auto c = influence_set(g, big, d);
            EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
            EXPECT_TRUE(std::includes(c.begin(), c.end(), a.begin(), a.end()));
            EXPECT_TRUE(std::includes(a.begin(), a.end(), small.nodes().begin(), small.nodes().end()));
        }
    }
}

TEST(Influence, DiminishingReturns) {
    std::mt19937 gen(17);
    for (std::uint32_t trial = 0; trial < 60; ++trial) {
        const auto g = oracle::random_digraph(25, 0.1, 500 + trial);
        auto order = sample_seeds(gen, 25, 6);
        const NodeId extra = order.back();
        order.pop_back();
        const std::vector<NodeId> big(order.begin(), order.end());
        const std::vector<NodeId> small(order.begin(), order.begin() + 2);
        const int d = 1 + static_cast<int>(trial % 3);
        CoverageEvaluator eval(g);
        auto with = [&](std::vector<NodeId> s) {
            s.push_back(extra);
            return eval.count(s, d);
        };
        const auto gain_small = with(small) - eval.count(small, d);
        const auto gain_big = with(big) - eval.count(big, d);
        EXPECT_GE(gain_small, gain_big);
    }
}

TEST(Influence, EvaluatorReuseAcrossManyCalls) {
    const auto g = oracle::random_digraph(50, 0.05, 8);
    const auto adj = oracle::adjacency(g);
    CoverageEvaluator eval(g);
    std::mt19937 gen(1);
    for (int i = 0; i < 2000; ++i) {
        const auto seeds = sample_seeds(gen, 50, 1 + i % 5);
        const int d = 1 + i % 3;
        ASSERT_EQ(eval.count(seeds, d), oracle::influence(adj, seeds, d).size());
    }
}

TEST(Solution, EvaluateSolutionBounds) {
    const auto g = oracle::random_digraph(20, 0.1, 3);
    const auto s = evaluate_solution(g, SeedSet({1, 5, 7}, 3, 20), 2);
    EXPECT_GE(s.objective, s.seeds.size());
    EXPECT_LE(s.objective, 20u);
    EXPECT_EQ(s.d, 2);
}
