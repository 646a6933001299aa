#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "kddsp/error.hpp"
#include "kddsp/graph.hpp"
#include "oracles.hpp"

using namespace kddsp;

namespace {

LoadedGraph load(const std::string &text) {
    std::istringstream in(text);
    return load_edge_list(in);
}

std::vector<NodeId> as_vec(std::span<const NodeId> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(EdgeList, PathGraph) {
    const auto g = load("0 1\n1 2\n");
    EXPECT_EQ(g.graph.node_count(), 3u);
    EXPECT_EQ(g.graph.arc_count(), 2u);
}

TEST(EdgeList, DuplicateArcDropped) {
    const auto g = load("0 1\n0 1\n1 0\n");
    EXPECT_EQ(g.graph.node_count(), 2u);
    EXPECT_EQ(g.graph.arc_count(), 2u);
    EXPECT_EQ(g.cleanup.duplicates, 1u);
}

TEST(EdgeList, SelfLoopsDroppedAndCounted) {
    const auto g = load("0 0\n0 1\n1 1\n");
    EXPECT_EQ(g.graph.arc_count(), 1u);
    EXPECT_EQ(g.cleanup.self_loops, 2u);
}

TEST(EdgeList, SnapHeaderAndRemapRoundTrip) {
    const auto g = load("# Directed graph\n# Nodes: 3 Edges: 3\n% another comment\n\n20 10\n10 30\n30 20\n");
    ASSERT_EQ(g.graph.node_count(), 3u);
    EXPECT_EQ(g.ids.original(0), 10);
    EXPECT_EQ(g.ids.original(1), 20);
    EXPECT_EQ(g.ids.original(2), 30);
    for (const Arc &a : g.graph.arcs()) {
        const auto s = g.ids.original(a.source), t = g.ids.original(a.target);
        EXPECT_TRUE((s == 20 && t == 10) || (s == 10 && t == 30) || (s == 30 && t == 20));
    }
    for (NodeId v = 0; v < 3; ++v) EXPECT_EQ(g.ids.dense(g.ids.original(v)), v);
    EXPECT_FALSE(g.ids.dense(99).has_value());
}

TEST(EdgeList, CommaSeparatorsAndExtraColumns) {
    const auto g = load("1,2\n2 3 0.5\n");
    EXPECT_EQ(g.graph.arc_count(), 2u);
}

TEST(EdgeList, MalformedLineReportsLineNumber) {
    try {
        load("0 1\n# fine\n2 x\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(load("0\n"), ParseError);
}

TEST(EdgeList, EmptyGraphIsInputError) {
    EXPECT_THROW(load("# nothing\n"), InputError);
    EXPECT_THROW(load("4 4\n"), InputError);
}

TEST(EdgeList, ReloadIsIdempotent) {
    const auto first = load("# x\n7 3\n3 9\n9 7\n7 9\n100 3\n3 3\n");
    std::ostringstream out;
    write_edge_list(out, first.graph, &first.ids);
    const auto second = load(out.str());
    EXPECT_EQ(first.graph, second.graph);
    EXPECT_EQ(first.ids.originals(), second.ids.originals());
    std::ostringstream again;
    write_edge_list(again, second.graph, &second.ids);
    EXPECT_EQ(out.str(), again.str());
}

TEST(IdMapCsv, Format) {
    const auto g = load("5 8\n");
    std::ostringstream out;
    write_id_map_csv(out, g.ids);
    EXPECT_EQ(out.str(), "dense_id,original_id\n0,5\n1,8\n");
}

TEST(ErdosRenyi, Extremes) {
    const auto empty = generate_erdos_renyi(5, 0.0, 1);
    EXPECT_EQ(empty.node_count(), 5u);
    EXPECT_EQ(empty.arc_count(), 0u);
    const auto full = generate_erdos_renyi(5, 1.0, 1);
    EXPECT_EQ(full.arc_count(), 20u);
}

TEST(ErdosRenyi, DeterministicPerSeed) {
    EXPECT_EQ(generate_erdos_renyi(60, 0.1, 42), generate_erdos_renyi(60, 0.1, 42));
    EXPECT_NE(generate_erdos_renyi(60, 0.1, 42), generate_erdos_renyi(60, 0.1, 43));
}

TEST(ErdosRenyi, ArcCountMatchesBinomialExpectation) {
    const double expected = 100.0 * 99.0 * 0.05;
    const double sigma = std::sqrt(expected * 0.95);
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto g = generate_erdos_renyi(100, 0.05, seed);
        EXPECT_NEAR(static_cast<double>(g.arc_count()), expected, 5.0 * sigma);
        total += static_cast<double>(g.arc_count());
    }
    EXPECT_NEAR(total / 1000.0, expected, 0.03 * expected);
}

TEST(ErdosRenyi, RejectsBadArguments) {
    EXPECT_THROW(generate_erdos_renyi(0, 0.5, 1), ConfigError);
    EXPECT_THROW(generate_erdos_renyi(5, 1.5, 1), ConfigError);
}

TEST(Neighbors, PathAndComplete) {
    const std::vector<Arc> path{{0, 1}, {1, 2}};
    const auto g = DirectedGraph::from_arcs(3, path);
    EXPECT_EQ(as_vec(g.out_neighbors(0)), std::vector<NodeId>{1});
    EXPECT_TRUE(g.out_neighbors(2).empty());
    EXPECT_THROW(g.out_neighbors(3), std::out_of_range);
    EXPECT_THROW(g.in_neighbors(7), std::out_of_range);

    const auto k4 = generate_erdos_renyi(4, 1.0, 0);
    EXPECT_EQ(as_vec(k4.out_neighbors(1)), (std::vector<NodeId>{0, 2, 3}));
}

TEST(Neighbors, FromArcsRejectsOutOfRange) {
    const std::vector<Arc> arcs{{0, 5}};
    EXPECT_THROW(DirectedGraph::from_arcs(3, arcs), ConfigError);
    EXPECT_THROW(DirectedGraph::from_arcs(0, {}), ConfigError);
}

TEST(GraphProperties, TransposeConsistencyAndDegreeSums) {
    for (std::uint32_t seed = 0; seed < 30; ++seed) {
        const auto g = oracle::random_digraph(5 + seed, 0.2, seed);
        std::size_t out_sum = 0, in_sum = 0;
        std::set<std::pair<NodeId, NodeId>> forward, backward;
        for (NodeId v = 0; v < g.node_count(); ++v) {
            out_sum += g.out_degree(v);
            in_sum += g.in_degree(v);
            for (NodeId w : g.out_neighbors(v)) forward.insert({v, w});
            for (NodeId u : g.in_neighbors(v)) backward.insert({u, v});
        }
        EXPECT_EQ(forward, backward);
        EXPECT_EQ(out_sum, g.arc_count());
        EXPECT_EQ(in_sum, g.arc_count());
    }
}
