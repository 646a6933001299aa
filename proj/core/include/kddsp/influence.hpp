#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kddsp/graph.hpp"

namespace kddsp {

/// A candidate solution: distinct valid node ids, at most k_limit of them, kept sorted.
class SeedSet {
public:
    SeedSet() = default;
    /// Throws ValidationError on duplicates, ids >= node_count, or more than k_limit nodes.
    SeedSet(std::vector<NodeId> nodes, std::size_t k_limit, std::size_t node_count);

    const std::vector<NodeId> &nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }
    std::size_t k_limit() const noexcept { return k_limit_; }

    friend bool operator==(const SeedSet &, const SeedSet &) = default;

private:
    std::vector<NodeId> nodes_;
    std::size_t k_limit_ = 0;
};

struct Solution {
    SeedSet seeds;
    std::size_t objective = 0;
    int d = 1;
};

/**
 * Reusable multi-source BFS truncated at depth d. Owns a generation-stamped
 * visited array so repeated evaluations do not reallocate or clear. One
 * evaluator per thread.
 */
class CoverageEvaluator {
public:
    explicit CoverageEvaluator(const DirectedGraph &graph);

    /// Number of nodes within directed distance d of some seed (seeds included).
    std::size_t count(std::span<const NodeId> seeds, int d);

    /// The covered nodes, ascending.
    std::vector<NodeId> covered(std::span<const NodeId> seeds, int d);

    const DirectedGraph &graph() const noexcept { return *graph_; }

private:
    std::size_t run(std::span<const NodeId> seeds, int d);

    const DirectedGraph *graph_;
    std::vector<std::uint32_t> stamp_;
    std::uint32_t generation_ = 0;
    std::vector<NodeId> frontier_;
};

/// I_d(U): nodes at distance <= d from some seed. Throws ConfigError for d < 1.
std::vector<NodeId> influence_set(const DirectedGraph &graph, const SeedSet &seeds, int d);

/// |I_d(U)|; 0 for an empty seed set.
std::size_t objective(const DirectedGraph &graph, const SeedSet &seeds, int d);

Solution evaluate_solution(const DirectedGraph &graph, SeedSet seeds, int d);

}  // namespace kddsp
