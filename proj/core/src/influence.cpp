#include "kddsp/influence.hpp"

#include <algorithm>
#include <string>

#include "kddsp/error.hpp"

namespace kddsp {

SeedSet::SeedSet(std::vector<NodeId> nodes, std::size_t k_limit, std::size_t node_count)
    : nodes_(std::move(nodes)), k_limit_(k_limit) {
    std::sort(nodes_.begin(), nodes_.end());
    if (std::adjacent_find(nodes_.begin(), nodes_.end()) != nodes_.end())
        throw ValidationError("seed set contains duplicate nodes");
    if (!nodes_.empty() && nodes_.back() >= node_count)
        throw ValidationError("seed id " + std::to_string(nodes_.back()) + " out of range");
    if (nodes_.size() > k_limit_)
        throw ValidationError("seed set has " + std::to_string(nodes_.size()) + " nodes, limit is " +
                              std::to_string(k_limit_));
}

CoverageEvaluator::CoverageEvaluator(const DirectedGraph &graph)
    : graph_(&graph), stamp_(graph.node_count(), 0) {
    frontier_.reserve(graph.node_count());
}

std::size_t CoverageEvaluator::run(std::span<const NodeId> seeds, int d) {
    if (d < 1) throw ConfigError("hop limit d must be >= 1");
    if (++generation_ == 0) {
        std::fill(stamp_.begin(), stamp_.end(), 0);
        generation_ = 1;
    }
    frontier_.clear();
    for (NodeId s : seeds) {
        if (s >= stamp_.size()) throw std::out_of_range("seed id out of range");
        if (stamp_[s] == generation_) continue;
        stamp_[s] = generation_;
        frontier_.push_back(s);
    }
    // frontier_ holds every visited node; [layer_begin, layer_end) is the current layer.
    std::size_t layer_begin = 0;
    for (int depth = 0; depth < d; ++depth) {
        const std::size_t layer_end = frontier_.size();
        if (layer_begin == layer_end) break;
        for (std::size_t i = layer_begin; i < layer_end; ++i) {
            for (NodeId v : graph_->out_neighbors(frontier_[i])) {
                if (stamp_[v] == generation_) continue;
                stamp_[v] = generation_;
                frontier_.push_back(v);
            }
        }
        layer_begin = layer_end;
    }
    return frontier_.size();
}

std::size_t CoverageEvaluator::count(std::span<const NodeId> seeds, int d) { return run(seeds, d); }

std::vector<NodeId> CoverageEvaluator::covered(std::span<const NodeId> seeds, int d) {
    run(seeds, d);
    std::vector<NodeId> out(frontier_.begin(), frontier_.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<NodeId> influence_set(const DirectedGraph &graph, const SeedSet &seeds, int d) {
    CoverageEvaluator eval(graph);
    return eval.covered(seeds.nodes(), d);
}

std::size_t objective(const DirectedGraph &graph, const SeedSet &seeds, int d) {
    CoverageEvaluator eval(graph);
    return eval.count(seeds.nodes(), d);
}

Solution evaluate_solution(const DirectedGraph &graph, SeedSet seeds, int d) {
    const auto value = objective(graph, seeds, d);
    return {std::move(seeds), value, d};
}

}  // namespace kddsp
