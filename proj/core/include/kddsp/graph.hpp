#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace kddsp {

using NodeId = std::uint32_t;

struct Arc {
    NodeId source;
    NodeId target;
    friend bool operator==(const Arc &, const Arc &) = default;
    friend auto operator<=>(const Arc &, const Arc &) = default;
};

/// Counts of arcs discarded while building a graph.
struct ArcCleanup {
    std::size_t duplicates = 0;
    std::size_t self_loops = 0;
};

/**
 * Immutable directed graph on dense ids 0..node_count-1 with forward and
 * reverse adjacency stored in CSR form. Arcs are unique and loop-free; each
 * adjacency list is sorted ascending.
 */
class DirectedGraph {
public:
    /// Builds from an arc list, dropping self-loops and duplicate arcs.
    /// Throws ConfigError for node_count == 0 or an arc endpoint >= node_count.
    static DirectedGraph from_arcs(std::size_t node_count, std::span<const Arc> arcs,
                                   ArcCleanup *cleanup = nullptr);

    std::size_t node_count() const noexcept { return out_offsets_.size() - 1; }
    std::size_t arc_count() const noexcept { return out_targets_.size(); }

    /// Out-neighbours of v. Throws std::out_of_range for an invalid id.
    std::span<const NodeId> out_neighbors(NodeId v) const;
    /// In-neighbours of v. Throws std::out_of_range for an invalid id.
    std::span<const NodeId> in_neighbors(NodeId v) const;

    std::size_t out_degree(NodeId v) const { return out_neighbors(v).size(); }
    std::size_t in_degree(NodeId v) const { return in_neighbors(v).size(); }

    /// Arcs sorted by (source, target).
    std::vector<Arc> arcs() const;

    friend bool operator==(const DirectedGraph &, const DirectedGraph &) = default;

private:
    DirectedGraph() = default;

    std::vector<std::size_t> out_offsets_{0};
    std::vector<NodeId> out_targets_;
    std::vector<std::size_t> in_offsets_{0};
    std::vector<NodeId> in_sources_;
};

/// Maps dense ids back to the ids used in the source file.
class IdMap {
public:
    IdMap() = default;
    explicit IdMap(std::vector<std::int64_t> originals);

    /// Identity map for graphs that were generated rather than loaded.
    static IdMap identity(std::size_t n);

    std::size_t size() const noexcept { return originals_.size(); }
    std::int64_t original(NodeId dense) const { return originals_.at(dense); }
    std::optional<NodeId> dense(std::int64_t original) const;
    const std::vector<std::int64_t> &originals() const noexcept { return originals_; }

private:
    std::vector<std::int64_t> originals_;
    std::unordered_map<std::int64_t, NodeId> index_;
};

struct LoadedGraph {
    DirectedGraph graph;
    IdMap ids;
    ArcCleanup cleanup;
};

/**
 * Reads a whitespace-separated "source target" edge list (SNAP dialect).
 * Lines starting with '#' or '%' and blank lines are skipped; tokens after
 * the second are ignored. Node ids are remapped to 0..n-1 in ascending order
 * of their original value; the node set is the endpoints of retained arcs.
 *
 * Throws ParseError (with line number) on a malformed line and InputError
 * when no arc remains.
 */
LoadedGraph load_edge_list(std::istream &in);
LoadedGraph load_edge_list_file(const std::filesystem::path &path);

/// Writes "u v" lines sorted by (u, v), using original ids when a map is given.
void write_edge_list(std::ostream &out, const DirectedGraph &graph, const IdMap *ids = nullptr);

/// Two-column CSV: dense_id,original_id.
void write_id_map_csv(std::ostream &out, const IdMap &ids);

/// G(n, p) digraph: each ordered pair (u, v), u != v, is an arc with probability p.
/// Deterministic for a fixed seed. Throws ConfigError when n == 0 or p is outside [0,1].
DirectedGraph generate_erdos_renyi(std::size_t n, double p, std::uint64_t seed);

}  // namespace kddsp
