#include "kddsp/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "kddsp/error.hpp"
#include "kddsp/rng.hpp"

namespace kddsp {

namespace {

void build_csr(std::size_t n, const std::vector<Arc> &sorted, bool forward,
               std::vector<std::size_t> &offsets, std::vector<NodeId> &targets) {
    offsets.assign(n + 1, 0);
    for (const Arc &a : sorted) ++offsets[(forward ? a.source : a.target) + 1];
    for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
    targets.resize(sorted.size());
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const Arc &a : sorted) {
        const NodeId from = forward ? a.source : a.target;
        targets[cursor[from]++] = forward ? a.target : a.source;
    }
}

std::string_view trim_left(std::string_view s) {
    const auto pos = s.find_first_not_of(" \t\r");
    return pos == std::string_view::npos ? std::string_view{} : s.substr(pos);
}

std::string_view next_token(std::string_view &s) {
    s = trim_left(s);
    const auto end = s.find_first_of(" \t\r,");
    auto tok = s.substr(0, end);
    s = end == std::string_view::npos ? std::string_view{} : s.substr(end + 1);
    return tok;
}

std::int64_t parse_id(std::string_view tok, std::size_t line) {
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size())
        throw ParseError("invalid node id '" + std::string(tok) + "'", line);
    if (value < 0) throw ParseError("negative node id '" + std::string(tok) + "'", line);
    return value;
}

}  // namespace

DirectedGraph DirectedGraph::from_arcs(std::size_t node_count, std::span<const Arc> arcs,
                                       ArcCleanup *cleanup) {
    if (node_count == 0) throw ConfigError("graph must have at least one node");
    ArcCleanup stats;
    std::vector<Arc> kept;
    kept.reserve(arcs.size());
    for (const Arc &a : arcs) {
        if (a.source >= node_count || a.target >= node_count)
            throw ConfigError("arc endpoint out of range: " + std::to_string(a.source) + " -> " +
                              std::to_string(a.target));
        if (a.source == a.target) {
            ++stats.self_loops;
            continue;
        }
        kept.push_back(a);
    }
    std::sort(kept.begin(), kept.end());
    const auto last = std::unique(kept.begin(), kept.end());
    stats.duplicates = static_cast<std::size_t>(kept.end() - last);
    kept.erase(last, kept.end());

    DirectedGraph g;
    build_csr(node_count, kept, true, g.out_offsets_, g.out_targets_);
    // Transpose; the stable sort keeps each in-list ascending by source.
    std::vector<Arc> by_target = kept;
    std::stable_sort(by_target.begin(), by_target.end(),
                     [](const Arc &x, const Arc &y) { return x.target < y.target; });
    build_csr(node_count, by_target, false, g.in_offsets_, g.in_sources_);
    if (cleanup) *cleanup = stats;
    return g;
}

std::span<const NodeId> DirectedGraph::out_neighbors(NodeId v) const {
    if (v >= node_count()) throw std::out_of_range("node id " + std::to_string(v) + " out of range");
    return {out_targets_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
}

std::span<const NodeId> DirectedGraph::in_neighbors(NodeId v) const {
    if (v >= node_count()) throw std::out_of_range("node id " + std::to_string(v) + " out of range");
    return {in_sources_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
}

std::vector<Arc> DirectedGraph::arcs() const {
    std::vector<Arc> out;
    out.reserve(arc_count());
    for (NodeId u = 0; u < node_count(); ++u)
        for (NodeId v : out_neighbors(u)) out.push_back({u, v});
    return out;
}

IdMap::IdMap(std::vector<std::int64_t> originals) : originals_(std::move(originals)) {
    index_.reserve(originals_.size());
    for (std::size_t i = 0; i < originals_.size(); ++i) {
        if (!index_.emplace(originals_[i], static_cast<NodeId>(i)).second)
            throw ConfigError("duplicate original id " + std::to_string(originals_[i]));
    }
}

IdMap IdMap::identity(std::size_t n) {
    std::vector<std::int64_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int64_t>(i);
    return IdMap(std::move(ids));
}

std::optional<NodeId> IdMap::dense(std::int64_t original) const {
    const auto it = index_.find(original);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

LoadedGraph load_edge_list(std::istream &in) {
    std::vector<std::pair<std::int64_t, std::int64_t>> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view rest = trim_left(line);
        if (rest.empty() || rest.front() == '#' || rest.front() == '%') continue;
        const auto a = next_token(rest);
        const auto b = next_token(rest);
        if (b.empty()) throw ParseError("expected two node ids", line_no);
        raw.emplace_back(parse_id(a, line_no), parse_id(b, line_no));
    }

    std::size_t self_loops = 0;
    std::vector<std::int64_t> ids;
    ids.reserve(raw.size() * 2);
    for (const auto &[u, v] : raw) {
        if (u == v) {
            ++self_loops;
            continue;
        }
        ids.push_back(u);
        ids.push_back(v);
    }
    if (ids.empty()) throw InputError("edge list contains no usable arcs");
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    IdMap map(ids);
    std::vector<Arc> arcs;
    arcs.reserve(raw.size());
    for (const auto &[u, v] : raw) {
        if (u == v) continue;
        arcs.push_back({*map.dense(u), *map.dense(v)});
    }
    ArcCleanup cleanup;
    auto graph = DirectedGraph::from_arcs(ids.size(), arcs, &cleanup);
    cleanup.self_loops = self_loops;
    return {std::move(graph), std::move(map), cleanup};
}

LoadedGraph load_edge_list_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open edge list " + path.string());
    return load_edge_list(in);
}

void write_edge_list(std::ostream &out, const DirectedGraph &graph, const IdMap *ids) {
    for (const Arc &a : graph.arcs()) {
        if (ids)
            out << ids->original(a.source) << ' ' << ids->original(a.target) << '\n';
        else
            out << a.source << ' ' << a.target << '\n';
    }
}

void write_id_map_csv(std::ostream &out, const IdMap &ids) {
    out << "dense_id,original_id\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << i << ',' << ids.originals()[i] << '\n';
}

DirectedGraph generate_erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
    if (n == 0) throw ConfigError("Erdos-Renyi graph needs n >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("arc probability must lie in [0,1]");
    Rng rng(seed);
    std::vector<Arc> arcs;
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v = 0; v < n; ++v)
            if (u != v && uniform01(rng) < p) arcs.push_back({u, v});
    return DirectedGraph::from_arcs(n, arcs);
}

}  // namespace kddsp
