#include "kddsp/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include "kddsp/error.hpp"

namespace kddsp {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, const void *data, std::size_t len) {
    const auto *p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t table_checksum(const std::vector<MetricRow> &rows) {
    std::uint64_t h = kFnvOffset;
    const std::uint64_t n = rows.size();
    h = fnv1a(h, &n, sizeof n);
    for (const auto &r : rows) h = fnv1a(h, r.data(), sizeof(double) * r.size());
    return h;
}

/// Runs body(source, worker) for every source node, split over worker threads.
/// Each worker owns a contiguous block of sources.
template <class Body>
void for_each_source(std::size_t n, unsigned threads, Body &&body) {
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (workers == 1) {
        for (std::size_t s = 0; s < n; ++s) body(static_cast<NodeId>(s), 0u);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
            for (std::size_t s = lo; s < hi; ++s) body(static_cast<NodeId>(s), w);
        });
    }
}

}  // namespace

std::string_view metric_name(Metric m) noexcept {
    switch (m) {
        case Metric::InDegree: return "in_degree";
        case Metric::OutDegree: return "out_degree";
        case Metric::Closeness: return "closeness";
        case Metric::Betweenness: return "betweenness";
        case Metric::PageRank: return "pagerank";
    }
    return "unknown";
}

DegreeMetrics compute_degree_metrics(const DirectedGraph &graph) {
    const std::size_t n = graph.node_count();
    DegreeMetrics d{std::vector<double>(n), std::vector<double>(n)};
    for (NodeId v = 0; v < n; ++v) {
        d.in_degree[v] = static_cast<double>(graph.in_degree(v));
        d.out_degree[v] = static_cast<double>(graph.out_degree(v));
    }
    return d;
}

std::vector<double> compute_closeness(const DirectedGraph &graph, ClosenessVariant variant,
                                      unsigned threads) {
    const std::size_t n = graph.node_count();
    std::vector<double> result(n, 0.0);
    if (n < 2) return result;
    const bool outward = variant == ClosenessVariant::HarmonicOut;
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    std::vector<std::vector<int>> dist(workers, std::vector<int>(n, -1));
    std::vector<std::vector<NodeId>> queue(workers);

    for_each_source(n, workers, [&](NodeId s, unsigned w) {
        auto &dw = dist[w];
        auto &q = queue[w];
        q.clear();
        q.push_back(s);
        dw[s] = 0;
        double sum = 0.0;
        for (std::size_t head = 0; head < q.size(); ++head) {
            const NodeId u = q[head];
            const auto next = outward ? graph.out_neighbors(u) : graph.in_neighbors(u);
            for (NodeId v : next) {
                if (dw[v] >= 0) continue;
                dw[v] = dw[u] + 1;
                sum += 1.0 / dw[v];
                q.push_back(v);
            }
        }
        for (NodeId v : q) dw[v] = -1;
        result[s] = sum / static_cast<double>(n - 1);
    });
    return result;
}

std::vector<double> compute_betweenness(const DirectedGraph &graph, unsigned threads) {
    const std::size_t n = graph.node_count();
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));

    struct Scratch {
        std::vector<double> partial;
        std::vector<int> dist;
        std::vector<double> sigma;
        std::vector<double> delta;
        std::vector<NodeId> order;
    };
    std::vector<Scratch> scratch(workers);
    for (auto &s : scratch) {
        s.partial.assign(n, 0.0);
        s.dist.assign(n, -1);
        s.sigma.assign(n, 0.0);
        s.delta.assign(n, 0.0);
        s.order.reserve(n);
    }

    for_each_source(n, workers, [&](NodeId src, unsigned w) {
        auto &s = scratch[w];
        s.order.clear();
        s.order.push_back(src);
        s.dist[src] = 0;
        s.sigma[src] = 1.0;
        for (std::size_t head = 0; head < s.order.size(); ++head) {
            const NodeId u = s.order[head];
            for (NodeId v : graph.out_neighbors(u)) {
                if (s.dist[v] < 0) {
                    s.dist[v] = s.dist[u] + 1;
                    s.order.push_back(v);
                }
                if (s.dist[v] == s.dist[u] + 1) s.sigma[v] += s.sigma[u];
            }
        }
        // Dependency accumulation in reverse BFS order; predecessors are the
        // in-neighbours one layer closer to the source.
        for (auto it = s.order.rbegin(); it != s.order.rend(); ++it) {
            const NodeId v = *it;
            for (NodeId u : graph.in_neighbors(v)) {
                if (s.dist[u] >= 0 && s.dist[u] + 1 == s.dist[v])
                    s.delta[u] += s.sigma[u] / s.sigma[v] * (1.0 + s.delta[v]);
            }
            if (v != src) s.partial[v] += s.delta[v];
        }
        for (NodeId v : s.order) {
            s.dist[v] = -1;
            s.sigma[v] = 0.0;
            s.delta[v] = 0.0;
        }
    });

    std::vector<double> result(n, 0.0);
    for (const auto &s : scratch)
        for (std::size_t v = 0; v < n; ++v) result[v] += s.partial[v];
    return result;
}

PageRankResult compute_pagerank(const DirectedGraph &graph, const PageRankOptions &options) {
    if (!(options.damping > 0.0 && options.damping < 1.0))
        throw ConfigError("pagerank damping must lie in (0,1)");
    if (!(options.tolerance > 0.0)) throw ConfigError("pagerank tolerance must be positive");

    const std::size_t n = graph.node_count();
    const double inv_n = 1.0 / static_cast<double>(n);
    PageRankResult res;
    res.scores.assign(n, inv_n);
    std::vector<double> next(n);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        double dangling = 0.0;
        for (NodeId u = 0; u < n; ++u)
            if (graph.out_degree(u) == 0) dangling += res.scores[u];
        const double base = (1.0 - options.damping) * inv_n + options.damping * dangling * inv_n;
        for (NodeId v = 0; v < n; ++v) {
            double incoming = 0.0;
            for (NodeId u : graph.in_neighbors(v))
                incoming += res.scores[u] / static_cast<double>(graph.out_degree(u));
            next[v] = base + options.damping * incoming;
        }
        double change = 0.0;
        for (std::size_t v = 0; v < n; ++v) change += std::abs(next[v] - res.scores[v]);
        res.scores.swap(next);
        res.iterations = iter + 1;
        if (change < options.tolerance) {
            res.converged = true;
            break;
        }
    }
    double total = 0.0;
    for (double x : res.scores) total += x;
    for (double &x : res.scores) x /= total;
    return res;
}

std::vector<double> MetricsTable::column(Metric m) const {
    const auto c = static_cast<std::size_t>(m);
    std::vector<double> out(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) out[i] = rows_[i][c];
    return out;
}

MetricsTable normalize_metrics(std::vector<MetricRow> raw) {
    MetricsTable t;
    t.rows_.assign(raw.size(), MetricRow{});
    for (std::size_t c = 0; c < kMetricCount; ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const double x = raw[i][c];
            if (!std::isfinite(x))
                throw NumericError("non-finite " + std::string(metric_name(c)) + " for node " +
                                   std::to_string(i));
            if (x < 0.0)
                throw NumericError("negative " + std::string(metric_name(c)) + " for node " +
                                   std::to_string(i));
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        const double span = hi - lo;
        for (std::size_t i = 0; i < raw.size(); ++i)
            t.rows_[i][c] = span > 0.0 ? (raw[i][c] - lo) / span : 0.0;
    }
    t.raw_rows_ = std::move(raw);
    t.checksum_ = table_checksum(t.rows_);
    return t;
}

MetricsTable make_metrics_table(std::vector<MetricRow> raw, std::vector<MetricRow> normalized) {
    if (raw.size() != normalized.size()) throw ShapeError("raw and normalized row counts differ");
    for (const auto &r : normalized)
        for (double x : r)
            if (!(x >= 0.0 && x <= 1.0)) throw NumericError("normalized metric outside [0,1]");
    MetricsTable t;
    t.raw_rows_ = std::move(raw);
    t.rows_ = std::move(normalized);
    t.checksum_ = table_checksum(t.rows_);
    return t;
}

MetricsTable compute_metrics(const DirectedGraph &graph, const MetricsOptions &options) {
    const auto degrees = compute_degree_metrics(graph);
    const auto closeness = compute_closeness(graph, options.closeness, options.threads);
    const auto betweenness = compute_betweenness(graph, options.threads);
    const auto pagerank = compute_pagerank(graph, options.pagerank);
    std::vector<MetricRow> raw(graph.node_count());
    for (std::size_t v = 0; v < raw.size(); ++v)
        raw[v] = {degrees.in_degree[v], degrees.out_degree[v], closeness[v], betweenness[v],
                  pagerank.scores[v]};
    return normalize_metrics(std::move(raw));
}

void write_metrics_csv(std::ostream &out, const MetricsTable &table, const IdMap *ids) {
    out << "node_id";
    for (std::size_t c = 0; c < kMetricCount; ++c) out << ",raw_" << metric_name(c);
    for (std::size_t c = 0; c < kMetricCount; ++c) out << ',' << metric_name(c);
    out << '\n';
    char buf[32];
    auto put = [&](double x) {
        // Shortest round-trip representation keeps the CSV lossless.
        const auto r = std::to_chars(buf, buf + sizeof buf, x);
        out << ',' << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf));
    };
    for (std::size_t v = 0; v < table.size(); ++v) {
        if (ids)
            out << ids->original(static_cast<NodeId>(v));
        else
            out << v;
        for (double x : table.raw_row(v)) put(x);
        for (double x : table.row(v)) put(x);
        out << '\n';
    }
}

MetricsTable read_metrics_csv(std::istream &in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty metrics CSV");
    ++line_no;
    if (line.rfind("node_id", 0) != 0) throw ParseError("missing metrics CSV header", line_no);

    std::vector<MetricRow> raw, norm;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> fields;
        std::string_view rest = line;
        const auto comma = rest.find(',');
        if (comma == std::string_view::npos) throw ParseError("expected 11 columns", line_no);
        rest.remove_prefix(comma + 1);
        while (true) {
            const auto end = rest.find(',');
            const auto tok = rest.substr(0, end);
            double x = 0;
            const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), x);
            if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size())
                throw ParseError("invalid number '" + std::string(tok) + "'", line_no);
            fields.push_back(x);
            if (end == std::string_view::npos) break;
            rest.remove_prefix(end + 1);
        }
        if (fields.size() != 2 * kMetricCount) throw ParseError("expected 11 columns", line_no);
        MetricRow a{}, b{};
        std::copy_n(fields.begin(), kMetricCount, a.begin());
        std::copy_n(fields.begin() + kMetricCount, kMetricCount, b.begin());
        raw.push_back(a);
        norm.push_back(b);
    }
    if (raw.empty()) throw InputError("metrics CSV has no rows");
    return make_metrics_table(std::move(raw), std::move(norm));
}

}  // namespace kddsp
