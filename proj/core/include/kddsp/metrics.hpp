#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "kddsp/graph.hpp"

namespace kddsp {

/// Column order used everywhere a metric 5-tuple appears.
enum class Metric : std::size_t { InDegree = 0, OutDegree, Closeness, Betweenness, PageRank };

inline constexpr std::size_t kMetricCount = 5;
using MetricRow = std::array<double, kMetricCount>;

std::string_view metric_name(Metric m) noexcept;
inline std::string_view metric_name(std::size_t column) noexcept {
    return metric_name(static_cast<Metric>(column));
}

struct DegreeMetrics {
    std::vector<double> in_degree;
    std::vector<double> out_degree;
};

DegreeMetrics compute_degree_metrics(const DirectedGraph &graph);

enum class ClosenessVariant {
    HarmonicOut,  ///< distances measured from the node (influence direction)
    HarmonicIn,   ///< distances measured towards the node
};

/// Harmonic closeness: sum over reachable v != u of 1/dist, divided by n-1.
/// A single-node graph has closeness 0.
std::vector<double> compute_closeness(const DirectedGraph &graph,
                                      ClosenessVariant variant = ClosenessVariant::HarmonicOut,
                                      unsigned threads = 1);

/// Exact unweighted directed betweenness (Brandes), endpoints excluded, unnormalized.
std::vector<double> compute_betweenness(const DirectedGraph &graph, unsigned threads = 1);

struct PageRankOptions {
    double damping = 0.85;
    double tolerance = 1e-8;
    int max_iterations = 100;
};

struct PageRankResult {
    std::vector<double> scores;
    int iterations = 0;
    bool converged = false;
};

/// Power iteration with uniform teleport; dangling mass is spread uniformly.
/// Throws ConfigError when damping is outside (0,1) or tolerance <= 0.
PageRankResult compute_pagerank(const DirectedGraph &graph, const PageRankOptions &options = {});

/**
 * Per-node metric table: raw values and their per-column min-max
 * normalization to [0,1]. A constant column normalizes to all zeros.
 */
class MetricsTable {
public:
    MetricsTable() = default;

    std::size_t size() const noexcept { return rows_.size(); }
    const MetricRow &row(std::size_t node) const { return rows_.at(node); }
    const MetricRow &raw_row(std::size_t node) const { return raw_rows_.at(node); }
    const std::vector<MetricRow> &rows() const noexcept { return rows_; }
    const std::vector<MetricRow> &raw_rows() const noexcept { return raw_rows_; }

    /// Normalized values of one column.
    std::vector<double> column(Metric m) const;

    /// FNV-1a over node count and the normalized values' bit patterns.
    std::uint64_t checksum() const noexcept { return checksum_; }

private:
    friend MetricsTable normalize_metrics(std::vector<MetricRow> raw);
    friend MetricsTable make_metrics_table(std::vector<MetricRow> raw, std::vector<MetricRow> normalized);

    std::vector<MetricRow> raw_rows_;
    std::vector<MetricRow> rows_;
    std::uint64_t checksum_ = 0;
};

/// Throws NumericError on NaN, infinite or negative input.
MetricsTable normalize_metrics(std::vector<MetricRow> raw);

/// Rebuilds a table from stored raw and normalized columns (e.g. a metrics CSV).
/// Throws ShapeError when the sizes differ and NumericError for normalized values outside [0,1].
MetricsTable make_metrics_table(std::vector<MetricRow> raw, std::vector<MetricRow> normalized);

struct MetricsOptions {
    ClosenessVariant closeness = ClosenessVariant::HarmonicOut;
    PageRankOptions pagerank;
    unsigned threads = 1;
};

/// All five metrics, normalized.
MetricsTable compute_metrics(const DirectedGraph &graph, const MetricsOptions &options = {});

/// CSV with node_id, the five raw columns then the five normalized columns.
/// node_id is the original id when a map is given.
void write_metrics_csv(std::ostream &out, const MetricsTable &table, const IdMap *ids = nullptr);

/// Inverse of write_metrics_csv. Rows must appear in dense-id order.
MetricsTable read_metrics_csv(std::istream &in);

}  // namespace kddsp
