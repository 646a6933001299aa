#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kddsp/brkga.hpp"
#include "kddsp/error.hpp"
#include "kddsp/graph.hpp"
#include "kddsp/guidance.hpp"
#include "kddsp/influence.hpp"
#include "kddsp/metrics.hpp"

namespace kddsp {

enum class AlgorithmLabel { Brkga, BrkgaLlm, BrkgaStatic, BrkgaDynamic, BrkgaTuned, DirectTopk, OutDegree };

/// "brkga", "brkga+llm", "brkga+static", "brkga+dynamic", "brkga+tuned", "direct-topk", "out-degree".
std::string to_string(AlgorithmLabel label);
/// Throws ConfigError for anything outside the vocabulary.
AlgorithmLabel parse_algorithm_label(std::string_view s);
/// Labels whose result does not depend on the run seed.
bool is_deterministic(AlgorithmLabel label) noexcept;
/// Labels that need an alpha/beta parameter file for the instance.
bool needs_params(AlgorithmLabel label) noexcept;

struct RunRecord {
    std::string instance;
    std::size_t n = 0;
    std::size_t arcs = 0;
    std::size_t k = 0;
    int d = 1;
    AlgorithmLabel label = AlgorithmLabel::Brkga;
    std::string guidance;  ///< uniform, llm, tuner, static-random, dynamic-random, out-degree
    std::uint64_t rng_seed = 0;
    std::size_t objective = 0;
    double seconds = 0.0;
    std::size_t generations = 0;
    std::size_t evaluations = 0;
    std::string timestamp;
    std::vector<std::int64_t> seeds;  ///< original node ids, ascending by dense id

    /// (instance, k, d, label, rng_seed); completed runs are skipped on resume.
    std::string key() const;
};

void write_run_record_header(std::ostream &out);
void write_run_record(std::ostream &out, const RunRecord &record);
/// Throws ParseError (with line number) on malformed rows.
std::vector<RunRecord> read_run_records(std::istream &in);

/// Re-evaluates the stored seeds on the instance; true when the objective matches exactly.
bool revalidate(const RunRecord &record, const LoadedGraph &instance);

/// Sample Pearson correlation. Throws ShapeError on unequal or too short input
/// and UndefinedCorrelation when either series is constant.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
    std::string series_a;
    std::string series_b;
    double rho = 0.0;
    std::size_t n_points = 0;
};

CorrelationReport correlate(std::string series_a, std::span<const double> x, std::string series_b,
                            std::span<const double> y);

/// The k highest-valued nodes (smaller id on ties), evaluated at depth d.
/// Throws ShapeError on a length mismatch and ConfigError when k is 0 or exceeds |V|.
Solution direct_topk_solution(std::span<const double> values, std::size_t k, const DirectedGraph &graph, int d);

/// Top-k by out-degree.
Solution out_degree_solution(const DirectedGraph &graph, std::size_t k, int d);

struct TuningTrial {
    GuidanceParams params;
    double score = 0.0;  ///< mean best objective over the inner runs
};

struct TuningResult {
    GuidanceParams best;
    double best_score = 0.0;
    std::vector<TuningTrial> log;
};

struct TuningOptions {
    std::size_t trials = 20;
    std::size_t runs_per_trial = 1;
    BrkgaConfig inner;  ///< inner.rng_seed is varied per inner run
};

/**
 * Random-search tuner over the alpha/beta space: each candidate from
 * random_params is scored by seeded BRKGA runs; the first candidate with
 * the highest mean wins.
 */
TuningResult tune_params(const DirectedGraph &graph, const MetricsTable &metrics, std::size_t k, int d,
                         const TuningOptions &options, Rng &rng);

void write_tuning_log_csv(std::ostream &out, const TuningResult &result);

struct PlanInstance {
    std::string name;
    std::filesystem::path path;
    std::optional<std::filesystem::path> llm_params;    ///< read by brkga+llm and direct-topk
    std::optional<std::filesystem::path> tuned_params;  ///< brkga+tuned; tuned on the fly when absent
};

struct ExperimentPlan {
    std::vector<PlanInstance> instances;
    std::vector<std::size_t> k_values;
    std::vector<int> d_values;
    std::vector<AlgorithmLabel> labels;
    std::size_t runs = 10;
    std::uint64_t seed = 1;
    BrkgaConfig brkga;  ///< budget and GA parameters shared by every cell
    unsigned workers = 1;
    TuningOptions tuning;  ///< used for brkga+tuned when no params file is given
};

/// Relative instance and params paths are resolved against base_dir.
/// Throws ParseError for malformed JSON and ConfigError for invalid values.
ExperimentPlan plan_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir = {});
ExperimentPlan load_plan(const std::filesystem::path &path);
nlohmann::json to_json(const ExperimentPlan &plan);

/// Per-run seed for a cell; the same on every machine and in any execution order.
std::uint64_t cell_seed(std::uint64_t plan_seed, std::string_view instance, std::size_t k, int d,
                        AlgorithmLabel label, std::size_t run);

struct ExperimentOutcome {
    std::vector<RunRecord> records;  ///< all records, including resumed ones
    std::size_t executed = 0;
    std::size_t resumed = 0;
    std::vector<std::string> skipped;  ///< instances whose file was missing or unreadable, with reason

    int exit_code() const noexcept { return skipped.empty() ? 0 : 2; }
};

/**
 * Runs every (instance, k, d, label, run) cell. Records are appended to
 * records_csv as they finish; rows already present there are reused. The
 * per-cell mean summary goes to summary_csv. Deterministic labels run once per cell.
 */
ExperimentOutcome compare_experiment(const ExperimentPlan &plan, const std::filesystem::path &records_csv,
                                     const std::filesystem::path &summary_csv, std::ostream *progress = nullptr);

/// Rows "instance,d", one column "k:label" per cell holding the mean objective.
void write_summary_csv(std::ostream &out, const std::vector<RunRecord> &records);

using CorrelationMatrix = std::array<std::array<std::optional<double>, kMetricCount>, kMetricCount>;

/// Pearson between normalized metric columns; empty where a column is constant.
CorrelationMatrix metric_correlation_matrix(const MetricsTable &metrics);

/// Long CSV "node_id,metric,value" of the normalized values.
void write_metric_long_csv(std::ostream &out, const MetricsTable &metrics, const IdMap *ids = nullptr);

/// 5x5 matrix CSV with metric names as header and first column; constant columns are
/// left empty and listed in a trailing "# constant:" comment line.
void write_correlation_matrix_csv(std::ostream &out, const MetricsTable &metrics);

}  // namespace kddsp
