#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kddsp/metrics.hpp"
#include "kddsp/rng.hpp"

namespace kddsp {

using MetricWeights = std::array<double, kMetricCount>;

/// Where a parameter set came from; serialized as "llm", "tuner", "random" or "file".
enum class ParamsSource { Llm, Tuner, Random, File };

std::string to_string(ParamsSource s);
ParamsSource parse_params_source(const std::string &s);

/**
 * Validated alpha/beta parameter set, metric order (in_degree, out_degree,
 * closeness, betweenness, pagerank). Every value is in (0,1) and the alphas
 * sum to one. Only obtainable through validate_params or random_params.
 */
class GuidanceParams {
public:
    const MetricWeights &alpha() const noexcept { return alpha_; }
    const MetricWeights &beta() const noexcept { return beta_; }
    ParamsSource source() const noexcept { return source_; }
    const std::optional<std::string> &model() const noexcept { return model_; }

    GuidanceParams with_source(ParamsSource s, std::optional<std::string> model = std::nullopt) const;

    friend bool operator==(const GuidanceParams &, const GuidanceParams &) = default;

private:
    friend GuidanceParams validate_params(const MetricWeights &, const MetricWeights &, ParamsSource);
    GuidanceParams() = default;

    MetricWeights alpha_{};
    MetricWeights beta_{};
    ParamsSource source_ = ParamsSource::File;
    std::optional<std::string> model_;
};

inline constexpr double kAlphaSumTolerance = 0.05;

/// Accepts values in (0,1) with |sum(alpha) - 1| <= 0.05 and rescales alpha to sum to 1.
/// Throws RangeError naming the offending value (e.g. "beta_3") or SumError with the sum.
GuidanceParams validate_params(const MetricWeights &raw_alpha, const MetricWeights &raw_beta,
                               ParamsSource source = ParamsSource::File);

/// Betas uniform in (0,1); alphas uniform in (0,1) then normalized to sum 1.
GuidanceParams random_params(Rng &rng);

inline double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

/// sigma( sum_i alpha_i * (1 - (beta_i - m_i)) ).
double node_probability(const MetricRow &metrics, const GuidanceParams &params);

/// Identifies the metrics (and hence graph) a probability vector was computed from.
struct Fingerprint {
    std::size_t node_count = 0;
    std::optional<std::uint64_t> metrics_checksum;  ///< absent for uniform or imported vectors
    friend bool operator==(const Fingerprint &, const Fingerprint &) = default;
};

/// Per-node guidance multipliers used by the decoder.
class ProbabilityVector {
public:
    ProbabilityVector() = default;
    ProbabilityVector(std::vector<double> values, Fingerprint fingerprint);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    const Fingerprint &fingerprint() const noexcept { return fingerprint_; }

    /// True when built for this table (node count and, if recorded, checksum agree).
    bool matches(const MetricsTable &table) const noexcept;

private:
    std::vector<double> values_;
    Fingerprint fingerprint_;
};

/// Elementwise node_probability. Throws ShapeError on an empty table.
ProbabilityVector probabilities_for_graph(const MetricsTable &metrics, const GuidanceParams &params);

/// All ones; reduces the guided decoder to the plain out-degree x key rule.
ProbabilityVector uniform_guidance(std::size_t n);

/// "node_id,probability" CSV (dense ids, any order, every node exactly once).
/// Throws ParseError/ShapeError; values must be finite and positive.
ProbabilityVector read_probability_csv(std::istream &in, std::size_t node_count);
void write_probability_csv(std::ostream &out, const ProbabilityVector &p);

/// {"alpha":[..5..],"beta":[..5..],"source":"llm|tuner|random|file","model":"..."}
nlohmann::json to_json(const GuidanceParams &params);
/// Parses and validates; throws ParseError on malformed JSON and ValidationError on bad values.
GuidanceParams params_from_json(const nlohmann::json &j);

GuidanceParams load_params_file(const std::filesystem::path &path);
void save_params_file(const std::filesystem::path &path, const GuidanceParams &params);

}  // namespace kddsp
