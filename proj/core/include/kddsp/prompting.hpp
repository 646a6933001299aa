#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kddsp/brkga.hpp"
#include "kddsp/error.hpp"
#include "kddsp/graph.hpp"
#include "kddsp/guidance.hpp"
#include "kddsp/metrics.hpp"

namespace kddsp {

/// Tag names of the prompt layout.
namespace tags {
inline constexpr std::string_view kProblem = "PROBLEM";
inline constexpr std::string_view kExampleGraph = "EXAMPLE GRAPH";
inline constexpr std::string_view kEvaluationGraph = "EVALUATION GRAPH";
inline constexpr std::string_view kRules = "RULES ANSWERING";
inline constexpr std::string_view kData = "DATA";
inline constexpr std::string_view kAnswer = "ANSWER";
}  // namespace tags

enum class Notation { Scientific, Decimal };

/// Significand digits after the decimal point in scientific notation.
inline constexpr int kSignificandDigits = 3;

/// "id,v1,...,v5" with each value as e.g. 4.561e-01 (or 0.456100 in decimal notation).
std::string format_metric_row(std::size_t node_id, std::span<const double> values,
                              Notation notation = Notation::Scientific);

/// Example graph embedded in every prompt: the pinned ER(100, 0.05) graph,
/// its metrics, and a BRKGA solution for k = 32, d = 1.
struct ExampleFixture {
    static constexpr std::size_t kNodes = 100;
    static constexpr double kArcProbability = 0.05;
    static constexpr std::uint64_t kGraphSeed = 20240229;
    static constexpr std::size_t kK = 32;
    static constexpr int kD = 1;

    DirectedGraph graph = DirectedGraph::from_arcs(1, {});
    MetricsTable metrics;
    std::vector<NodeId> solution;
    std::size_t k = kK;
    int d = kD;
    std::size_t objective = 0;
    std::uint64_t brkga_seed = 0;
};

/// Generates the fixture from scratch. Deterministic for a given budget and seed
/// when the budget has no wall-clock component.
ExampleFixture build_example_fixture(const Budget &brkga_budget, std::uint64_t rng_seed);

nlohmann::json fixture_to_json(const ExampleFixture &fixture);
/// Throws ParseError on schema problems and ValidationError when the solution is invalid.
ExampleFixture fixture_from_json(const nlohmann::json &j);
/// Serialized form as stored in the golden file (single JSON line plus newline).
std::string serialize_fixture(const ExampleFixture &fixture);
ExampleFixture load_fixture(const std::filesystem::path &path);
void save_fixture(const std::filesystem::path &path, const ExampleFixture &fixture);

/// Path of the committed golden fixture in the source tree.
std::filesystem::path default_fixture_path();

struct PromptOptions {
    bool include_problem = true;
    bool include_example = true;
    bool include_rules = true;  ///< must stay true; omission is refused
    Notation notation = Notation::Scientific;
};

struct PromptDocument {
    std::string problem_text;
    std::vector<std::string> example_data;
    std::vector<NodeId> example_solution;
    std::size_t k_example = 0;
    std::vector<std::string> evaluation_data;
    std::string rules_text;
    std::string rendered;
};

/// Compiles the four-tag prompt. Throws ConfigError when the rules section is
/// omitted, k or d is zero, or the evaluation table is empty.
PromptDocument build_prompt(const ExampleFixture &example, const MetricsTable &evaluation,
                            std::size_t k, int d, const PromptOptions &options = {});

/// Structural check of a rendered prompt; returns human-readable problems, empty when valid.
std::vector<std::string> lint_prompt(std::string_view rendered);

/// Lines inside the DATA block of the given top-level section (0 when absent).
std::size_t count_data_lines(std::string_view rendered, std::string_view section);

struct RawParams {
    MetricWeights alpha{};
    MetricWeights beta{};
};

/// The response did not contain ten usable values; keeps the raw text.
class AnswerParseError : public ParseError {
public:
    AnswerParseError(const std::string &what, std::string raw) : ParseError(what), raw_(std::move(raw)) {}
    const std::string &raw_text() const noexcept { return raw_; }

private:
    std::string raw_;
};

/// A label such as alpha_2 was given two different values.
class AmbiguityError : public AnswerParseError {
public:
    using AnswerParseError::AnswerParseError;
};

/**
 * Extracts alpha_1..alpha_5 and beta_1..beta_5 from free text. Labeled
 * assignments ("alpha_1 = 0.15", "Beta 3: 0.9", "\alpha_{2}=0.3") are
 * preferred; otherwise the first JSON object with 5-element "alpha" and
 * "beta" arrays is used.
 */
RawParams parse_llm_answer(std::string_view text);

/// Labeled prose ("alpha_1 = 0.15", one per line) that parse_llm_answer reads back.
std::string render_labeled_answer(const MetricWeights &alpha, const MetricWeights &beta);

}  // namespace kddsp
