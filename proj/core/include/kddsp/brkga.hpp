#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kddsp/graph.hpp"
#include "kddsp/guidance.hpp"
#include "kddsp/influence.hpp"
#include "kddsp/metrics.hpp"
#include "kddsp/rng.hpp"

namespace kddsp {

/// Random-key chromosome. fitness and selection are filled in by the decoder.
struct Individual {
    std::vector<double> keys;
    std::optional<std::size_t> fitness;
    std::vector<NodeId> selection;  ///< decoded seed set, ascending
};

using Population = std::vector<Individual>;

/// Stopping rule; whichever bound is reached first ends the run.
struct Budget {
    std::optional<double> seconds;
    std::optional<std::size_t> generations;
    std::optional<std::size_t> evaluations;

    bool bounded() const noexcept { return seconds || generations || evaluations; }
};

struct BrkgaConfig {
    std::size_t population_size = 100;
    double elite_fraction = 0.15;
    double mutant_fraction = 0.15;
    double prob_elite = 0.7;
    bool seed_individual = true;  ///< add one individual with every key 0.5
    std::uint64_t rng_seed = 1;
    Budget budget;
    unsigned threads = 1;

    /// Throws ConfigError if any parameter is out of range, the crossover
    /// share would be empty, or the budget is unbounded.
    void validate() const;

    std::size_t elite_count() const noexcept;
    std::size_t mutant_count() const noexcept;
    std::size_t crossover_count() const noexcept;
};

/// How decoder probabilities are obtained for a run.
class GuidanceMode {
public:
    enum class Kind { Uniform, Fixed, StaticRandom, DynamicRandom };

    static GuidanceMode uniform() { return GuidanceMode(Kind::Uniform); }
    static GuidanceMode fixed(ProbabilityVector probabilities);
    /// Random alpha/beta drawn once per run.
    static GuidanceMode static_random(std::uint64_t seed);
    /// Random alpha/beta redrawn at every generation.
    static GuidanceMode dynamic_random(std::uint64_t seed);

    Kind kind() const noexcept { return kind_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const ProbabilityVector &probabilities() const noexcept { return probabilities_; }
    bool needs_metrics() const noexcept {
        return kind_ == Kind::StaticRandom || kind_ == Kind::DynamicRandom;
    }

private:
    explicit GuidanceMode(Kind kind) : kind_(kind) {}
    Kind kind_;
    std::uint64_t seed_ = 0;
    ProbabilityVector probabilities_;
};

std::string to_string(GuidanceMode::Kind kind);

/**
 * Greedy decoder: phi(v) = outdeg(v) * key(v) * p(v); the k nodes with the
 * largest phi form the solution, ties going to the smaller id.
 */
class Decoder {
public:
    /// Throws ConfigError when k == 0, k > node_count, or d < 1.
    Decoder(const DirectedGraph &graph, std::size_t k, int d);

    /// Selected node ids, ascending. Throws ShapeError on length mismatch.
    std::vector<NodeId> select(std::span<const double> keys, std::span<const double> probabilities);

    /// Decodes, evaluates and caches fitness/selection on the individual.
    std::size_t evaluate(Individual &individual, std::span<const double> probabilities);

    std::size_t k() const noexcept { return k_; }
    int d() const noexcept { return d_; }

private:
    const DirectedGraph *graph_;
    std::size_t k_;
    int d_;
    CoverageEvaluator coverage_;
    std::vector<double> phi_;
    std::vector<NodeId> order_;
};

/// p_size individuals with i.i.d. uniform keys; with seed_individual the last one has every key 0.5.
/// Individual i draws from its own stream derived from (rng_seed, generation 0, i).
Population init_population(const BrkgaConfig &config, std::size_t node_count);

/// Parameterized uniform crossover: each gene comes from the elite parent with probability prob_elite.
/// Throws ShapeError when the parents differ in length.
Individual crossover(const Individual &elite, const Individual &other, double prob_elite, Rng &rng);

struct TrajectoryRecord {
    std::size_t generation = 0;
    std::size_t evaluations = 0;  ///< cumulative
    std::size_t best_fitness = 0;
    double seconds = 0.0;
    std::vector<NodeId> best_solution;
    std::optional<GuidanceParams> params;  ///< guidance in force (random modes)
};

struct GenerationStats {
    std::size_t elites = 0;
    std::size_t mutants = 0;
    std::size_t offspring = 0;
    std::size_t evaluations = 0;
};

struct RunResult {
    Solution best;
    std::vector<TrajectoryRecord> trajectory;
    std::size_t generations = 0;
    std::size_t evaluations = 0;
    double seconds = 0.0;
};

/// BRKGA for the k-d dominating set problem with guidance-aware decoding.
class BrkgaSolver {
public:
    /// metrics is required for the random guidance modes and, when given,
    /// is checked against fixed probabilities carrying a checksum.
    BrkgaSolver(const DirectedGraph &graph, std::size_t k, int d, GuidanceMode mode, BrkgaConfig config,
                const MetricsTable *metrics = nullptr);

    /// Generates and evaluates the initial population.
    Population initial_population();

    /// One generation: elites kept, mutants injected, offspring bred, then
    /// only mutants and offspring evaluated. generation >= 1.
    GenerationStats evolve(Population &population, std::size_t generation);

    RunResult run();

    std::span<const double> probabilities() const noexcept { return probabilities_; }
    const std::optional<GuidanceParams> &current_params() const noexcept { return params_; }
    const BrkgaConfig &config() const noexcept { return config_; }

private:
    void refresh_guidance(std::size_t generation);
    void evaluate(Population &population, std::size_t begin, std::size_t end);

    const DirectedGraph *graph_;
    const MetricsTable *metrics_;
    std::size_t k_;
    int d_;
    GuidanceMode mode_;
    BrkgaConfig config_;
    std::vector<Decoder> decoders_;
    std::vector<double> probabilities_;
    std::optional<GuidanceParams> params_;
};

/// Index of the best individual: highest fitness, lowest index on ties.
std::size_t best_index(const Population &population);

/// CSV: generation,evaluations,best_fitness,best_solution[,alpha_1..beta_5][,seconds].
/// Solution ids are space separated and translated through ids when given. Wall-clock
/// is only written on request so that fixed-seed runs give byte-identical files.
void write_trajectory_csv(std::ostream &out, const RunResult &result, bool with_params,
                          bool with_seconds, const IdMap *ids = nullptr);

}  // namespace kddsp
