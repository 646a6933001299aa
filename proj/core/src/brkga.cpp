#include "kddsp/brkga.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <thread>

#include "kddsp/error.hpp"

namespace kddsp {

namespace {

enum StreamTag : std::uint64_t { kKeys = 1, kParents = 2, kCrossover = 3, kGuidance = 4 };

void fill_random_keys(Individual &ind, std::size_t n, Rng rng) {
    ind.keys.resize(n);
    for (double &k : ind.keys) k = uniform01(rng);
    ind.fitness.reset();
    ind.selection.clear();
}

std::vector<std::size_t> ranking(const Population &population) {
    std::vector<std::size_t> idx(population.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return population[a].fitness.value_or(0) > population[b].fitness.value_or(0);
    });
    return idx;
}

}  // namespace

void BrkgaConfig::validate() const {
    if (population_size < 3) throw ConfigError("population size must be at least 3");
    if (!(elite_fraction > 0.0 && elite_fraction < 1.0))
        throw ConfigError("elite fraction must lie in (0,1)");
    if (!(mutant_fraction > 0.0 && mutant_fraction < 1.0))
        throw ConfigError("mutant fraction must lie in (0,1)");
    if (elite_fraction + mutant_fraction >= 1.0)
        throw ConfigError("elite and mutant fractions must sum to less than 1");
    if (elite_count() + mutant_count() >= population_size)
        throw ConfigError("population leaves no room for crossover offspring");
    if (!(prob_elite > 0.5 && prob_elite <= 1.0))
        throw ConfigError("elite inheritance probability must lie in (0.5,1]");
    if (!budget.bounded()) throw ConfigError("budget needs a time, generation or evaluation limit");
    if (budget.seconds && !(*budget.seconds >= 0.0)) throw ConfigError("time limit must be >= 0");
    if (threads == 0) throw ConfigError("threads must be >= 1");
}

std::size_t BrkgaConfig::elite_count() const noexcept {
    return std::max<std::size_t>(static_cast<std::size_t>(elite_fraction * population_size), 1);
}

std::size_t BrkgaConfig::mutant_count() const noexcept {
    return std::max<std::size_t>(static_cast<std::size_t>(mutant_fraction * population_size), 1);
}

std::size_t BrkgaConfig::crossover_count() const noexcept {
    const auto used = elite_count() + mutant_count();
    return used < population_size ? population_size - used : 0;
}

GuidanceMode GuidanceMode::fixed(ProbabilityVector probabilities) {
    GuidanceMode m(Kind::Fixed);
    m.probabilities_ = std::move(probabilities);
    return m;
}

GuidanceMode GuidanceMode::static_random(std::uint64_t seed) {
    GuidanceMode m(Kind::StaticRandom);
    m.seed_ = seed;
    return m;
}

GuidanceMode GuidanceMode::dynamic_random(std::uint64_t seed) {
    GuidanceMode m(Kind::DynamicRandom);
    m.seed_ = seed;
    return m;
}

std::string to_string(GuidanceMode::Kind kind) {
    switch (kind) {
        case GuidanceMode::Kind::Uniform: return "uniform";
        case GuidanceMode::Kind::Fixed: return "fixed";
        case GuidanceMode::Kind::StaticRandom: return "static-random";
        case GuidanceMode::Kind::DynamicRandom: return "dynamic-random";
    }
    return "uniform";
}

Decoder::Decoder(const DirectedGraph &graph, std::size_t k, int d)
    : graph_(&graph), k_(k), d_(d), coverage_(graph), phi_(graph.node_count()),
      order_(graph.node_count()) {
    if (k == 0) throw ConfigError("k must be >= 1");
    if (k > graph.node_count())
        throw ConfigError("k = " + std::to_string(k) + " exceeds node count " +
                          std::to_string(graph.node_count()));
    if (d < 1) throw ConfigError("d must be >= 1");
}

std::vector<NodeId> Decoder::select(std::span<const double> keys, std::span<const double> probabilities) {
    const std::size_t n = graph_->node_count();
    if (keys.size() != n || probabilities.size() != n)
        throw ShapeError("decoder input length differs from node count");
    for (NodeId v = 0; v < n; ++v)
        phi_[v] = static_cast<double>(graph_->out_degree(v)) * keys[v] * probabilities[v];
    std::iota(order_.begin(), order_.end(), NodeId{0});
    auto better = [this](NodeId a, NodeId b) {
        return phi_[a] > phi_[b] || (phi_[a] == phi_[b] && a < b);
    };
    auto kth = order_.begin() + static_cast<std::ptrdiff_t>(k_);
    if (k_ < n) std::nth_element(order_.begin(), kth - 1, order_.end(), better);
    std::vector<NodeId> chosen(order_.begin(), kth);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::size_t Decoder::evaluate(Individual &individual, std::span<const double> probabilities) {
    individual.selection = select(individual.keys, probabilities);
    const auto value = coverage_.count(individual.selection, d_);
    individual.fitness = value;
    return value;
}

Population init_population(const BrkgaConfig &config, std::size_t node_count) {
    Population pop(config.population_size);
    for (std::size_t i = 0; i < pop.size(); ++i)
        fill_random_keys(pop[i], node_count, derive_rng({config.rng_seed, 0, i, kKeys}));
    if (config.seed_individual) std::fill(pop.back().keys.begin(), pop.back().keys.end(), 0.5);
    return pop;
}

Individual crossover(const Individual &elite, const Individual &other, double prob_elite, Rng &rng) {
    if (elite.keys.size() != other.keys.size()) throw ShapeError("parents differ in length");
    Individual child;
    child.keys.resize(elite.keys.size());
    for (std::size_t i = 0; i < child.keys.size(); ++i)
        child.keys[i] = uniform01(rng) < prob_elite ? elite.keys[i] : other.keys[i];
    return child;
}

std::size_t best_index(const Population &population) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < population.size(); ++i)
        if (population[i].fitness.value_or(0) > population[best].fitness.value_or(0)) best = i;
    return best;
}

BrkgaSolver::BrkgaSolver(const DirectedGraph &graph, std::size_t k, int d, GuidanceMode mode,
                         BrkgaConfig config, const MetricsTable *metrics)
    : graph_(&graph), metrics_(metrics), k_(k), d_(d), mode_(std::move(mode)), config_(config) {
    config_.validate();
    const std::size_t n = graph.node_count();
    if (metrics_ && metrics_->size() != n) throw ShapeError("metrics table does not match graph");
    switch (mode_.kind()) {
        case GuidanceMode::Kind::Uniform: probabilities_.assign(n, 1.0); break;
        case GuidanceMode::Kind::Fixed: {
            const auto &p = mode_.probabilities();
            if (p.size() != n) throw ShapeError("probability vector does not match graph");
            if (metrics_ && !p.matches(*metrics_))
                throw ShapeError("probability vector was computed for different metrics");
            probabilities_.assign(p.values().begin(), p.values().end());
            break;
        }
        case GuidanceMode::Kind::StaticRandom:
        case GuidanceMode::Kind::DynamicRandom:
            if (!metrics_) throw ConfigError("random guidance modes need the metrics table");
            refresh_guidance(0);
            break;
    }
    const unsigned workers = std::min<unsigned>(config_.threads,
                                                static_cast<unsigned>(config_.population_size));
    decoders_.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) decoders_.emplace_back(graph, k, d);
}

void BrkgaSolver::refresh_guidance(std::size_t generation) {
    Rng rng = mode_.kind() == GuidanceMode::Kind::DynamicRandom
                  ? derive_rng({mode_.seed(), generation, kGuidance})
                  : derive_rng({mode_.seed(), kGuidance});
    params_ = random_params(rng);
    const auto p = probabilities_for_graph(*metrics_, *params_);
    probabilities_.assign(p.values().begin(), p.values().end());
}

void BrkgaSolver::evaluate(Population &population, std::size_t begin, std::size_t end) {
    const std::size_t count = end - begin;
    const std::size_t workers = std::min<std::size_t>(decoders_.size(), count);
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i) decoders_[0].evaluate(population[i], probabilities_);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = begin + w * chunk, hi = std::min(end, lo + chunk);
            for (std::size_t i = lo; i < hi; ++i) decoders_[w].evaluate(population[i], probabilities_);
        });
    }
}

Population BrkgaSolver::initial_population() {
    auto pop = init_population(config_, graph_->node_count());
    evaluate(pop, 0, pop.size());
    return pop;
}

GenerationStats BrkgaSolver::evolve(Population &population, std::size_t generation) {
    const std::size_t n = graph_->node_count();
    const std::size_t n_elite = config_.elite_count();
    const std::size_t n_mutant = config_.mutant_count();
    const std::size_t n_child = config_.crossover_count();
    const auto order = ranking(population);

    Population next;
    next.reserve(config_.population_size);
    for (std::size_t i = 0; i < n_elite; ++i) next.push_back(population[order[i]]);

    for (std::size_t i = 0; i < n_mutant; ++i) {
        Individual m;
        fill_random_keys(m, n, derive_rng({config_.rng_seed, generation, n_elite + i, kKeys}));
        next.push_back(std::move(m));
    }

    Rng parents = derive_rng({config_.rng_seed, generation, kParents});
    const std::size_t n_rest = order.size() - n_elite;
    for (std::size_t i = 0; i < n_child; ++i) {
        const auto &elite = population[order[uniform_below(parents, n_elite)]];
        const auto &other = population[order[n_elite + uniform_below(parents, n_rest)]];
        Rng genes = derive_rng({config_.rng_seed, generation, n_elite + n_mutant + i, kCrossover});
        next.push_back(crossover(elite, other, config_.prob_elite, genes));
    }

    if (mode_.kind() == GuidanceMode::Kind::DynamicRandom) refresh_guidance(generation);
    evaluate(next, n_elite, next.size());
    population = std::move(next);
    return {n_elite, n_mutant, n_child, n_mutant + n_child};
}

RunResult BrkgaSolver::run() {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

    RunResult result;
    auto pop = initial_population();
    result.evaluations = pop.size();

    auto record = [&](std::size_t generation) {
        const auto &best = pop[best_index(pop)];
        if (result.trajectory.empty() || *best.fitness > result.best.objective)
            result.best = Solution{SeedSet(best.selection, k_, graph_->node_count()), *best.fitness, d_};
        TrajectoryRecord r;
        r.generation = generation;
        r.evaluations = result.evaluations;
        r.best_fitness = result.best.objective;
        r.seconds = elapsed();
        r.best_solution = result.best.seeds.nodes();
        r.params = params_;
        result.trajectory.push_back(std::move(r));
    };
    record(0);

    const auto &b = config_.budget;
    for (std::size_t g = 1;; ++g) {
        if (b.generations && result.generations >= *b.generations) break;
        if (b.evaluations && result.evaluations >= *b.evaluations) break;
        if (b.seconds && elapsed() >= *b.seconds) break;
        const auto stats = evolve(pop, g);
        result.evaluations += stats.evaluations;
        result.generations = g;
        record(g);
    }
    result.seconds = elapsed();
    return result;
}

void write_trajectory_csv(std::ostream &out, const RunResult &result, bool with_params,
                          bool with_seconds, const IdMap *ids) {
    out << "generation,evaluations,best_fitness,best_solution";
    if (with_params) {
        for (int i = 1; i <= 5; ++i) out << ",alpha_" << i;
        for (int i = 1; i <= 5; ++i) out << ",beta_" << i;
    }
    if (with_seconds) out << ",seconds";
    out << '\n';
    for (const auto &r : result.trajectory) {
        out << r.generation << ',' << r.evaluations << ',' << r.best_fitness << ',';
        for (std::size_t i = 0; i < r.best_solution.size(); ++i) {
            if (i) out << ' ';
            if (ids)
                out << ids->original(r.best_solution[i]);
            else
                out << r.best_solution[i];
        }
        if (with_params) {
            if (r.params) {
                for (double a : r.params->alpha()) out << ',' << a;
                for (double b : r.params->beta()) out << ',' << b;
            } else {
                out << ",,,,,,,,,,";
            }
        }
        if (with_seconds) out << ',' << r.seconds;
        out << '\n';
    }
}

}  // namespace kddsp
