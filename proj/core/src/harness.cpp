#include "kddsp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace kddsp {

namespace {

constexpr std::uint64_t kStaticTag = 0x5374617469635f31ULL;
constexpr std::uint64_t kTuneTag = 0x54756e6572ULL;

std::string shortest(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::string> split(const std::string &line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

template <typename T>
T parse_number(const std::string &s, std::size_t line) {
    T value{};
    const auto *end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, value);
    if (r.ec != std::errc{} || r.ptr != end) throw ParseError("bad number '" + s + "'", line);
    return value;
}

constexpr std::string_view kRecordHeader =
    "instance,n,arcs,k,d,algorithm,guidance,rng_seed,objective,seconds,generations,evaluations,timestamp,seeds";

std::vector<std::int64_t> to_original(const std::vector<NodeId> &dense, const IdMap &ids) {
    std::vector<std::int64_t> out;
    out.reserve(dense.size());
    for (auto v : dense) out.push_back(ids.original(v));
    return out;
}

}  // namespace

std::string to_string(AlgorithmLabel label) {
    switch (label) {
        case AlgorithmLabel::Brkga: return "brkga";
        case AlgorithmLabel::BrkgaLlm: return "brkga+llm";
        case AlgorithmLabel::BrkgaStatic: return "brkga+static";
        case AlgorithmLabel::BrkgaDynamic: return "brkga+dynamic";
        case AlgorithmLabel::BrkgaTuned: return "brkga+tuned";
        case AlgorithmLabel::DirectTopk: return "direct-topk";
        case AlgorithmLabel::OutDegree: return "out-degree";
    }
    return "brkga";
}

AlgorithmLabel parse_algorithm_label(std::string_view s) {
    for (auto l : {AlgorithmLabel::Brkga, AlgorithmLabel::BrkgaLlm, AlgorithmLabel::BrkgaStatic,
                   AlgorithmLabel::BrkgaDynamic, AlgorithmLabel::BrkgaTuned, AlgorithmLabel::DirectTopk,
                   AlgorithmLabel::OutDegree})
        if (to_string(l) == s) return l;
    throw ConfigError("unknown algorithm label '" + std::string(s) + "'");
}

bool is_deterministic(AlgorithmLabel label) noexcept {
    return label == AlgorithmLabel::DirectTopk || label == AlgorithmLabel::OutDegree;
}

bool needs_params(AlgorithmLabel label) noexcept {
    return label == AlgorithmLabel::BrkgaLlm || label == AlgorithmLabel::DirectTopk;
}

std::string RunRecord::key() const {
    return instance + '|' + std::to_string(k) + '|' + std::to_string(d) + '|' + to_string(label) + '|' +
           std::to_string(rng_seed);
}

void write_run_record_header(std::ostream &out) { out << kRecordHeader << '\n'; }

void write_run_record(std::ostream &out, const RunRecord &r) {
    out << r.instance << ',' << r.n << ',' << r.arcs << ',' << r.k << ',' << r.d << ',' << to_string(r.label)
        << ',' << r.guidance << ',' << r.rng_seed << ',' << r.objective << ',' << shortest(r.seconds) << ','
        << r.generations << ',' << r.evaluations << ',' << r.timestamp << ',';
    for (std::size_t i = 0; i < r.seeds.size(); ++i) out << (i ? " " : "") << r.seeds[i];
    out << '\n';
}

std::vector<RunRecord> read_run_records(std::istream &in) {
    std::vector<RunRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != kRecordHeader) throw ParseError("unexpected run record header", 1);
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 14) throw ParseError("expected 14 fields, got " + std::to_string(f.size()), line_no);
        RunRecord r;
        r.instance = f[0];
        r.n = parse_number<std::size_t>(f[1], line_no);
        r.arcs = parse_number<std::size_t>(f[2], line_no);
        r.k = parse_number<std::size_t>(f[3], line_no);
        r.d = parse_number<int>(f[4], line_no);
        try {
            r.label = parse_algorithm_label(f[5]);
        } catch (const ConfigError &e) {
            throw ParseError(e.what(), line_no);
        }
        r.guidance = f[6];
        r.rng_seed = parse_number<std::uint64_t>(f[7], line_no);
        r.objective = parse_number<std::size_t>(f[8], line_no);
        r.seconds = parse_number<double>(f[9], line_no);
        r.generations = parse_number<std::size_t>(f[10], line_no);
        r.evaluations = parse_number<std::size_t>(f[11], line_no);
        r.timestamp = f[12];
        std::istringstream seeds(f[13]);
        std::string tok;
        while (seeds >> tok) r.seeds.push_back(parse_number<std::int64_t>(tok, line_no));
        out.push_back(std::move(r));
    }
    return out;
}

bool revalidate(const RunRecord &record, const LoadedGraph &instance) {
    std::vector<NodeId> dense;
    for (auto original : record.seeds) {
        const auto v = instance.ids.dense(original);
        if (!v) return false;
        dense.push_back(*v);
    }
    try {
        SeedSet seeds(std::move(dense), record.k, instance.graph.node_count());
        return objective(instance.graph, seeds, record.d) == record.objective;
    } catch (const ValidationError &) {
        return false;
    }
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeError("pearson: series lengths differ");
    if (x.size() < 2) throw ShapeError("pearson: need at least two points");
    auto constant = [](std::span<const double> s) {
        return std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); });
    };
    if (constant(x) || constant(y)) throw UndefinedCorrelation("pearson: constant series");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport correlate(std::string series_a, std::span<const double> x, std::string series_b,
                            std::span<const double> y) {
    const double rho = pearson(x, y);
    return {std::move(series_a), std::move(series_b), rho, x.size()};
}

Solution direct_topk_solution(std::span<const double> values, std::size_t k, const DirectedGraph &graph, int d) {
    const std::size_t n = graph.node_count();
    if (values.size() != n) throw ShapeError("value vector length differs from node count");
    if (k == 0 || k > n) throw ConfigError("k must lie in [1, " + std::to_string(n) + "]");
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), NodeId{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](NodeId a, NodeId b) { return values[a] > values[b] || (values[a] == values[b] && a < b); });
    order.resize(k);
    return evaluate_solution(graph, SeedSet(std::move(order), k, n), d);
}

Solution out_degree_solution(const DirectedGraph &graph, std::size_t k, int d) {
    std::vector<double> degree(graph.node_count());
    for (NodeId v = 0; v < degree.size(); ++v) degree[v] = static_cast<double>(graph.out_degree(v));
    return direct_topk_solution(degree, k, graph, d);
}

TuningResult tune_params(const DirectedGraph &graph, const MetricsTable &metrics, std::size_t k, int d,
                         const TuningOptions &options, Rng &rng) {
    if (options.trials == 0) throw ConfigError("tuning needs at least one trial");
    if (options.runs_per_trial == 0) throw ConfigError("tuning needs at least one run per trial");
    options.inner.validate();

    std::vector<TuningTrial> log;
    std::size_t best = 0;
    for (std::size_t t = 0; t < options.trials; ++t) {
        auto params = random_params(rng).with_source(ParamsSource::Tuner);
        const auto probs = probabilities_for_graph(metrics, params);
        double total = 0.0;
        // Every candidate sees the same inner seeds.
        for (std::size_t r = 0; r < options.runs_per_trial; ++r) {
            BrkgaConfig cfg = options.inner;
            cfg.rng_seed = derive_seed({options.inner.rng_seed, r});
            BrkgaSolver solver(graph, k, d, GuidanceMode::fixed(probs), cfg, &metrics);
            total += static_cast<double>(solver.run().best.objective);
        }
        log.push_back({std::move(params), total / static_cast<double>(options.runs_per_trial)});
        if (log.back().score > log[best].score) best = t;
    }
    return TuningResult{log[best].params, log[best].score, std::move(log)};
}

void write_tuning_log_csv(std::ostream &out, const TuningResult &result) {
    out << "trial";
    for (std::size_t i = 1; i <= kMetricCount; ++i) out << ",alpha_" << i;
    for (std::size_t i = 1; i <= kMetricCount; ++i) out << ",beta_" << i;
    out << ",score\n";
    for (std::size_t t = 0; t < result.log.size(); ++t) {
        const auto &trial = result.log[t];
        out << t;
        for (double a : trial.params.alpha()) out << ',' << shortest(a);
        for (double b : trial.params.beta()) out << ',' << shortest(b);
        out << ',' << shortest(trial.score) << '\n';
    }
}

namespace {

Budget budget_from_json(const nlohmann::json &j) {
    Budget b;
    if (j.contains("seconds")) b.seconds = j.at("seconds").get<double>();
    if (j.contains("generations")) b.generations = j.at("generations").get<std::size_t>();
    if (j.contains("evaluations")) b.evaluations = j.at("evaluations").get<std::size_t>();
    return b;
}

nlohmann::json budget_to_json(const Budget &b) {
    nlohmann::json j = nlohmann::json::object();
    if (b.seconds) j["seconds"] = *b.seconds;
    if (b.generations) j["generations"] = *b.generations;
    if (b.evaluations) j["evaluations"] = *b.evaluations;
    return j;
}

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

ExperimentPlan plan_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir) {
    ExperimentPlan plan;
    try {
        for (const auto &inst : j.at("instances")) {
            PlanInstance pi;
            pi.name = inst.at("name").get<std::string>();
            pi.path = resolve(base_dir, inst.at("path").get<std::string>());
            if (inst.contains("llm_params")) pi.llm_params = resolve(base_dir, inst["llm_params"].get<std::string>());
            if (inst.contains("tuned_params"))
                pi.tuned_params = resolve(base_dir, inst["tuned_params"].get<std::string>());
            plan.instances.push_back(std::move(pi));
        }
        plan.k_values = j.at("k").get<std::vector<std::size_t>>();
        plan.d_values = j.at("d").get<std::vector<int>>();
        for (const auto &l : j.at("algorithms")) plan.labels.push_back(parse_algorithm_label(l.get<std::string>()));
        plan.runs = j.value("runs", plan.runs);
        plan.seed = j.value("seed", plan.seed);
        plan.workers = j.value("workers", plan.workers);
        if (j.contains("brkga")) {
            const auto &b = j["brkga"];
            plan.brkga.population_size = b.value("population_size", plan.brkga.population_size);
            plan.brkga.elite_fraction = b.value("elite_fraction", plan.brkga.elite_fraction);
            plan.brkga.mutant_fraction = b.value("mutant_fraction", plan.brkga.mutant_fraction);
            plan.brkga.prob_elite = b.value("prob_elite", plan.brkga.prob_elite);
            plan.brkga.seed_individual = b.value("seed_individual", plan.brkga.seed_individual);
        }
        plan.brkga.budget = budget_from_json(j.at("budget"));
        plan.tuning.inner = plan.brkga;
        if (j.contains("tuning")) {
            const auto &t = j["tuning"];
            plan.tuning.trials = t.value("trials", plan.tuning.trials);
            plan.tuning.runs_per_trial = t.value("runs_per_trial", plan.tuning.runs_per_trial);
            if (t.contains("budget")) plan.tuning.inner.budget = budget_from_json(t["budget"]);
        }
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(std::string("experiment plan: ") + e.what());
    }

    if (plan.instances.empty()) throw ConfigError("plan lists no instances");
    std::set<std::string> names;
    for (const auto &inst : plan.instances) {
        if (inst.name.empty() || inst.name.find_first_of(",|\n") != std::string::npos)
            throw ConfigError("instance name '" + inst.name + "' is empty or contains ',' or '|'");
        if (!names.insert(inst.name).second) throw ConfigError("duplicate instance name '" + inst.name + "'");
        for (auto l : plan.labels)
            if (needs_params(l) && !inst.llm_params)
                throw ConfigError("instance '" + inst.name + "' needs llm_params for " + to_string(l));
    }
    if (plan.k_values.empty() || plan.d_values.empty() || plan.labels.empty())
        throw ConfigError("plan needs non-empty k, d and algorithms lists");
    for (auto k : plan.k_values)
        if (k == 0) throw ConfigError("k must be >= 1");
    for (auto d : plan.d_values)
        if (d < 1) throw ConfigError("d must be >= 1");
    if (plan.runs == 0) throw ConfigError("runs must be >= 1");
    if (plan.workers == 0) throw ConfigError("workers must be >= 1");
    plan.brkga.validate();
    plan.tuning.inner.validate();
    return plan;
}

ExperimentPlan load_plan(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open plan " + path.string());
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError("plan " + path.string() + " is not valid JSON");
    return plan_from_json(j, path.parent_path());
}

nlohmann::json to_json(const ExperimentPlan &plan) {
    nlohmann::json j;
    auto &insts = j["instances"] = nlohmann::json::array();
    for (const auto &inst : plan.instances) {
        nlohmann::json e{{"name", inst.name}, {"path", inst.path.string()}};
        if (inst.llm_params) e["llm_params"] = inst.llm_params->string();
        if (inst.tuned_params) e["tuned_params"] = inst.tuned_params->string();
        insts.push_back(std::move(e));
    }
    j["k"] = plan.k_values;
    j["d"] = plan.d_values;
    auto &labels = j["algorithms"] = nlohmann::json::array();
    for (auto l : plan.labels) labels.push_back(to_string(l));
    j["runs"] = plan.runs;
    j["seed"] = plan.seed;
    j["workers"] = plan.workers;
    j["brkga"] = {{"population_size", plan.brkga.population_size},
                  {"elite_fraction", plan.brkga.elite_fraction},
                  {"mutant_fraction", plan.brkga.mutant_fraction},
                  {"prob_elite", plan.brkga.prob_elite},
                  {"seed_individual", plan.brkga.seed_individual}};
    j["budget"] = budget_to_json(plan.brkga.budget);
    j["tuning"] = {{"trials", plan.tuning.trials},
                   {"runs_per_trial", plan.tuning.runs_per_trial},
                   {"budget", budget_to_json(plan.tuning.inner.budget)}};
    return j;
}

std::uint64_t cell_seed(std::uint64_t plan_seed, std::string_view instance, std::size_t k, int d,
                        AlgorithmLabel label, std::size_t run) {
    return derive_seed({plan_seed, fnv1a(instance), k, static_cast<std::uint64_t>(d),
                        static_cast<std::uint64_t>(label), run});
}

namespace {

struct InstanceData {
    const PlanInstance *entry = nullptr;
    std::optional<LoadedGraph> loaded;
    std::optional<MetricsTable> metrics;
    std::optional<GuidanceParams> llm;
    std::optional<GuidanceParams> tuned_file;
};

struct Task {
    const InstanceData *instance;
    std::size_t k;
    int d;
    AlgorithmLabel label;
    std::uint64_t seed;
    const GuidanceParams *tuned;
};

RunRecord execute_task(const Task &t, const BrkgaConfig &base) {
    const auto &inst = *t.instance;
    const auto &g = inst.loaded->graph;
    RunRecord r;
    r.instance = inst.entry->name;
    r.n = g.node_count();
    r.arcs = g.arc_count();
    r.k = t.k;
    r.d = t.d;
    r.label = t.label;
    r.rng_seed = t.seed;

    const auto start = std::chrono::steady_clock::now();
    std::vector<NodeId> seeds;
    if (is_deterministic(t.label)) {
        Solution s = t.label == AlgorithmLabel::OutDegree
                         ? out_degree_solution(g, t.k, t.d)
                         : direct_topk_solution(probabilities_for_graph(*inst.metrics, *inst.llm).values(), t.k, g,
                                                t.d);
        r.guidance = t.label == AlgorithmLabel::OutDegree ? "out-degree" : to_string(inst.llm->source());
        r.objective = s.objective;
        seeds = s.seeds.nodes();
    } else {
        BrkgaConfig cfg = base;
        cfg.rng_seed = t.seed;
        const std::uint64_t mode_seed = derive_seed({t.seed, kStaticTag});
        GuidanceMode mode = GuidanceMode::uniform();
        switch (t.label) {
            case AlgorithmLabel::BrkgaLlm:
                mode = GuidanceMode::fixed(probabilities_for_graph(*inst.metrics, *inst.llm));
                r.guidance = to_string(inst.llm->source());
                break;
            case AlgorithmLabel::BrkgaTuned:
                mode = GuidanceMode::fixed(probabilities_for_graph(*inst.metrics, *t.tuned));
                r.guidance = "tuner";
                break;
            case AlgorithmLabel::BrkgaStatic:
                mode = GuidanceMode::static_random(mode_seed);
                r.guidance = "static-random";
                break;
            case AlgorithmLabel::BrkgaDynamic:
                mode = GuidanceMode::dynamic_random(mode_seed);
                r.guidance = "dynamic-random";
                break;
            default: r.guidance = "uniform"; break;
        }
        BrkgaSolver solver(g, t.k, t.d, std::move(mode), cfg, inst.metrics ? &*inst.metrics : nullptr);
        const auto result = solver.run();
        r.objective = result.best.objective;
        r.generations = result.generations;
        r.evaluations = result.evaluations;
        seeds = result.best.seeds.nodes();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.seeds = to_original(seeds, inst.loaded->ids);
    r.timestamp = utc_now();
    return r;
}

}  // namespace

ExperimentOutcome compare_experiment(const ExperimentPlan &plan, const std::filesystem::path &records_csv,
                                     const std::filesystem::path &summary_csv, std::ostream *progress) {
    ExperimentOutcome outcome;
    std::map<std::string, RunRecord> done;
    bool need_header = true;
    if (std::filesystem::exists(records_csv) && std::filesystem::file_size(records_csv) > 0) {
        std::ifstream in(records_csv);
        for (auto &r : read_run_records(in)) done.emplace(r.key(), std::move(r));
        need_header = false;
    }

    const bool wants_metrics = std::any_of(plan.labels.begin(), plan.labels.end(), [](AlgorithmLabel l) {
        return l != AlgorithmLabel::Brkga && l != AlgorithmLabel::OutDegree;
    });
    const bool wants_tuned = std::find(plan.labels.begin(), plan.labels.end(), AlgorithmLabel::BrkgaTuned) !=
                             plan.labels.end();

    std::vector<std::unique_ptr<InstanceData>> instances;
    for (const auto &entry : plan.instances) {
        auto data = std::make_unique<InstanceData>();
        data->entry = &entry;
        try {
            data->loaded = load_edge_list_file(entry.path);
            if (entry.llm_params && std::any_of(plan.labels.begin(), plan.labels.end(), needs_params))
                data->llm = load_params_file(*entry.llm_params);
            if (wants_tuned && entry.tuned_params) data->tuned_file = load_params_file(*entry.tuned_params);
        } catch (const Error &e) {
            outcome.skipped.push_back(entry.name + ": " + e.what());
            if (progress) *progress << "skipping " << entry.name << ": " << e.what() << '\n';
            continue;
        }
        if (wants_metrics) {
            MetricsOptions mo;
            mo.threads = plan.workers;
            data->metrics = compute_metrics(data->loaded->graph, mo);
        }
        instances.push_back(std::move(data));
    }

    std::map<std::string, GuidanceParams> tuned;  // keyed by instance|k|d
    std::vector<Task> tasks;
    for (const auto &inst : instances) {
        const auto n = inst->loaded->graph.node_count();
        for (auto k : plan.k_values) {
            if (k > n) {
                outcome.skipped.push_back(inst->entry->name + ": k = " + std::to_string(k) + " exceeds " +
                                          std::to_string(n) + " nodes");
                continue;
            }
            for (auto d : plan.d_values) {
                for (auto label : plan.labels) {
                    const std::size_t runs = is_deterministic(label) ? 1 : plan.runs;
                    for (std::size_t run = 0; run < runs; ++run) {
                        Task t{inst.get(), k, d, label, cell_seed(plan.seed, inst->entry->name, k, d, label, run),
                               nullptr};
                        RunRecord probe;
                        probe.instance = inst->entry->name;
                        probe.k = k;
                        probe.d = d;
                        probe.label = label;
                        probe.rng_seed = t.seed;
                        if (auto it = done.find(probe.key()); it != done.end()) {
                            outcome.records.push_back(it->second);
                            ++outcome.resumed;
                            continue;
                        }
                        if (label == AlgorithmLabel::BrkgaTuned) {
                            const auto tkey = inst->entry->name + '|' + std::to_string(k) + '|' + std::to_string(d);
                            auto it = tuned.find(tkey);
                            if (it == tuned.end()) {
                                if (inst->tuned_file) {
                                    it = tuned.emplace(tkey, *inst->tuned_file).first;
                                } else {
                                    if (progress) *progress << "tuning " << tkey << '\n';
                                    TuningOptions opts = plan.tuning;
                                    opts.inner.rng_seed = derive_seed({plan.seed, fnv1a(inst->entry->name), k,
                                                                       static_cast<std::uint64_t>(d), kTuneTag});
                                    Rng rng(derive_seed({opts.inner.rng_seed, kTuneTag}));
                                    auto res = tune_params(inst->loaded->graph, *inst->metrics, k, d, opts, rng);
                                    it = tuned.emplace(tkey, res.best).first;
                                }
                            }
                            t.tuned = &it->second;
                        }
                        tasks.push_back(t);
                    }
                }
            }
        }
    }

    std::ofstream out(records_csv, std::ios::app);
    if (!out) throw InputError("cannot write " + records_csv.string());
    if (need_header) write_run_record_header(out);

    std::mutex collector;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                auto rec = execute_task(tasks[i], plan.brkga);
                std::lock_guard lock(collector);
                write_run_record(out, rec);
                out.flush();
                if (progress)
                    *progress << rec.instance << " k=" << rec.k << " d=" << rec.d << ' ' << to_string(rec.label)
                              << " seed=" << rec.rng_seed << " -> " << rec.objective << '\n';
                outcome.records.push_back(std::move(rec));
                ++outcome.executed;
            } catch (...) {
                std::lock_guard lock(collector);
                if (!failure) failure = std::current_exception();
                next = tasks.size();
                return;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const unsigned count = std::max(1u, std::min<unsigned>(plan.workers, static_cast<unsigned>(tasks.size())));
        for (unsigned w = 0; w < count; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::sort(outcome.records.begin(), outcome.records.end(), [](const RunRecord &a, const RunRecord &b) {
        return std::tie(a.instance, a.d, a.k, a.label, a.rng_seed) < std::tie(b.instance, b.d, b.k, b.label, b.rng_seed);
    });
    std::ofstream summary(summary_csv);
    if (!summary) throw InputError("cannot write " + summary_csv.string());
    write_summary_csv(summary, outcome.records);
    return outcome;
}

void write_summary_csv(std::ostream &out, const std::vector<RunRecord> &records) {
    using Row = std::pair<std::string, int>;
    using Column = std::pair<std::size_t, AlgorithmLabel>;
    std::set<Row> rows;
    std::set<Column> columns;
    std::map<std::pair<Row, Column>, std::pair<double, std::size_t>> sums;
    for (const auto &r : records) {
        Row row{r.instance, r.d};
        Column col{r.k, r.label};
        rows.insert(row);
        columns.insert(col);
        auto &[sum, count] = sums[{row, col}];
        sum += static_cast<double>(r.objective);
        ++count;
    }
    out << "instance,d";
    for (const auto &[k, label] : columns) out << ',' << k << ':' << to_string(label);
    out << '\n';
    for (const auto &row : rows) {
        out << row.first << ',' << row.second;
        for (const auto &col : columns) {
            out << ',';
            if (auto it = sums.find({row, col}); it != sums.end())
                out << shortest(it->second.first / static_cast<double>(it->second.second));
        }
        out << '\n';
    }
}

CorrelationMatrix metric_correlation_matrix(const MetricsTable &metrics) {
    CorrelationMatrix m{};
    std::array<std::vector<double>, kMetricCount> cols;
    for (std::size_t c = 0; c < kMetricCount; ++c) cols[c] = metrics.column(static_cast<Metric>(c));
    for (std::size_t a = 0; a < kMetricCount; ++a)
        for (std::size_t b = 0; b < kMetricCount; ++b) {
            try {
                m[a][b] = pearson(cols[a], cols[b]);
            } catch (const UndefinedCorrelation &) {
            } catch (const ShapeError &) {
            }
        }
    return m;
}

void write_metric_long_csv(std::ostream &out, const MetricsTable &metrics, const IdMap *ids) {
    out << "node_id,metric,value\n";
    for (std::size_t v = 0; v < metrics.size(); ++v) {
        const auto id = ids ? ids->original(static_cast<NodeId>(v)) : static_cast<std::int64_t>(v);
        for (std::size_t c = 0; c < kMetricCount; ++c)
            out << id << ',' << metric_name(c) << ',' << shortest(metrics.row(v)[c]) << '\n';
    }
}

void write_correlation_matrix_csv(std::ostream &out, const MetricsTable &metrics) {
    const auto m = metric_correlation_matrix(metrics);
    out << "metric";
    for (std::size_t c = 0; c < kMetricCount; ++c) out << ',' << metric_name(c);
    out << '\n';
    std::vector<std::string_view> constant;
    for (std::size_t a = 0; a < kMetricCount; ++a) {
        if (!m[a][a]) constant.push_back(metric_name(a));
        out << metric_name(a);
        for (std::size_t b = 0; b < kMetricCount; ++b) {
            out << ',';
            if (m[a][b]) out << shortest(*m[a][b]);
        }
        out << '\n';
    }
    if (!constant.empty()) {
        out << "# constant:";
        for (auto name : constant) out << ' ' << name;
        out << '\n';
    }
}

}  // namespace kddsp
