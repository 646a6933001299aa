// kddsp: command line front end for the k-d dominating set toolkit.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "kddsp/brkga.hpp"
#include "kddsp/graph.hpp"
#include "kddsp/guidance.hpp"
#include "kddsp/harness.hpp"
#include "kddsp/influence.hpp"
#include "kddsp/llm_gateway.hpp"
#include "kddsp/metrics.hpp"
#include "kddsp/prompting.hpp"

namespace fs = std::filesystem;
using namespace kddsp;

namespace {

constexpr std::uint64_t kGuidanceSeedTag = 0x6775696465ULL;

std::ofstream open_out(const fs::path &path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    return out;
}

// Writes to the file, or stdout for "" and "-".
template <typename F>
void emit(const std::string &path, F &&write) {
    if (path.empty() || path == "-") {
        write(std::cout);
    } else {
        auto out = open_out(path);
        write(out);
    }
}

MetricsTable metrics_for(const LoadedGraph &g, const std::string &metrics_csv, unsigned threads) {
    if (!metrics_csv.empty()) {
        std::ifstream in(metrics_csv);
        if (!in) throw InputError("cannot open " + metrics_csv);
        auto table = read_metrics_csv(in);
        if (table.size() != g.graph.node_count())
            throw ShapeError("metrics file has " + std::to_string(table.size()) + " rows, graph has " +
                             std::to_string(g.graph.node_count()) + " nodes");
        return table;
    }
    MetricsOptions mo;
    mo.threads = threads;
    return compute_metrics(g.graph, mo);
}

std::string join_ids(const std::vector<NodeId> &nodes, const IdMap &ids, char sep) {
    std::string s;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i) s += sep;
        s += std::to_string(ids.original(nodes[i]));
    }
    return s;
}

struct PromptFlags {
    std::string graph;
    std::string metrics;
    std::string fixture;
    std::size_t k = 32;
    int d = 1;
    bool omit_problem = false;
    bool omit_example = false;
    bool decimal = false;
    unsigned threads = 1;

    void add_to(CLI::App *app) {
        app->add_option("--graph", graph, "Edge list of the evaluation graph")->required()->check(CLI::ExistingFile);
        app->add_option("--metrics", metrics, "Precomputed metrics CSV (from `kddsp metrics`)");
        app->add_option("--fixture", fixture, "Example fixture JSON")->default_str(default_fixture_path().string());
        app->add_option("--k", k, "Seed budget")->check(CLI::PositiveNumber);
        app->add_option("--d", d, "Hop limit")->check(CLI::PositiveNumber);
        app->add_flag("--omit-problem", omit_problem, "Leave out the problem definition");
        app->add_flag("--omit-example", omit_example, "Leave out the example graph");
        app->add_flag("--decimal", decimal, "Fixed decimal notation instead of scientific");
        app->add_option("--threads", threads, "Threads for metric computation")->check(CLI::PositiveNumber);
    }

    PromptDocument build(const LoadedGraph &g) const {
        const auto example = load_fixture(fixture.empty() ? default_fixture_path() : fs::path(fixture));
        const auto table = metrics_for(g, metrics, threads);
        PromptOptions opts;
        opts.include_problem = !omit_problem;
        opts.include_example = !omit_example;
        opts.notation = decimal ? Notation::Decimal : Notation::Scientific;
        return build_prompt(example, table, k, d, opts);
    }
};

int cmd_generate(std::size_t n, double p, std::uint64_t seed, const std::string &out) {
    const auto g = generate_erdos_renyi(n, p, seed);
    emit(out, [&](std::ostream &o) {
        o << "# erdos-renyi n=" << n << " p=" << p << " seed=" << seed << '\n';
        write_edge_list(o, g);
    });
    return 0;
}

int cmd_metrics(const std::string &graph, const std::string &out, const std::string &closeness, unsigned threads,
                const std::string &id_map) {
    const auto g = load_edge_list_file(graph);
    MetricsOptions mo;
    mo.threads = threads;
    mo.closeness = closeness == "harmonic-in" ? ClosenessVariant::HarmonicIn : ClosenessVariant::HarmonicOut;
    const auto table = compute_metrics(g.graph, mo);
    emit(out, [&](std::ostream &o) { write_metrics_csv(o, table, &g.ids); });
    if (!id_map.empty()) {
        auto o = open_out(id_map);
        write_id_map_csv(o, g.ids);
    }
    return 0;
}

int cmd_evaluate(const std::string &graph, const std::string &seeds_text, const std::string &seeds_file,
                 const std::string &records, int d, std::size_t k) {
    const auto g = load_edge_list_file(graph);
    if (!records.empty()) {
        std::ifstream in(records);
        if (!in) throw InputError("cannot open " + records);
        std::size_t bad = 0, total = 0;
        for (const auto &r : read_run_records(in)) {
            ++total;
            if (!revalidate(r, g)) {
                ++bad;
                std::cout << "mismatch: " << r.key() << " stored " << r.objective << '\n';
            }
        }
        std::cout << total - bad << '/' << total << " records reproduce their objective\n";
        return bad ? 1 : 0;
    }
    std::vector<NodeId> dense;
    std::string list = seeds_text;
    if (!seeds_file.empty()) {
        std::ifstream f(seeds_file);
        if (!f) throw InputError("cannot open " + seeds_file);
        for (std::string line; std::getline(f, line);) {
            if (line.empty() || line[0] == '#') continue;
            list += ',' + line;
        }
    }
    std::string tok;
    std::istringstream in(list);
    while (std::getline(in, tok, ',')) {
        tok.erase(0, tok.find_first_not_of(" \t\r"));
        tok.erase(tok.find_last_not_of(" \t\r") + 1);
        if (tok.empty()) continue;
        const auto v = g.ids.dense(std::stoll(tok));
        if (!v) throw InputError("node " + tok + " is not in the graph");
        dense.push_back(*v);
    }
    const std::size_t limit = k ? k : dense.size();
    const auto sol = evaluate_solution(g.graph, SeedSet(dense, limit, g.graph.node_count()), d);
    std::cout << "objective " << sol.objective << '\n'
              << "covered " << influence_set(g.graph, sol.seeds, d).size() << '\n';
    return 0;
}

int cmd_prompt(const PromptFlags &flags, const std::string &out) {
    const auto g = load_edge_list_file(flags.graph);
    const auto doc = flags.build(g);
    emit(out, [&](std::ostream &o) { o << doc.rendered; });
    std::cerr << "estimated tokens: " << estimate_tokens(doc.rendered) << '\n';
    return 0;
}

struct AskFlags {
    std::string preset;
    std::string provider;
    std::string model_name;
    std::optional<double> temperature;
    std::optional<int> max_tokens;
    std::optional<std::size_t> context_window;
    std::optional<double> window_margin;
    std::string base_url;
    std::string replay_log;
    std::string log;
    std::string mock_response;
    std::string out;
    std::string raw_out;
};

int cmd_ask(const PromptFlags &pf, const AskFlags &af) {
    const auto g = load_edge_list_file(pf.graph);
    const auto doc = pf.build(g);

    ModelConfig config;
    if (!af.preset.empty()) {
        auto preset = model_preset(af.preset);
        if (!preset) throw ConfigError("unknown model preset '" + af.preset + "'");
        config = *preset;
    }
    if (!af.provider.empty()) config.provider = parse_provider(af.provider);
    if (!af.model_name.empty()) config.model_name = af.model_name;
    if (af.temperature) config.temperature = *af.temperature;
    if (af.max_tokens) config.max_output_tokens = *af.max_tokens;
    if (af.context_window) config.context_window = *af.context_window;
    if (af.window_margin) config.window_margin = *af.window_margin;
    if (!af.base_url.empty()) config.base_url = af.base_url;
    if (!af.mock_response.empty()) {
        std::ifstream in(af.mock_response);
        if (!in) throw InputError("cannot open " + af.mock_response);
        std::ostringstream s;
        s << in.rdbuf();
        config.mock_response = s.str();
    }
    std::cerr << "estimated tokens: " << estimate_tokens(doc.rendered) << '\n';

    std::string answer;
    if (!af.replay_log.empty()) {
        const auto ex = replay_exchange(af.replay_log, doc.rendered);
        answer = ex.response_text;
        config.model_name = ex.model;
    } else {
        std::optional<ExchangeLog> log;
        if (!af.log.empty()) log.emplace(af.log);
        LlmGateway gateway(config, nullptr, log ? &*log : nullptr);
        answer = gateway.execute(doc);
    }
    if (!af.raw_out.empty()) {
        auto o = open_out(af.raw_out);
        o << answer;
    }
    const auto raw = parse_llm_answer(answer);
    const auto params = validate_params(raw.alpha, raw.beta, ParamsSource::Llm)
                            .with_source(ParamsSource::Llm, config.model_name);
    if (af.out.empty())
        std::cout << to_json(params).dump(2) << '\n';
    else
        save_params_file(af.out, params);
    return 0;
}

struct SolveFlags {
    std::string graph;
    std::size_t k = 32;
    int d = 1;
    std::string guidance = "uniform";
    std::string metrics;
    BrkgaConfig config;
    bool seed_flag = true;
    std::optional<double> time_limit;
    std::optional<std::size_t> max_generations;
    std::optional<std::size_t> max_evaluations;
    std::size_t runs = 1;
    std::string out_dir = "solve_out";
    bool with_seconds = false;
};

int cmd_solve(SolveFlags f) {
    const auto g = load_edge_list_file(f.graph);
    f.config.seed_individual = f.seed_flag;
    f.config.budget.seconds = f.time_limit;
    f.config.budget.generations = f.max_generations;
    f.config.budget.evaluations = f.max_evaluations;
    if (!f.config.budget.bounded()) f.config.budget.seconds = 900.0;
    f.config.validate();

    std::optional<MetricsTable> metrics;
    auto need_metrics = [&]() -> const MetricsTable & {
        if (!metrics) metrics = metrics_for(g, f.metrics, f.config.threads);
        return *metrics;
    };

    std::optional<GuidanceParams> file_params;
    std::optional<ProbabilityVector> file_probs;
    const std::string &gs = f.guidance;
    if (gs.rfind("file:", 0) == 0) {
        file_params = load_params_file(gs.substr(5));
        file_probs = probabilities_for_graph(need_metrics(), *file_params);
    } else if (gs.rfind("probfile:", 0) == 0) {
        std::ifstream in(gs.substr(9));
        if (!in) throw InputError("cannot open " + gs.substr(9));
        file_probs = read_probability_csv(in, g.graph.node_count());
    } else if (gs == "static-random" || gs == "dynamic-random") {
        need_metrics();
    } else if (gs != "uniform") {
        throw ConfigError("unknown guidance '" + gs + "'");
    }

    fs::create_directories(f.out_dir);
    auto solutions = open_out(fs::path(f.out_dir) / "solutions.csv");
    solutions << "run,rng_seed,objective,generations,evaluations,seeds\n";
    for (std::size_t run = 0; run < f.runs; ++run) {
        BrkgaConfig cfg = f.config;
        cfg.rng_seed = f.config.rng_seed + run;
        const auto mode_seed = derive_seed({cfg.rng_seed, kGuidanceSeedTag});
        GuidanceMode mode = GuidanceMode::uniform();
        if (file_probs)
            mode = GuidanceMode::fixed(*file_probs);
        else if (gs == "static-random")
            mode = GuidanceMode::static_random(mode_seed);
        else if (gs == "dynamic-random")
            mode = GuidanceMode::dynamic_random(mode_seed);
        BrkgaSolver solver(g.graph, f.k, f.d, std::move(mode), cfg, metrics ? &*metrics : nullptr);
        const auto result = solver.run();

        auto traj = open_out(fs::path(f.out_dir) / ("trajectory_" + std::to_string(run) + ".csv"));
        write_trajectory_csv(traj, result, gs == "static-random" || gs == "dynamic-random", f.with_seconds, &g.ids);
        const auto ids = join_ids(result.best.seeds.nodes(), g.ids, ' ');
        solutions << run << ',' << cfg.rng_seed << ',' << result.best.objective << ',' << result.generations << ','
                  << result.evaluations << ',' << ids << '\n';
        std::cout << "run " << run << ": objective " << result.best.objective << " seeds " << ids << '\n';
    }
    return 0;
}

int cmd_tune(const std::string &graph, const std::string &metrics_csv, std::size_t k, int d, TuningOptions opts,
             std::optional<std::size_t> gens, std::optional<double> seconds, std::uint64_t seed,
             const std::string &out, const std::string &log_path, const std::string &compare_with) {
    const auto g = load_edge_list_file(graph);
    const auto table = metrics_for(g, metrics_csv, 1);
    opts.inner.budget.generations = gens;
    opts.inner.budget.seconds = seconds;
    if (!opts.inner.budget.bounded()) opts.inner.budget.generations = 50;
    opts.inner.rng_seed = seed;
    Rng rng(derive_seed({seed, 0x74756e65ULL}));
    const auto result = tune_params(g.graph, table, k, d, opts, rng);
    if (!log_path.empty()) {
        auto o = open_out(log_path);
        write_tuning_log_csv(o, result);
    }
    if (out.empty())
        std::cout << to_json(result.best).dump(2) << '\n';
    else
        save_params_file(out, result.best);
    std::cerr << "best mean objective " << result.best_score << " over " << result.log.size() << " trials\n";
    if (!compare_with.empty()) {
        const auto other = load_params_file(compare_with);
        for (auto [name, a, b] : {std::tuple{"alpha", result.best.alpha(), other.alpha()},
                                  std::tuple{"beta", result.best.beta(), other.beta()}}) {
            try {
                std::cout << "rho_" << name << " = " << pearson(a, b) << '\n';
            } catch (const UndefinedCorrelation &e) {
                std::cout << "rho_" << name << " undefined: " << e.what() << '\n';
            }
        }
    }
    return 0;
}

int cmd_compare(const std::string &plan_path, const std::string &records, const std::string &summary, bool quiet) {
    const auto plan = load_plan(plan_path);
    const auto outcome = compare_experiment(plan, records, summary, quiet ? nullptr : &std::cerr);
    std::cerr << outcome.executed << " runs executed, " << outcome.resumed << " resumed\n";
    for (const auto &s : outcome.skipped) std::cerr << "skipped " << s << '\n';
    return outcome.exit_code();
}

int cmd_export_metrics(const std::string &graph, const std::string &long_csv, const std::string &matrix_csv) {
    const auto g = load_edge_list_file(graph);
    const auto table = compute_metrics(g.graph);
    emit(long_csv, [&](std::ostream &o) { write_metric_long_csv(o, table, &g.ids); });
    emit(matrix_csv, [&](std::ostream &o) { write_correlation_matrix_csv(o, table); });
    return 0;
}

int cmd_fixture(const std::string &out, std::size_t generations, std::uint64_t seed) {
    Budget b;
    b.generations = generations;
    const auto fx = build_example_fixture(b, seed);
    save_fixture(out, fx);
    std::cerr << "example fixture: objective " << fx.objective << " with k = " << fx.k << ", d = " << fx.d << '\n';
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"k-d dominating set toolkit: metrics, guided BRKGA, LLM prompts and experiments"};
    app.require_subcommand(1);
    int rc = 0;

    std::size_t gen_n = 100;
    double gen_p = 0.05;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    auto *gen = app.add_subcommand("generate", "Erdos-Renyi digraph as an edge list");
    gen->add_option("--n", gen_n, "Node count")->check(CLI::PositiveNumber);
    gen->add_option("--p", gen_p, "Arc probability")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--out", gen_out, "Output file (default stdout)");
    gen->callback([&] { rc = cmd_generate(gen_n, gen_p, gen_seed, gen_out); });

    std::string m_graph, m_out, m_closeness = "harmonic-out", m_ids;
    unsigned m_threads = 1;
    auto *met = app.add_subcommand("metrics", "Raw and normalized node metrics as CSV");
    met->add_option("--graph", m_graph)->required()->check(CLI::ExistingFile);
    met->add_option("--out", m_out, "Output file (default stdout)");
    met->add_option("--closeness", m_closeness)->check(CLI::IsMember({"harmonic-out", "harmonic-in"}));
    met->add_option("--threads", m_threads)->check(CLI::PositiveNumber);
    met->add_option("--id-map", m_ids, "Also write dense_id,original_id");
    met->callback([&] { rc = cmd_metrics(m_graph, m_out, m_closeness, m_threads, m_ids); });

    std::string e_graph, e_seeds, e_seeds_file, e_records;
    int e_d = 1;
    std::size_t e_k = 0;
    auto *ev = app.add_subcommand("evaluate", "Objective of a seed set, or re-validation of run records");
    ev->add_option("--graph", e_graph)->required()->check(CLI::ExistingFile);
    auto *seeds_opt = ev->add_option("--seeds", e_seeds, "Comma-separated original node ids");
    auto *file_opt = ev->add_option("--seeds-file", e_seeds_file, "Original node ids, one per line")
                         ->check(CLI::ExistingFile);
    ev->add_option("--records", e_records, "Run record CSV to re-validate")->excludes(seeds_opt)->excludes(file_opt);
    ev->add_option("--d", e_d)->check(CLI::PositiveNumber);
    ev->add_option("--k", e_k, "Seed limit (default: number of seeds)");
    ev->callback([&] {
        if (e_seeds.empty() && e_seeds_file.empty() && e_records.empty())
            throw CLI::ValidationError("evaluate", "--seeds, --seeds-file or --records");
        rc = cmd_evaluate(e_graph, e_seeds, e_seeds_file, e_records, e_d, e_k);
    });

    PromptFlags p_flags;
    std::string p_out;
    auto *pr = app.add_subcommand("prompt", "Render the LLM prompt for a graph");
    p_flags.add_to(pr);
    pr->add_option("--out", p_out, "Output file (default stdout)");
    pr->callback([&] { rc = cmd_prompt(p_flags, p_out); });

    PromptFlags a_flags;
    AskFlags ask_flags;
    auto *ask = app.add_subcommand("ask", "Query a model for alpha/beta and write them as JSON");
    a_flags.add_to(ask);
    ask->add_option("--model", ask_flags.preset, "gpt-4o, claude-3-opus, command-r-plus or mixtral-8x22b");
    ask->add_option("--provider", ask_flags.provider)->check(CLI::IsMember({"openrouter", "anthropic", "mock"}));
    ask->add_option("--model-name", ask_flags.model_name, "Provider model identifier");
    ask->add_option("--temperature", ask_flags.temperature);
    ask->add_option("--max-tokens", ask_flags.max_tokens);
    ask->add_option("--context-window", ask_flags.context_window);
    ask->add_option("--window-margin", ask_flags.window_margin);
    ask->add_option("--base-url", ask_flags.base_url);
    ask->add_option("--replay", ask_flags.replay_log, "Answer from a recorded exchange log instead")
        ->check(CLI::ExistingFile);
    ask->add_option("--log", ask_flags.log, "Append the exchange to this JSON-lines log");
    ask->add_option("--mock-response", ask_flags.mock_response, "File returned by the mock provider");
    ask->add_option("--raw-out", ask_flags.raw_out, "Save the raw answer text");
    ask->add_option("--out", ask_flags.out, "Parameter JSON (default stdout)");
    ask->callback([&] { rc = cmd_ask(a_flags, ask_flags); });

    SolveFlags s;
    auto *sv = app.add_subcommand("solve", "Run BRKGA with optional guidance");
    sv->add_option("--graph", s.graph)->required()->check(CLI::ExistingFile);
    sv->add_option("--k", s.k)->required()->check(CLI::PositiveNumber);
    sv->add_option("--d", s.d)->required()->check(CLI::PositiveNumber);
    sv->add_option("--guidance", s.guidance,
                   "uniform | file:<params.json> | probfile:<probs.csv> | static-random | dynamic-random");
    sv->add_option("--metrics", s.metrics, "Precomputed metrics CSV");
    sv->add_option("--pop-size", s.config.population_size);
    sv->add_option("--elite-frac", s.config.elite_fraction);
    sv->add_option("--mutant-frac", s.config.mutant_fraction);
    sv->add_option("--prob-elite", s.config.prob_elite);
    sv->add_option("--seed-flag", s.seed_flag, "Add the all-0.5 individual (0 or 1)");
    sv->add_option("--rng-seed", s.config.rng_seed);
    sv->add_option("--threads", s.config.threads)->check(CLI::PositiveNumber);
    sv->add_option("--time-limit", s.time_limit, "Seconds per run");
    sv->add_option("--max-generations", s.max_generations);
    sv->add_option("--max-evaluations", s.max_evaluations);
    sv->add_option("--runs", s.runs)->check(CLI::PositiveNumber);
    sv->add_option("--out-dir", s.out_dir);
    sv->add_flag("--with-seconds", s.with_seconds, "Add a wall-clock column to trajectories");
    sv->callback([&] { rc = cmd_solve(s); });

    std::string t_graph, t_metrics, t_out, t_log, t_compare;
    std::size_t t_k = 32;
    int t_d = 1;
    TuningOptions t_opts;
    std::optional<std::size_t> t_gens;
    std::optional<double> t_secs;
    std::uint64_t t_seed = 1;
    auto *tu = app.add_subcommand("tune", "Random-search tuning of alpha/beta");
    tu->add_option("--graph", t_graph)->required()->check(CLI::ExistingFile);
    tu->add_option("--metrics", t_metrics);
    tu->add_option("--k", t_k)->check(CLI::PositiveNumber);
    tu->add_option("--d", t_d)->check(CLI::PositiveNumber);
    tu->add_option("--trials", t_opts.trials)->check(CLI::PositiveNumber);
    tu->add_option("--runs-per-trial", t_opts.runs_per_trial)->check(CLI::PositiveNumber);
    tu->add_option("--pop-size", t_opts.inner.population_size);
    tu->add_option("--max-generations", t_gens, "Inner budget (default 50)");
    tu->add_option("--time-limit", t_secs, "Inner budget in seconds");
    tu->add_option("--rng-seed", t_seed);
    tu->add_option("--out", t_out, "Parameter JSON (default stdout)");
    tu->add_option("--log", t_log, "CSV of every trial");
    tu->add_option("--compare-with", t_compare, "Parameter JSON to correlate against")->check(CLI::ExistingFile);
    tu->callback([&] {
        rc = cmd_tune(t_graph, t_metrics, t_k, t_d, t_opts, t_gens, t_secs, t_seed, t_out, t_log, t_compare);
    });

    std::string c_plan, c_records = "records.csv", c_summary = "summary.csv";
    bool c_quiet = false;
    auto *cmp = app.add_subcommand("compare", "Execute an experiment plan");
    cmp->add_option("--plan", c_plan)->required()->check(CLI::ExistingFile);
    cmp->add_option("--records", c_records, "Per-run CSV (appended, resumable)");
    cmp->add_option("--summary", c_summary, "Per-cell mean table");
    cmp->add_flag("--quiet", c_quiet);
    cmp->callback([&] { rc = cmd_compare(c_plan, c_records, c_summary, c_quiet); });

    std::string x_graph, x_long, x_matrix = "-";
    auto *exm = app.add_subcommand("export-metrics", "Long-format metrics and their correlation matrix");
    exm->add_option("--graph", x_graph)->required()->check(CLI::ExistingFile);
    exm->add_option("--long", x_long, "Long CSV output")->required();
    exm->add_option("--matrix", x_matrix, "Matrix CSV output (default stdout)");
    exm->callback([&] { rc = cmd_export_metrics(x_graph, x_long, x_matrix); });

    std::string f_out = default_fixture_path().string();
    std::size_t f_gens = 200;
    std::uint64_t f_seed = 1;
    auto *fx = app.add_subcommand("fixture", "Regenerate the example fixture embedded in prompts");
    fx->add_option("--out", f_out);
    fx->add_option("--max-generations", f_gens);
    fx->add_option("--rng-seed", f_seed);
    fx->callback([&] { rc = cmd_fixture(f_out, f_gens, f_seed); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    } catch (const ContextWindowError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return rc;
}
