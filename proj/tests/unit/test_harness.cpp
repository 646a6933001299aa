#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "kddsp/error.hpp"
#include "kddsp/harness.hpp"
#include "oracles.hpp"

using namespace kddsp;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    explicit TempDir(const std::string &name) : path_(fs::temp_directory_path() / name) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path &path() const { return path_; }

private:
    fs::path path_;
};

fs::path write_graph(const fs::path &dir, const std::string &name, const DirectedGraph &g) {
    const auto p = dir / name;
    std::ofstream out(p);
    write_edge_list(out, g);
    return p;
}

ExperimentPlan small_plan(const fs::path &graph) {
    ExperimentPlan plan;
    plan.instances.push_back({"er40", graph, std::nullopt, std::nullopt});
    plan.k_values = {3};
    plan.d_values = {1};
    plan.labels = {AlgorithmLabel::Brkga};
    plan.runs = 3;
    plan.brkga.population_size = 20;
    plan.brkga.budget.generations = 5;
    return plan;
}

std::vector<std::string> lines_of(const fs::path &p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(Pearson, PublishedParameterCorrelations) {
    const std::vector<double> alpha_tuner{.40, .08, .03, .40, .09}, alpha_llm{.10, .30, .20, .10, .30};
    const std::vector<double> beta_tuner{.78, .83, .65, .01, .75}, beta_llm{.60, .60, .90, .60, .60};
    EXPECT_NEAR(pearson(alpha_tuner, alpha_llm), -0.85, 0.01);
    EXPECT_NEAR(pearson(beta_tuner, beta_llm), 0.08, 0.005);
    EXPECT_NEAR(pearson(alpha_tuner, alpha_llm), oracle::pearson_textbook(alpha_tuner, alpha_llm), 1e-12);
}

TEST(Pearson, BasicProperties) {
    const std::vector<double> x{1, 2, 3, 4.5, 7};
    const std::vector<double> y{2, 1, 5, 3, 9};
    EXPECT_DOUBLE_EQ(pearson(x, x), 1.0);
    EXPECT_NEAR(pearson(x, y), pearson(y, x), 1e-15);
    std::vector<double> shifted, flipped;
    for (double v : y) {
        shifted.push_back(3.5 * v + 100.0);
        flipped.push_back(-2.0 * v);
    }
    EXPECT_NEAR(pearson(x, shifted), pearson(x, y), 1e-12);
    EXPECT_NEAR(pearson(x, flipped), -pearson(x, y), 1e-12);
}

TEST(Pearson, MatchesTextbookFormulaOnRandomData) {
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + t % 40;
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = uniform01(rng);
            y[i] = 0.3 * x[i] + uniform01(rng);
        }
        const double r = pearson(x, y);
        EXPECT_NEAR(r, oracle::pearson_textbook(x, y), 1e-9);
        EXPECT_LE(std::abs(r), 1.0);
    }
}

TEST(Pearson, Errors) {
    const std::vector<double> c{0.6, 0.6, 0.6}, x{1, 2, 3};
    EXPECT_THROW(pearson(c, x), UndefinedCorrelation);
    EXPECT_THROW(pearson(x, std::vector<double>{1, 2}), ShapeError);
    EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{2}), ShapeError);
    const auto rep = correlate("a", x, "b", std::vector<double>{3, 2, 1});
    EXPECT_EQ(rep.n_points, 3u);
    EXPECT_DOUBLE_EQ(rep.rho, -1.0);
}

TEST(Labels, RoundTrip) {
    for (auto l : {AlgorithmLabel::Brkga, AlgorithmLabel::BrkgaLlm, AlgorithmLabel::BrkgaStatic,
                   AlgorithmLabel::BrkgaDynamic, AlgorithmLabel::BrkgaTuned, AlgorithmLabel::DirectTopk,
                   AlgorithmLabel::OutDegree})
        EXPECT_EQ(parse_algorithm_label(to_string(l)), l);
    EXPECT_EQ(to_string(AlgorithmLabel::BrkgaLlm), "brkga+llm");
    EXPECT_THROW(parse_algorithm_label("greedy"), ConfigError);
}

TEST(DirectTopk, HandCases) {
    const auto star = DirectedGraph::from_arcs(4, std::vector<Arc>{{0, 1}, {0, 2}, {0, 3}});
    const auto s = direct_topk_solution(std::vector<double>{1, .5, .5, .5}, 1, star, 1);
    EXPECT_EQ(s.seeds.nodes(), std::vector<NodeId>{0});
    EXPECT_EQ(s.objective, 4u);
    EXPECT_EQ(direct_topk_solution(std::vector<double>(4, 0.7), 2, star, 1).seeds.nodes(),
              (std::vector<NodeId>{0, 1}));
    EXPECT_THROW(direct_topk_solution(std::vector<double>(3, 0.7), 2, star, 1), ShapeError);
    EXPECT_THROW(direct_topk_solution(std::vector<double>(4, 0.7), 5, star, 1), ConfigError);
}

TEST(DirectTopk, MatchesSortOracle) {
    Rng rng(12);
    for (std::uint32_t t = 0; t < 50; ++t) {
        const auto g = oracle::random_digraph(30, 0.1, t);
        std::vector<double> v(30);
        for (auto &x : v) x = std::round(uniform01(rng) * 5) / 5;
        const std::size_t k = 1 + t % 6;
        const auto s = direct_topk_solution(v, k, g, 2);
        const auto expected = oracle::top_k_by_sort(v, k);
        EXPECT_EQ(s.seeds.nodes(), expected);
        EXPECT_EQ(s.objective, oracle::influence(oracle::adjacency(g), expected, 2).size());
    }
}

TEST(OutDegree, MatchesSortOracle) {
    const auto g = oracle::random_digraph(40, 0.1, 77);
    std::vector<double> deg;
    for (NodeId v = 0; v < 40; ++v) deg.push_back(double(g.out_degree(v)));
    EXPECT_EQ(out_degree_solution(g, 6, 1).seeds.nodes(), oracle::top_k_by_sort(deg, 6));
}

TEST(Tuner, ArgmaxContract) {
    const auto g = generate_erdos_renyi(60, 0.05, 4);
    const auto m = compute_metrics(g);
    TuningOptions o;
    o.trials = 6;
    o.runs_per_trial = 2;
    o.inner.population_size = 20;
    o.inner.budget.generations = 3;
    Rng rng(1);
    const auto r = tune_params(g, m, 4, 2, o, rng);
    ASSERT_EQ(r.log.size(), 6u);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < r.log.size(); ++i)
        if (r.log[i].score > r.log[arg].score) arg = i;
    EXPECT_EQ(r.best_score, r.log[arg].score);
    EXPECT_EQ(r.best.alpha(), r.log[arg].params.alpha());
    EXPECT_EQ(r.best.source(), ParamsSource::Tuner);

    Rng again(1);
    const auto r2 = tune_params(g, m, 4, 2, o, again);
    EXPECT_EQ(r2.best_score, r.best_score);
    EXPECT_EQ(r2.best, r.best);

    o.trials = 1;
    Rng one(5);
    const auto single = tune_params(g, m, 4, 2, o, one);
    ASSERT_EQ(single.log.size(), 1u);
    EXPECT_EQ(single.best_score, single.log[0].score);

    std::ostringstream csv;
    write_tuning_log_csv(csv, r);
    const auto text = csv.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
}

TEST(RunRecords, CsvRoundTrip) {
    RunRecord r;
    r.instance = "soc-x";
    r.n = 10;
    r.arcs = 20;
    r.k = 3;
    r.d = 2;
    r.label = AlgorithmLabel::BrkgaDynamic;
    r.guidance = "dynamic-random";
    r.rng_seed = 18446744073709551615ULL;
    r.objective = 9;
    r.seconds = 0.125;
    r.generations = 4;
    r.evaluations = 90;
    r.timestamp = "2024-01-01T00:00:00Z";
    r.seeds = {-5, 7, 100000000000};
    std::stringstream s;
    write_run_record_header(s);
    write_run_record(s, r);
    const auto back = read_run_records(s);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].key(), r.key());
    EXPECT_EQ(back[0].seeds, r.seeds);
    EXPECT_EQ(back[0].seconds, r.seconds);
    EXPECT_EQ(back[0].timestamp, r.timestamp);
    EXPECT_EQ(back[0].guidance, r.guidance);

    std::istringstream bad("instance,n,arcs,k,d,algorithm,guidance,rng_seed,objective,seconds,generations,"
                           "evaluations,timestamp,seeds\nx,1,2\n");
    try {
        read_run_records(bad);
        FAIL();
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Compare, SingleCellThreeRuns) {
    TempDir dir("kddsp_compare_single");
    const auto plan = small_plan(write_graph(dir.path(), "g.txt", generate_erdos_renyi(40, 0.08, 3)));
    const auto out = compare_experiment(plan, dir.path() / "records.csv", dir.path() / "summary.csv");
    EXPECT_EQ(out.exit_code(), 0);
    ASSERT_EQ(out.records.size(), 3u);
    EXPECT_EQ(out.executed, 3u);

    const auto summary = lines_of(dir.path() / "summary.csv");
    ASSERT_EQ(summary.size(), 2u);
    EXPECT_EQ(summary[0], "instance,d,3:brkga");
    const double mean = (out.records[0].objective + out.records[1].objective + out.records[2].objective) / 3.0;
    const double printed = std::stod(summary[1].substr(summary[1].rfind(',') + 1));
    EXPECT_NEAR(printed, mean, 1e-12);
    EXPECT_EQ(summary[1].substr(0, 7), "er40,1,");

    std::set<std::uint64_t> seeds;
    for (const auto &r : out.records) seeds.insert(r.rng_seed);
    EXPECT_EQ(seeds.size(), 3u);
}

TEST(Compare, GridResumeAndRevalidation) {
    TempDir dir("kddsp_compare_grid");
    const auto graph_path = write_graph(dir.path(), "g.txt", generate_erdos_renyi(50, 0.06, 9));
    auto plan = small_plan(graph_path);
    plan.k_values = {2, 3, 4};
    plan.d_values = {1, 2, 3};
    plan.runs = 1;
    plan.labels = {AlgorithmLabel::Brkga, AlgorithmLabel::OutDegree};
    const auto records = dir.path() / "records.csv";
    const auto first = compare_experiment(plan, records, dir.path() / "summary.csv");
    EXPECT_EQ(first.records.size(), 18u);
    EXPECT_EQ(first.executed, 18u);

    const auto second = compare_experiment(plan, records, dir.path() / "summary.csv");
    EXPECT_EQ(second.executed, 0u);
    EXPECT_EQ(second.resumed, 18u);
    EXPECT_EQ(lines_of(records).size(), 19u);

    const auto loaded = load_edge_list_file(graph_path);
    std::ifstream in(records);
    for (const auto &r : read_run_records(in)) EXPECT_TRUE(revalidate(r, loaded)) << r.key();

    const auto summary = lines_of(dir.path() / "summary.csv");
    EXPECT_EQ(summary.size(), 4u);
}

TEST(Compare, DeterministicLabelsRunOnce) {
    TempDir dir("kddsp_compare_det");
    auto plan = small_plan(write_graph(dir.path(), "g.txt", generate_erdos_renyi(40, 0.08, 3)));
    plan.labels = {AlgorithmLabel::OutDegree};
    plan.runs = 5;
    const auto out = compare_experiment(plan, dir.path() / "r.csv", dir.path() / "s.csv");
    EXPECT_EQ(out.records.size(), 1u);
}

TEST(Compare, MissingInstanceIsSkippedWithExitTwo) {
    TempDir dir("kddsp_compare_missing");
    auto plan = small_plan(write_graph(dir.path(), "g.txt", generate_erdos_renyi(40, 0.08, 3)));
    plan.instances.push_back({"ghost", dir.path() / "nope.txt", std::nullopt, std::nullopt});
    const auto out = compare_experiment(plan, dir.path() / "r.csv", dir.path() / "s.csv");
    EXPECT_EQ(out.exit_code(), 2);
    ASSERT_EQ(out.skipped.size(), 1u);
    EXPECT_EQ(out.records.size(), 3u);
}

TEST(Compare, WorkersDoNotChangeResults) {
    TempDir dir("kddsp_compare_workers");
    auto plan = small_plan(write_graph(dir.path(), "g.txt", generate_erdos_renyi(40, 0.08, 3)));
    plan.runs = 4;
    const auto serial = compare_experiment(plan, dir.path() / "a.csv", dir.path() / "sa.csv");
    plan.workers = 3;
    const auto parallel = compare_experiment(plan, dir.path() / "b.csv", dir.path() / "sb.csv");
    ASSERT_EQ(serial.records.size(), parallel.records.size());
    for (std::size_t i = 0; i < serial.records.size(); ++i) {
        EXPECT_EQ(serial.records[i].key(), parallel.records[i].key());
        EXPECT_EQ(serial.records[i].objective, parallel.records[i].objective);
        EXPECT_EQ(serial.records[i].seeds, parallel.records[i].seeds);
    }
}

TEST(Plan, JsonRoundTripAndValidation) {
    const nlohmann::json j = {
        {"instances", {{{"name", "a"}, {"path", "graphs/a.txt"}, {"llm_params", "a.json"}}}},
        {"k", {2, 4}},
        {"d", {1}},
        {"algorithms", {"brkga", "brkga+llm"}},
        {"runs", 2},
        {"budget", {{"generations", 3}}},
    };
    const auto plan = plan_from_json(j, "/base");
    EXPECT_EQ(plan.instances[0].path, fs::path("/base/graphs/a.txt"));
    EXPECT_EQ(plan.k_values, (std::vector<std::size_t>{2, 4}));
    EXPECT_EQ(plan.labels[1], AlgorithmLabel::BrkgaLlm);
    const auto again = plan_from_json(to_json(plan));
    EXPECT_EQ(again.instances[0].path, plan.instances[0].path);
    EXPECT_EQ(again.brkga.budget.generations, plan.brkga.budget.generations);

    auto missing = j;
    missing["instances"][0].erase("llm_params");
    EXPECT_THROW(plan_from_json(missing), ConfigError);
    auto bad_label = j;
    bad_label["algorithms"] = {"greedy"};
    EXPECT_THROW(plan_from_json(bad_label), ConfigError);
    EXPECT_THROW(plan_from_json(nlohmann::json{{"k", {1}}}), ParseError);

    EXPECT_EQ(cell_seed(1, "a", 2, 1, AlgorithmLabel::Brkga, 0), cell_seed(1, "a", 2, 1, AlgorithmLabel::Brkga, 0));
    EXPECT_NE(cell_seed(1, "a", 2, 1, AlgorithmLabel::Brkga, 0), cell_seed(1, "a", 2, 1, AlgorithmLabel::Brkga, 1));
}

TEST(MetricMatrix, DiagonalAndPairwise) {
    const auto m = compute_metrics(generate_erdos_renyi(50, 0.1, 6));
    const auto matrix = metric_correlation_matrix(m);
    for (std::size_t a = 0; a < kMetricCount; ++a) {
        ASSERT_TRUE(matrix[a][a].has_value());
        EXPECT_NEAR(*matrix[a][a], 1.0, 1e-12);
        for (std::size_t b = 0; b < kMetricCount; ++b) {
            const auto x = m.column(static_cast<Metric>(a)), y = m.column(static_cast<Metric>(b));
            EXPECT_NEAR(*matrix[a][b], oracle::pearson_textbook(x, y), 1e-9);
            EXPECT_NEAR(*matrix[a][b], *matrix[b][a], 1e-15);
        }
    }
}

TEST(MetricMatrix, SymmetricGraphHasEqualDegreeColumns) {
    std::vector<Arc> arcs{{0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 2}, {1, 3}, {3, 1}};
    const auto m = compute_metrics(DirectedGraph::from_arcs(4, arcs));
    EXPECT_NEAR(*metric_correlation_matrix(m)[0][1], 1.0, 1e-12);
}

TEST(MetricMatrix, ConstantColumnsLeftEmpty) {
    const auto m = compute_metrics(generate_erdos_renyi(5, 1.0, 0));
    const auto matrix = metric_correlation_matrix(m);
    for (const auto &row : matrix)
        for (const auto &cell : row) EXPECT_FALSE(cell.has_value());
    std::ostringstream out;
    write_correlation_matrix_csv(out, m);
    EXPECT_NE(out.str().find("# constant:"), std::string::npos);

    std::ostringstream longform;
    write_metric_long_csv(longform, m);
    const auto text = longform.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "node_id,metric,value");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 5 * 5);
}
