#include "kddsp/prompting.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "kddsp/influence.hpp"

#ifndef KDDSP_FIXTURE_DIR
#define KDDSP_FIXTURE_DIR "fixtures"
#endif

namespace kddsp {

namespace {

std::string open_tag(std::string_view name) { return "[" + std::string(name) + "]"; }
std::string close_tag(std::string_view name) { return "[/" + std::string(name) + "]"; }

std::string problem_statement(std::size_t k, int d) {
    std::ostringstream s;
    s << "Let $G=(V,A)$ be a directed graph with node set $V$ and arc set $A$. For $u,v \\in V$, "
         "$dist(u,v)$ is the number of arcs on a shortest directed path from $u$ to $v$, and "
         "$dist(u,u)=0$.\n"
         "A node $u$ influences $I_d(u) := \\{ v \\in V \\mid dist(u,v) \\leq d \\}$, and a node set "
         "$U \\subseteq V$ influences $I_d(U) := \\bigcup_{u \\in U} I_d(u)$.\n"
         "The $k$-$d$ Dominating Set Problem ($k$-$d$DSP) is\n"
         "$$\\max_{U \\subseteq V} |I_d(U)| \\quad \\textrm{s.t.} \\quad |U| \\leq k$$\n"
         "For the evaluation graph below, $k = "
      << k << "$ and $d = " << d << "$.";
    return s.str();
}

std::string example_intro(const ExampleFixture &fx) {
    std::ostringstream s;
    s << "The example graph is a directed Erdos-Renyi random graph with " << fx.graph.node_count()
      << " nodes and arc probability " << ExampleFixture::kArcProbability << ". "
      << "Each data row is: node_id,in-degree,out-degree,closeness,betweenness,pagerank. "
         "Every metric is min-max normalized to the range [0,1]. "
         "The answer section lists, separated by commas, the "
      << fx.solution.size() << " nodes of a high-quality solution for $k = " << fx.k
      << "$ and $d = " << fx.d << "$.";
    return s.str();
}

std::string evaluation_intro(std::size_t n) {
    std::ostringstream s;
    s << "The evaluation graph has " << n
      << " nodes. Each data row is: node_id,in-degree,out-degree,closeness,betweenness,pagerank, "
         "normalized in the same way as for the example graph. No solution is given for this graph.";
    return s.str();
}

std::string rules_statement(std::size_t k, int d, bool has_example) {
    std::ostringstream s;
    s << "Estimate, for every node $v_j$ of the evaluation graph, the probability that it belongs "
         "to an optimal solution of the $k$-$d$DSP with $k = "
      << k << "$ and $d = " << d
      << "$. Use the formula\n"
         "$$p(v_j) = \\sigma\\Big( \\sum_{i=1}^{5} \\alpha_i \\cdot (1 - (\\beta_i - m_{j,i})) \\Big)$$\n"
         "where $\\sigma$ is the sigmoid function and $m_{j,1},\\dots,m_{j,5}$ are the normalized "
         "in-degree, out-degree, closeness, betweenness and pagerank of $v_j$.\n"
         "- alpha values: $0 < \\alpha_i < 1$ weight the importance of metric $i$; they must sum to "
         "one, $\\sum_{i=1}^{5} \\alpha_i = 1$.\n"
         "- beta values: $0 < \\beta_i < 1$ are independent correction parameters; $\\beta_i$ is the "
         "best possible value a node can have for metric $i$ within $[0,1]$.\n";
    if (has_example)
        s << "Use the metrics and the solution of the example graph to recognise which metric values "
             "characterise the selected nodes, and transfer these patterns to the evaluation graph.\n";
    s << "Answer with exactly these ten lines, replacing each placeholder by a number:\n";
    for (int i = 1; i <= 5; ++i) s << "alpha_" << i << " = <value>\n";
    for (int i = 1; i <= 5; ++i) s << "beta_" << i << " = <value>\n";
    return s.str();
}

std::vector<std::string> data_lines(const MetricsTable &t, Notation notation) {
    std::vector<std::string> lines;
    lines.reserve(t.size());
    for (std::size_t v = 0; v < t.size(); ++v) lines.push_back(format_metric_row(v, t.row(v), notation));
    return lines;
}

void append_block(std::string &out, std::string_view tag, const std::vector<std::string> &lines) {
    out += open_tag(tag);
    out += '\n';
    for (const auto &l : lines) {
        out += l;
        out += '\n';
    }
    out += close_tag(tag);
    out += '\n';
}

struct TagToken {
    std::string name;
    bool closing;
    std::size_t begin;  ///< offset of '['
    std::size_t end;    ///< offset past ']'
};

bool is_known_tag(std::string_view name) {
    return name == tags::kProblem || name == tags::kExampleGraph || name == tags::kEvaluationGraph ||
           name == tags::kRules || name == tags::kData || name == tags::kAnswer;
}

std::vector<TagToken> scan_tags(std::string_view text) {
    std::vector<TagToken> out;
    for (std::size_t i = text.find('['); i != std::string_view::npos; i = text.find('[', i + 1)) {
        const auto close = text.find(']', i);
        if (close == std::string_view::npos) break;
        std::string_view body = text.substr(i + 1, close - i - 1);
        const bool closing = !body.empty() && body.front() == '/';
        if (closing) body.remove_prefix(1);
        if (is_known_tag(body)) out.push_back({std::string(body), closing, i, close + 1});
    }
    return out;
}

bool is_top_level(std::string_view name) {
    return name == tags::kProblem || name == tags::kExampleGraph || name == tags::kEvaluationGraph ||
           name == tags::kRules;
}

std::optional<double> to_double(std::string_view s) {
    double x = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
    return x;
}

std::optional<RawParams> json_params(const nlohmann::json &j) {
    if (!j.is_object() || !j.contains("alpha") || !j.contains("beta")) return std::nullopt;
    const auto &a = j["alpha"];
    const auto &b = j["beta"];
    if (!a.is_array() || !b.is_array() || a.size() != kMetricCount || b.size() != kMetricCount)
        return std::nullopt;
    RawParams p;
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        if (!a[i].is_number() || !b[i].is_number()) return std::nullopt;
        p.alpha[i] = a[i].get<double>();
        p.beta[i] = b[i].get<double>();
    }
    return p;
}

std::optional<RawParams> find_json_params(std::string_view text) {
    for (std::size_t open = text.find('{'); open != std::string_view::npos;
         open = text.find('{', open + 1)) {
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = open; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                auto j = nlohmann::json::parse(text.substr(open, i - open + 1), nullptr, false);
                if (!j.is_discarded())
                    if (auto p = json_params(j)) return p;
                break;
            }
        }
    }
    return std::nullopt;
}

}  // namespace

std::string format_metric_row(std::size_t node_id, std::span<const double> values, Notation notation) {
    std::string line = std::to_string(node_id);
    char buf[48];
    for (double x : values) {
        const auto r = notation == Notation::Scientific
                           ? std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific,
                                           kSignificandDigits)
                           : std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, 6);
        line += ',';
        line.append(buf, r.ptr);
    }
    return line;
}

ExampleFixture build_example_fixture(const Budget &brkga_budget, std::uint64_t rng_seed) {
    ExampleFixture fx;
    fx.graph = generate_erdos_renyi(ExampleFixture::kNodes, ExampleFixture::kArcProbability,
                                    ExampleFixture::kGraphSeed);
    fx.metrics = compute_metrics(fx.graph);
    BrkgaConfig config;
    config.rng_seed = rng_seed;
    config.budget = brkga_budget;
    BrkgaSolver solver(fx.graph, fx.k, fx.d, GuidanceMode::uniform(), config);
    const auto result = solver.run();
    fx.solution = result.best.seeds.nodes();
    fx.objective = result.best.objective;
    fx.brkga_seed = rng_seed;
    return fx;
}

nlohmann::json fixture_to_json(const ExampleFixture &fx) {
    nlohmann::json arcs = nlohmann::json::array();
    for (const Arc &a : fx.graph.arcs()) arcs.push_back({a.source, a.target});
    nlohmann::json raw = nlohmann::json::array(), norm = nlohmann::json::array();
    for (std::size_t v = 0; v < fx.metrics.size(); ++v) {
        raw.push_back(fx.metrics.raw_row(v));
        norm.push_back(fx.metrics.row(v));
    }
    return {
        {"format", 1},
        {"graph",
         {{"model", "erdos-renyi"},
          {"n", fx.graph.node_count()},
          {"p", ExampleFixture::kArcProbability},
          {"seed", ExampleFixture::kGraphSeed},
          {"arcs", arcs}}},
        {"k", fx.k},
        {"d", fx.d},
        {"brkga_seed", fx.brkga_seed},
        {"solution", fx.solution},
        {"objective", fx.objective},
        {"raw_metrics", raw},
        {"metrics", norm},
    };
}

ExampleFixture fixture_from_json(const nlohmann::json &j) {
    try {
        ExampleFixture fx;
        const auto &g = j.at("graph");
        const auto n = g.at("n").get<std::size_t>();
        std::vector<Arc> arcs;
        for (const auto &a : g.at("arcs")) arcs.push_back({a.at(0).get<NodeId>(), a.at(1).get<NodeId>()});
        fx.graph = DirectedGraph::from_arcs(n, arcs);
        std::vector<MetricRow> raw, norm;
        for (const auto &r : j.at("raw_metrics")) raw.push_back(r.get<MetricRow>());
        for (const auto &r : j.at("metrics")) norm.push_back(r.get<MetricRow>());
        if (norm.size() != n) throw ShapeError("fixture metrics do not cover every node");
        fx.metrics = make_metrics_table(std::move(raw), std::move(norm));
        fx.k = j.at("k").get<std::size_t>();
        fx.d = j.at("d").get<int>();
        fx.brkga_seed = j.at("brkga_seed").get<std::uint64_t>();
        fx.solution = j.at("solution").get<std::vector<NodeId>>();
        fx.objective = j.at("objective").get<std::size_t>();
        const SeedSet seeds(fx.solution, fx.k, n);
        if (objective(fx.graph, seeds, fx.d) != fx.objective)
            throw ValidationError("fixture objective does not match its solution");
        return fx;
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(std::string("malformed example fixture: ") + e.what());
    }
}

std::string serialize_fixture(const ExampleFixture &fixture) { return fixture_to_json(fixture).dump() + "\n"; }

ExampleFixture load_fixture(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open example fixture " + path.string());
    try {
        return fixture_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_fixture(const std::filesystem::path &path, const ExampleFixture &fixture) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write example fixture " + path.string());
    out << serialize_fixture(fixture);
}

std::filesystem::path default_fixture_path() {
    return std::filesystem::path(KDDSP_FIXTURE_DIR) / "example_fixture.json";
}

PromptDocument build_prompt(const ExampleFixture &example, const MetricsTable &evaluation, std::size_t k,
                            int d, const PromptOptions &options) {
    if (!options.include_rules)
        throw ConfigError("the rules-answering section cannot be omitted: it defines the answer format");
    if (evaluation.size() == 0) throw ConfigError("evaluation metrics are empty");
    if (k == 0 || d < 1) throw ConfigError("k and d must be >= 1");

    PromptDocument doc;
    doc.problem_text = problem_statement(k, d);
    doc.rules_text = rules_statement(k, d, options.include_example);
    doc.evaluation_data = data_lines(evaluation, options.notation);
    if (options.include_example) {
        doc.example_data = data_lines(example.metrics, options.notation);
        doc.example_solution = example.solution;
        doc.k_example = example.k;
    }

    std::string &out = doc.rendered;
    if (options.include_problem) {
        out += open_tag(tags::kProblem) + "\n" + doc.problem_text + "\n" + close_tag(tags::kProblem) + "\n";
    }
    if (options.include_example) {
        out += open_tag(tags::kExampleGraph) + "\n" + example_intro(example) + "\n";
        append_block(out, tags::kData, doc.example_data);
        std::string ids;
        for (std::size_t i = 0; i < doc.example_solution.size(); ++i) {
            if (i) ids += ',';
            ids += std::to_string(doc.example_solution[i]);
        }
        append_block(out, tags::kAnswer, {ids});
        out += close_tag(tags::kExampleGraph) + "\n";
    }
    out += open_tag(tags::kEvaluationGraph) + "\n" + evaluation_intro(evaluation.size()) + "\n";
    append_block(out, tags::kData, doc.evaluation_data);
    out += close_tag(tags::kEvaluationGraph) + "\n";
    out += open_tag(tags::kRules) + "\n" + doc.rules_text + close_tag(tags::kRules) + "\n";
    return doc;
}

std::vector<std::string> lint_prompt(std::string_view rendered) {
    std::vector<std::string> problems;
    std::vector<std::string> stack;
    std::map<std::string, int> top_opened;
    std::map<std::string, std::map<std::string, int>> nested;

    for (const auto &t : scan_tags(rendered)) {
        if (!t.closing) {
            if (is_top_level(t.name)) {
                if (!stack.empty()) problems.push_back("[" + t.name + "] nested inside [" + stack.back() + "]");
                if (++top_opened[t.name] > 1) problems.push_back("[" + t.name + "] opened more than once");
            } else {
                const std::string parent = stack.empty() ? "" : stack.back();
                if (t.name == tags::kData &&
                    parent != tags::kExampleGraph && parent != tags::kEvaluationGraph)
                    problems.push_back("[DATA] outside a graph section");
                if (t.name == tags::kAnswer && parent != tags::kExampleGraph)
                    problems.push_back("[ANSWER] outside [EXAMPLE GRAPH]");
                if (!parent.empty()) ++nested[parent][t.name];
            }
            stack.push_back(t.name);
        } else {
            if (stack.empty() || stack.back() != t.name) {
                problems.push_back("unbalanced [/" + t.name + "]");
                continue;
            }
            stack.pop_back();
        }
    }
    for (const auto &open : stack) problems.push_back("[" + open + "] never closed");

    if (top_opened[std::string(tags::kEvaluationGraph)] != 1)
        problems.push_back("[EVALUATION GRAPH] must appear exactly once");
    if (top_opened[std::string(tags::kRules)] != 1) problems.push_back("[RULES ANSWERING] must appear exactly once");
    if (top_opened[std::string(tags::kExampleGraph)] == 1) {
        auto &c = nested[std::string(tags::kExampleGraph)];
        if (c[std::string(tags::kData)] != 1 || c[std::string(tags::kAnswer)] != 1)
            problems.push_back("[EXAMPLE GRAPH] needs exactly one [DATA] and one [ANSWER]");
    }
    if (top_opened[std::string(tags::kEvaluationGraph)] == 1) {
        auto &c = nested[std::string(tags::kEvaluationGraph)];
        if (c[std::string(tags::kData)] != 1) problems.push_back("[EVALUATION GRAPH] needs exactly one [DATA]");
        if (c[std::string(tags::kAnswer)] != 0) problems.push_back("[EVALUATION GRAPH] must not contain [ANSWER]");
    }
    return problems;
}

std::size_t count_data_lines(std::string_view rendered, std::string_view section) {
    const auto s_open = rendered.find(open_tag(section));
    if (s_open == std::string_view::npos) return 0;
    const auto s_close = rendered.find(close_tag(section), s_open);
    const auto body = rendered.substr(s_open, s_close == std::string_view::npos ? std::string_view::npos
                                                                                : s_close - s_open);
    const auto d_open = body.find(open_tag(tags::kData));
    const auto d_close = body.find(close_tag(tags::kData));
    if (d_open == std::string_view::npos || d_close == std::string_view::npos || d_close < d_open) return 0;
    const auto first = body.find('\n', d_open);
    if (first == std::string_view::npos || first >= d_close) return 0;
    const auto inner = body.substr(first + 1, d_close - first - 1);
    return static_cast<std::size_t>(std::count(inner.begin(), inner.end(), '\n'));
}

RawParams parse_llm_answer(std::string_view text) {
    static const std::regex labeled(
        R"((alpha|beta|\xCE\xB1|\xCE\xB2)\s*[_-]?\s*\{?\s*([1-5])\s*\}?\s*\)?\s*\**\s*[:=]\s*\**\s*\$?\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?))",
        std::regex::icase);

    std::map<std::pair<bool, int>, double> found;
    const std::string owned(text);
    for (auto it = std::sregex_iterator(owned.begin(), owned.end(), labeled); it != std::sregex_iterator();
         ++it) {
        std::string name = (*it)[1].str();
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        const bool is_alpha = name == "alpha" || name == "\xCE\xB1";
        const int index = std::stoi((*it)[2].str());
        const auto value = to_double((*it)[3].str());
        if (!value) continue;
        const auto key = std::make_pair(is_alpha, index);
        const auto [pos, inserted] = found.emplace(key, *value);
        if (!inserted && pos->second != *value)
            throw AmbiguityError(std::string(is_alpha ? "alpha_" : "beta_") + std::to_string(index) +
                                     " is given conflicting values",
                                 owned);
    }
    if (found.size() == 2 * kMetricCount) {
        RawParams p;
        for (int i = 1; i <= 5; ++i) {
            p.alpha[i - 1] = found.at({true, i});
            p.beta[i - 1] = found.at({false, i});
        }
        return p;
    }
    if (auto p = find_json_params(text)) return *p;
    throw AnswerParseError("found " + std::to_string(found.size()) +
                               " of 10 labeled alpha/beta values and no JSON parameter object",
                           owned);
}

std::string render_labeled_answer(const MetricWeights &alpha, const MetricWeights &beta) {
    std::string out;
    char buf[32];
    auto line = [&](const char *name, std::size_t i, double x) {
        const auto r = std::to_chars(buf, buf + sizeof buf, x);
        out += name + std::to_string(i + 1) + " = " + std::string(buf, r.ptr) + "\n";
    };
    for (std::size_t i = 0; i < kMetricCount; ++i) line("alpha_", i, alpha[i]);
    for (std::size_t i = 0; i < kMetricCount; ++i) line("beta_", i, beta[i]);
    return out;
}

}  // namespace kddsp
