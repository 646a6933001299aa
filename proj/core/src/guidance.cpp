#include "kddsp/guidance.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "kddsp/error.hpp"

namespace kddsp {

std::string to_string(ParamsSource s) {
    switch (s) {
        case ParamsSource::Llm: return "llm";
        case ParamsSource::Tuner: return "tuner";
        case ParamsSource::Random: return "random";
        case ParamsSource::File: return "file";
    }
    return "file";
}

ParamsSource parse_params_source(const std::string &s) {
    if (s == "llm") return ParamsSource::Llm;
    if (s == "tuner") return ParamsSource::Tuner;
    if (s == "random") return ParamsSource::Random;
    if (s == "file") return ParamsSource::File;
    throw ParseError("unknown parameter source '" + s + "'");
}

GuidanceParams GuidanceParams::with_source(ParamsSource s, std::optional<std::string> model) const {
    GuidanceParams copy = *this;
    copy.source_ = s;
    copy.model_ = std::move(model);
    return copy;
}

GuidanceParams validate_params(const MetricWeights &raw_alpha, const MetricWeights &raw_beta,
                               ParamsSource source) {
    double sum = 0.0;
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        if (!(raw_alpha[i] > 0.0 && raw_alpha[i] < 1.0))
            throw RangeError("alpha_" + std::to_string(i + 1), raw_alpha[i]);
        sum += raw_alpha[i];
    }
    for (std::size_t i = 0; i < kMetricCount; ++i)
        if (!(raw_beta[i] > 0.0 && raw_beta[i] < 1.0))
            throw RangeError("beta_" + std::to_string(i + 1), raw_beta[i]);
    // Small slack so that e.g. five values of 0.21 (sum 1.05) are still accepted.
    if (std::abs(sum - 1.0) > kAlphaSumTolerance + 1e-12) throw SumError(sum);

    GuidanceParams p;
    for (std::size_t i = 0; i < kMetricCount; ++i) p.alpha_[i] = raw_alpha[i] / sum;
    p.beta_ = raw_beta;
    p.source_ = source;
    return p;
}

GuidanceParams random_params(Rng &rng) {
    MetricWeights alpha{}, beta{};
    double sum = 0.0;
    for (double &a : alpha) {
        a = uniform_open01(rng);
        sum += a;
    }
    for (double &a : alpha) a /= sum;
    for (double &b : beta) b = uniform_open01(rng);
    return validate_params(alpha, beta, ParamsSource::Random);
}

double node_probability(const MetricRow &metrics, const GuidanceParams &params) {
    double s = 0.0;
    for (std::size_t i = 0; i < kMetricCount; ++i)
        s += params.alpha()[i] * (1.0 - (params.beta()[i] - metrics[i]));
    return sigmoid(s);
}

ProbabilityVector::ProbabilityVector(std::vector<double> values, Fingerprint fingerprint)
    : values_(std::move(values)), fingerprint_(fingerprint) {
    if (fingerprint_.node_count != values_.size())
        throw ShapeError("fingerprint node count does not match the vector length");
}

bool ProbabilityVector::matches(const MetricsTable &table) const noexcept {
    if (fingerprint_.node_count != table.size()) return false;
    return !fingerprint_.metrics_checksum || *fingerprint_.metrics_checksum == table.checksum();
}

ProbabilityVector probabilities_for_graph(const MetricsTable &metrics, const GuidanceParams &params) {
    if (metrics.size() == 0) throw ShapeError("metrics table is empty");
    std::vector<double> values(metrics.size());
    for (std::size_t v = 0; v < values.size(); ++v) values[v] = node_probability(metrics.row(v), params);
    return ProbabilityVector(std::move(values), {metrics.size(), metrics.checksum()});
}

ProbabilityVector uniform_guidance(std::size_t n) {
    if (n == 0) throw ConfigError("uniform guidance needs n >= 1");
    return ProbabilityVector(std::vector<double>(n, 1.0), {n, std::nullopt});
}

ProbabilityVector read_probability_csv(std::istream &in, std::size_t node_count) {
    std::vector<double> values(node_count, 0.0);
    std::vector<bool> seen(node_count, false);
    std::string line;
    std::size_t line_no = 0, rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line_no == 1 && line.rfind("node_id", 0) == 0) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError("expected node_id,probability", line_no);
        std::size_t id = 0;
        double p = 0.0;
        const char *b = line.data();
        const auto r1 = std::from_chars(b, b + comma, id);
        const auto r2 = std::from_chars(b + comma + 1, b + line.size(), p);
        if (r1.ec != std::errc{} || r1.ptr != b + comma || r2.ec != std::errc{} ||
            r2.ptr != b + line.size())
            throw ParseError("malformed probability row", line_no);
        if (id >= node_count) throw ShapeError("node id " + std::to_string(id) + " out of range");
        if (seen[id]) throw ParseError("node " + std::to_string(id) + " listed twice", line_no);
        if (!std::isfinite(p) || p <= 0.0) throw NumericError("probability must be finite and positive");
        seen[id] = true;
        values[id] = p;
        ++rows;
    }
    if (rows != node_count)
        throw ShapeError("probability file covers " + std::to_string(rows) + " of " +
                         std::to_string(node_count) + " nodes");
    return ProbabilityVector(std::move(values), {node_count, std::nullopt});
}

void write_probability_csv(std::ostream &out, const ProbabilityVector &p) {
    out << "node_id,probability\n";
    char buf[32];
    for (std::size_t v = 0; v < p.size(); ++v) {
        const auto r = std::to_chars(buf, buf + sizeof buf, p[v]);
        out << v << ',' << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf)) << '\n';
    }
}

nlohmann::json to_json(const GuidanceParams &params) {
    nlohmann::json j;
    j["alpha"] = params.alpha();
    j["beta"] = params.beta();
    j["source"] = to_string(params.source());
    if (params.model()) j["model"] = *params.model();
    return j;
}

GuidanceParams params_from_json(const nlohmann::json &j) {
    if (!j.is_object() || !j.contains("alpha") || !j.contains("beta"))
        throw ParseError("parameter JSON needs \"alpha\" and \"beta\" arrays");
    const auto &a = j.at("alpha");
    const auto &b = j.at("beta");
    if (!a.is_array() || !b.is_array() || a.size() != kMetricCount || b.size() != kMetricCount)
        throw ParseError("\"alpha\" and \"beta\" must each hold 5 numbers");
    MetricWeights alpha{}, beta{};
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        if (!a[i].is_number() || !b[i].is_number()) throw ParseError("non-numeric parameter value");
        alpha[i] = a[i].get<double>();
        beta[i] = b[i].get<double>();
    }
    const auto source = j.contains("source") ? parse_params_source(j.at("source").get<std::string>())
                                             : ParamsSource::File;
    auto params = validate_params(alpha, beta, source);
    if (j.contains("model") && j.at("model").is_string())
        params = params.with_source(source, j.at("model").get<std::string>());
    return params;
}

GuidanceParams load_params_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open parameter file " + path.string());
    try {
        return params_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_params_file(const std::filesystem::path &path, const GuidanceParams &params) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write parameter file " + path.string());
    out << to_json(params).dump(2) << '\n';
}

}  // namespace kddsp
