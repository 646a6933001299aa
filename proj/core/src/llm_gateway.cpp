#include "kddsp/llm_gateway.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

namespace kddsp {

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool transient(int status) { return status == 429 || (status >= 500 && status <= 599); }

std::string trim_trailing_slash(std::string s) {
    while (!s.empty() && s.back() == '/') s.pop_back();
    return s;
}

}  // namespace

std::string to_string(Provider p) {
    switch (p) {
        case Provider::OpenRouterCompatible: return "openrouter";
        case Provider::AnthropicCompatible: return "anthropic";
        case Provider::Mock: return "mock";
    }
    return "mock";
}

Provider parse_provider(std::string_view s) {
    if (s == "openrouter" || s == "openai") return Provider::OpenRouterCompatible;
    if (s == "anthropic") return Provider::AnthropicCompatible;
    if (s == "mock") return Provider::Mock;
    throw ConfigError("unknown provider '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
    if (context_window == 0) throw ConfigError("context window must be positive");
    if (retries < 0) throw ConfigError("retries must be >= 0");
    if (max_output_tokens <= 0) throw ConfigError("max output tokens must be positive");
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw ConfigError("temperature must lie in [0,2]");
    if (!(window_margin > 0.0 && window_margin <= 1.0)) throw ConfigError("window margin must lie in (0,1]");
    if (model_name.empty()) throw ConfigError("model name is empty");
}

std::string ModelConfig::effective_base_url() const {
    if (!base_url.empty()) return trim_trailing_slash(base_url);
    switch (provider) {
        case Provider::OpenRouterCompatible: return "https://openrouter.ai/api/v1";
        case Provider::AnthropicCompatible: return "https://api.anthropic.com";
        case Provider::Mock: return "";
    }
    return "";
}

std::string ModelConfig::effective_api_key_env() const {
    if (!api_key_env.empty()) return api_key_env;
    switch (provider) {
        case Provider::OpenRouterCompatible: return "OPENROUTER_API_KEY";
        case Provider::AnthropicCompatible: return "ANTHROPIC_API_KEY";
        case Provider::Mock: return "";
    }
    return "";
}

std::optional<ModelConfig> model_preset(std::string_view name) {
    ModelConfig c;
    if (name == "gpt-4o") {
        c.provider = Provider::OpenRouterCompatible;
        c.model_name = "openai/gpt-4o";
        c.context_window = 128000;
    } else if (name == "claude-3-opus") {
        c.provider = Provider::AnthropicCompatible;
        c.model_name = "claude-3-opus-20240229";
        c.context_window = 200000;
    } else if (name == "command-r-plus") {
        c.provider = Provider::OpenRouterCompatible;
        c.model_name = "cohere/command-r-plus";
        c.context_window = 128000;
    } else if (name == "mixtral-8x22b") {
        c.provider = Provider::OpenRouterCompatible;
        c.model_name = "mistralai/mixtral-8x22b-instruct";
        c.context_window = 32768;
    } else {
        return std::nullopt;
    }
    return c;
}

std::size_t estimate_tokens(std::string_view text) noexcept { return (text.size() + 3) / 4; }

std::string prompt_hash(std::string_view prompt) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(prompt.data(), prompt.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

nlohmann::json to_json(const LlmExchange &e) {
    return {{"prompt_hash", e.prompt_hash},
            {"prompt_text", e.prompt_text},
            {"response_text", e.response_text},
            {"input_token_estimate", e.input_token_estimate},
            {"output_token_estimate", e.output_token_estimate},
            {"provider", e.provider},
            {"model", e.model},
            {"latency_seconds", e.latency_seconds},
            {"http_status", e.http_status},
            {"timestamp", e.timestamp}};
}

LlmExchange exchange_from_json(const nlohmann::json &j) {
    try {
        LlmExchange e;
        e.prompt_hash = j.at("prompt_hash").get<std::string>();
        e.prompt_text = j.value("prompt_text", "");
        e.response_text = j.at("response_text").get<std::string>();
        e.input_token_estimate = j.value("input_token_estimate", std::size_t{0});
        e.output_token_estimate = j.value("output_token_estimate", std::size_t{0});
        e.provider = j.value("provider", "");
        e.model = j.value("model", "");
        e.latency_seconds = j.value("latency_seconds", 0.0);
        e.http_status = j.value("http_status", 0);
        e.timestamp = j.value("timestamp", "");
        return e;
    } catch (const nlohmann::json::exception &ex) {
        throw ParseError(std::string("malformed exchange record: ") + ex.what());
    }
}

ExchangeLog::ExchangeLog(std::filesystem::path path) : path_(std::move(path)) {}

void ExchangeLog::append(const LlmExchange &exchange) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw InputError("cannot append to exchange log " + path_.string());
    out << to_json(exchange).dump() << '\n';
}

std::vector<LlmExchange> ExchangeLog::read(const std::filesystem::path &path) {
    std::vector<LlmExchange> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError("invalid JSON in exchange log", line_no);
        out.push_back(exchange_from_json(j));
    }
    return out;
}

nlohmann::json build_request_body(const ModelConfig &config, std::string_view prompt) {
    nlohmann::json messages = nlohmann::json::array();
    messages.push_back({{"role", "user"}, {"content", std::string(prompt)}});
    return {{"model", config.model_name},
            {"messages", messages},
            {"temperature", config.temperature},
            {"max_tokens", config.max_output_tokens}};
}

std::string extract_response_text(Provider provider, const nlohmann::json &body) {
    try {
        if (provider == Provider::AnthropicCompatible) {
            std::string text;
            for (const auto &block : body.at("content"))
                if (block.value("type", "") == "text") text += block.at("text").get<std::string>();
            return text;
        }
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception &e) {
        throw TransportError(std::string("unexpected response shape: ") + e.what());
    }
}

LlmGateway::LlmGateway(ModelConfig config, std::shared_ptr<HttpTransport> transport, ExchangeLog *log)
    : config_(std::move(config)), transport_(std::move(transport)), log_(log),
      sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      env_([](const std::string &name) -> std::optional<std::string> {
          const char *v = std::getenv(name.c_str());
          if (!v || !*v) return std::nullopt;
          return std::string(v);
      }) {
    config_.validate();
}

std::string LlmGateway::execute(const PromptDocument &prompt) { return execute(prompt.rendered); }

std::string LlmGateway::execute(std::string_view prompt_text) {
    const std::size_t estimate = estimate_tokens(prompt_text);
    const auto usable =
        static_cast<std::size_t>(std::floor(static_cast<double>(config_.context_window) * config_.window_margin));
    const auto needed = estimate + static_cast<std::size_t>(config_.max_output_tokens);
    if (needed > usable) throw ContextWindowError(needed, usable);

    LlmExchange ex;
    ex.prompt_hash = prompt_hash(prompt_text);
    ex.prompt_text = std::string(prompt_text);
    ex.input_token_estimate = estimate;
    ex.provider = to_string(config_.provider);
    ex.model = config_.model_name;
    ex.timestamp = utc_timestamp();
    const auto start = std::chrono::steady_clock::now();

    if (config_.provider == Provider::Mock) {
        ex.response_text = config_.mock_response;
        ex.http_status = 200;
    } else {
        const auto key_env = config_.effective_api_key_env();
        const auto key = env_(key_env);
        if (!key) throw CredentialError("environment variable " + key_env + " is not set");
        if (!transport_) transport_ = make_default_transport();

        HttpRequest req;
        req.timeout_seconds = config_.timeout_seconds;
        req.headers["content-type"] = "application/json";
        if (config_.provider == Provider::AnthropicCompatible) {
            req.url = config_.effective_base_url() + "/v1/messages";
            req.headers["x-api-key"] = *key;
            req.headers["anthropic-version"] = "2023-06-01";
        } else {
            req.url = config_.effective_base_url() + "/chat/completions";
            req.headers["authorization"] = "Bearer " + *key;
        }
        req.body = build_request_body(config_, prompt_text).dump();

        auto delay = config_.initial_backoff;
        for (int attempt = 0;; ++attempt) {
            ++attempts_;
            HttpResponse res;
            bool failed = false;
            std::string failure;
            try {
                res = transport_->post(req);
            } catch (const TransportError &e) {
                failed = true;
                failure = e.what();
            }
            if (!failed && (res.status == 401 || res.status == 403))
                throw CredentialError("provider rejected credentials (HTTP " + std::to_string(res.status) + ")");
            if (!failed && res.status >= 200 && res.status < 300) {
                auto body = nlohmann::json::parse(res.body, nullptr, false);
                if (body.is_discarded()) throw TransportError("response is not JSON", res.status);
                ex.response_text = extract_response_text(config_.provider, body);
                ex.http_status = res.status;
                break;
            }
            if (!failed && !transient(res.status))
                throw TransportError("HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 500),
                                     res.status);
            if (attempt >= config_.retries)
                throw TransportError("giving up after " + std::to_string(attempt + 1) + " attempts: " +
                                         (failed ? failure : "HTTP " + std::to_string(res.status)),
                                     failed ? 0 : res.status);
            sleep_(delay);
            delay *= 2;
        }
    }

    ex.latency_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ex.output_token_estimate = estimate_tokens(ex.response_text);
    exchanges_.push_back(ex);
    if (log_) log_->append(ex);
    return ex.response_text;
}

std::string replay(const std::filesystem::path &exchange_log, const PromptDocument &prompt) {
    return replay(exchange_log, prompt.rendered);
}

std::string replay(const std::filesystem::path &exchange_log, std::string_view prompt_text) {
    return replay_exchange(exchange_log, prompt_text).response_text;
}

LlmExchange replay_exchange(const std::filesystem::path &exchange_log, std::string_view prompt_text) {
    const auto hash = prompt_hash(prompt_text);
    const auto records = ExchangeLog::read(exchange_log);
    // Latest matching record wins.
    for (auto it = records.rbegin(); it != records.rend(); ++it)
        if (it->prompt_hash == hash) return *it;
    throw ReplayMissError("no recorded exchange for prompt " + hash.substr(0, 12) + " in " +
                          exchange_log.string());
}

}  // namespace kddsp
