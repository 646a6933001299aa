#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kddsp/error.hpp"
#include "kddsp/prompting.hpp"

namespace kddsp {

enum class Provider { OpenRouterCompatible, AnthropicCompatible, Mock };

std::string to_string(Provider p);
Provider parse_provider(std::string_view s);

struct ModelConfig {
    Provider provider = Provider::Mock;
    std::string model_name = "mock";
    double temperature = 0.0;
    int max_output_tokens = 1000;
    std::size_t context_window = 200000;
    double window_margin = 0.95;  ///< fraction of the window usable by prompt + answer
    std::string api_key_env;      ///< empty: provider default (OPENROUTER_API_KEY / ANTHROPIC_API_KEY)
    std::string base_url;         ///< empty: provider default
    double timeout_seconds = 300.0;
    int retries = 3;
    std::chrono::milliseconds initial_backoff{1000};
    std::string mock_response;  ///< returned verbatim by the mock provider

    /// Throws ConfigError on invalid values.
    void validate() const;
    std::string effective_base_url() const;
    std::string effective_api_key_env() const;
};

/// Preset for the models compared in the experiments (window sizes as published).
std::optional<ModelConfig> model_preset(std::string_view name);

/// ceil(bytes / 4). A heuristic, not a provider tokenizer.
std::size_t estimate_tokens(std::string_view text) noexcept;

/// Hex SHA-256 of the prompt text; the replay key.
std::string prompt_hash(std::string_view prompt);

struct LlmExchange {
    std::string prompt_hash;
    std::string prompt_text;
    std::string response_text;
    std::size_t input_token_estimate = 0;
    std::size_t output_token_estimate = 0;
    std::string provider;
    std::string model;
    double latency_seconds = 0.0;
    int http_status = 0;
    std::string timestamp;  ///< ISO-8601 UTC

    friend bool operator==(const LlmExchange &, const LlmExchange &) = default;
};

nlohmann::json to_json(const LlmExchange &e);
LlmExchange exchange_from_json(const nlohmann::json &j);

/// Append-only JSON-lines exchange log with a single writer per process.
class ExchangeLog {
public:
    explicit ExchangeLog(std::filesystem::path path);
    void append(const LlmExchange &exchange);
    const std::filesystem::path &path() const noexcept { return path_; }
    /// Throws ParseError on a corrupt line; a missing file yields an empty list.
    static std::vector<LlmExchange> read(const std::filesystem::path &path);

private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

struct HttpRequest {
    std::string url;  ///< absolute, e.g. https://openrouter.ai/api/v1/chat/completions
    std::map<std::string, std::string> headers;
    std::string body;
    double timeout_seconds = 300.0;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Blocking POST of a JSON body. Implementations throw TransportError on connection failure.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const HttpRequest &request) = 0;
};

/// cpp-httplib backed transport with TLS.
std::shared_ptr<HttpTransport> make_default_transport();

class TransportError : public Error {
public:
    TransportError(const std::string &what, int status = 0) : Error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

class CredentialError : public Error {
public:
    using Error::Error;
};

/// The prompt plus the answer budget does not fit the model's context window.
class ContextWindowError : public Error {
public:
    ContextWindowError(std::size_t estimate, std::size_t limit)
        : Error("prompt needs ~" + std::to_string(estimate) + " tokens, usable window is " +
                std::to_string(limit)),
          estimate_(estimate), limit_(limit) {}
    std::size_t estimate() const noexcept { return estimate_; }
    std::size_t limit() const noexcept { return limit_; }

private:
    std::size_t estimate_;
    std::size_t limit_;
};

class ReplayMissError : public Error {
public:
    using Error::Error;
};

/// Request body for the configured wire dialect (OpenAI-style chat or Anthropic messages).
nlohmann::json build_request_body(const ModelConfig &config, std::string_view prompt);
/// Assistant text from a provider response body. Throws TransportError when absent.
std::string extract_response_text(Provider provider, const nlohmann::json &body);

/**
 * Sends prompts to a chat-completion provider under a fixed decoding
 * contract (temperature, max output tokens), with a pre-flight context
 * window check and exponential backoff on 429/5xx.
 */
class LlmGateway {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;
    using EnvLookup = std::function<std::optional<std::string>(const std::string &)>;

    explicit LlmGateway(ModelConfig config, std::shared_ptr<HttpTransport> transport = nullptr,
                        ExchangeLog *log = nullptr);

    void set_sleeper(Sleeper sleeper) { sleep_ = std::move(sleeper); }
    void set_env_lookup(EnvLookup lookup) { env_ = std::move(lookup); }

    /// Throws ContextWindowError before any network activity when the prompt does not fit,
    /// CredentialError for a missing key or 401/403, TransportError once retries are exhausted.
    std::string execute(const PromptDocument &prompt);
    std::string execute(std::string_view prompt_text);

    const std::vector<LlmExchange> &exchanges() const noexcept { return exchanges_; }
    std::size_t http_attempts() const noexcept { return attempts_; }
    const ModelConfig &config() const noexcept { return config_; }

private:
    ModelConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    ExchangeLog *log_;
    Sleeper sleep_;
    EnvLookup env_;
    std::vector<LlmExchange> exchanges_;
    std::size_t attempts_ = 0;
};

/// Recorded response for this exact prompt. Throws ReplayMissError when none matches.
std::string replay(const std::filesystem::path &exchange_log, const PromptDocument &prompt);
std::string replay(const std::filesystem::path &exchange_log, std::string_view prompt_text);
/// The full recorded exchange, latest match first.
LlmExchange replay_exchange(const std::filesystem::path &exchange_log, std::string_view prompt_text);

}  // namespace kddsp
