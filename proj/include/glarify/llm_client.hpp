#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace glarify {

inline constexpr std::string_view kTranscriptSchema = "glarify-llm/1";

struct ChatRequest {
    std::string system_prompt;
    std::string user_text;
    std::vector<std::string> image_refs;  // opaque attachments, in keyframe order
    double temperature = 0.7;
    int max_output_tokens = 1024;
    std::string model_name = "gpt-4o";

    /// Throws UsageError on empty prompts, non-finite or out-of-range
    /// temperature, or a non-positive token budget.
    void validate() const;
};

struct ChatUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    ChatUsage usage;
    double latency_ms = 0.0;
};

/// Chat-completion backend. Implementations must be safe to call from
/// several threads at once.
class LlmClient {
  public:
    virtual ~LlmClient() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
};

/// Whitespace-normalised text the replay hash is computed over.
std::string canonical_request_text(const ChatRequest& req);
/// Hex SHA-256 of canonical_request_text.
std::string request_hash(const ChatRequest& req);

/// Answers from a recorded transcript; misses are errors.
class ReplayClient final : public LlmClient {
  public:
    ReplayClient() = default;
    static ReplayClient from_stream(std::istream& in);
    static ReplayClient from_file(const std::filesystem::path& path);

    void add(std::string request_hash, std::string response_text);
    [[nodiscard]] std::size_t size() const { return responses_.size(); }

    ChatResponse complete(const ChatRequest& req) override;

  private:
    std::map<std::string, std::string, std::less<>> responses_;
};

/// Forwards to another client and remembers every answer, for building
/// transcripts that ReplayClient can later serve.
class RecordingClient final : public LlmClient {
  public:
    explicit RecordingClient(LlmClient& inner) : inner_(inner) {}

    ChatResponse complete(const ChatRequest& req) override;

    /// "glarify-llm/1" lines sorted by request hash.
    [[nodiscard]] std::string transcript() const;

  private:
    LlmClient& inner_;
    mutable std::mutex mu_;
    std::map<std::string, std::string> recorded_;
};

/// Calls a user function; handy for scripted fakes in tests and tools.
class CallbackClient final : public LlmClient {
  public:
    using Handler = std::function<std::string(const ChatRequest&)>;
    explicit CallbackClient(Handler handler) : handler_(std::move(handler)) {}

    ChatResponse complete(const ChatRequest& req) override { return ChatResponse{handler_(req), {}, 0.0}; }

  private:
    Handler handler_;
};

/// Caps the number of concurrent calls into the wrapped client.
class BoundedClient final : public LlmClient {
  public:
    static constexpr std::ptrdiff_t kMaxInFlight = 64;
    BoundedClient(LlmClient& inner, std::ptrdiff_t max_in_flight = 4);

    ChatResponse complete(const ChatRequest& req) override;

  private:
    LlmClient& inner_;
    std::counting_semaphore<kMaxInFlight> slots_;
};

struct HttpClientConfig {
    std::string endpoint;  // full URL of an OpenAI-style chat/completions route
    std::string api_key;
    std::string model;     // overrides ChatRequest::model_name when non-empty
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{250};
    std::chrono::seconds timeout{120};

    /// Reads GLARIFY_LLM_ENDPOINT, GLARIFY_LLM_KEY and GLARIFY_LLM_MODEL.
    /// Throws UsageError when no endpoint is set.
    static HttpClientConfig from_env();
};

/// Live client speaking the chat/completions JSON protocol over HTTP(S).
/// Connection failures, 429 and 5xx are retried with exponential backoff.
class HttpChatClient final : public LlmClient {
  public:
    explicit HttpChatClient(HttpClientConfig cfg);

    ChatResponse complete(const ChatRequest& req) override;

    [[nodiscard]] nlohmann::json build_body(const ChatRequest& req) const;

  private:
    HttpClientConfig cfg_;
    std::string scheme_host_port_;
    std::string path_;
};

/// Parses the first ```json fenced block of `text`, or the whole text when
/// it is valid JSON on its own. Throws DataError("no structured block") or
/// a DataError naming the byte offset of a parse failure inside the fence.
nlohmann::json extract_json_block(std::string_view text);

}  // namespace glarify
