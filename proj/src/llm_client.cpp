#include "glarify/llm_client.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <thread>

#include <httplib.h>

#include "glarify/error.hpp"
#include "glarify/io_util.hpp"
#include "glarify/text_util.hpp"

namespace glarify {

void ChatRequest::validate() const {
    if (text::normalize_whitespace(system_prompt).empty()) throw UsageError("empty system prompt");
    if (text::normalize_whitespace(user_text).empty()) throw UsageError("empty user content");
    if (!std::isfinite(temperature) || temperature < 0.0 || temperature > 2.0)
        throw UsageError("temperature must lie in [0, 2]");
    if (max_output_tokens <= 0) throw UsageError("max_output_tokens must be positive");
}

std::string canonical_request_text(const ChatRequest& req) {
    char temp[32];
    std::snprintf(temp, sizeof temp, "%.3f", req.temperature);
    std::string out(kTranscriptSchema);
    out += "\nmodel=" + req.model_name;
    out += "\ntemperature=" + std::string(temp);
    out += "\nmax_output_tokens=" + std::to_string(req.max_output_tokens);
    out += "\nsystem=" + text::normalize_whitespace(req.system_prompt);
    out += "\nuser=" + text::normalize_whitespace(req.user_text);
    for (const auto& ref : req.image_refs) out += "\nimage=" + ref;
    return out;
}

std::string request_hash(const ChatRequest& req) { return sha256_hex(canonical_request_text(req)); }

// ---------------------------------------------------------------------------

ReplayClient ReplayClient::from_stream(std::istream& in) {
    ReplayClient client;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            const auto schema = j.at("schema").get<std::string>();
            if (schema != kTranscriptSchema)
                throw DataError("transcript schema mismatch: expected " + std::string(kTranscriptSchema) +
                                ", found " + schema);
            client.add(j.at("request_hash").get<std::string>(), j.at("response_text").get<std::string>());
        } catch (const json::exception& e) {
            throw DataError("transcript line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return client;
}

ReplayClient ReplayClient::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open transcript " + path.string());
    return from_stream(in);
}

void ReplayClient::add(std::string hash, std::string response_text) {
    responses_.insert_or_assign(std::move(hash), std::move(response_text));
}

ChatResponse ReplayClient::complete(const ChatRequest& req) {
    req.validate();
    auto it = responses_.find(request_hash(req));
    if (it == responses_.end()) throw ServiceError("no recorded response");
    return ChatResponse{it->second, {}, 0.0};
}

ChatResponse RecordingClient::complete(const ChatRequest& req) {
    auto resp = inner_.complete(req);
    std::lock_guard lock(mu_);
    recorded_.insert_or_assign(request_hash(req), resp.text);
    return resp;
}

std::string RecordingClient::transcript() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto& [hash, text] : recorded_) {
        out += canonical_dump(json{{"schema", kTranscriptSchema}, {"request_hash", hash}, {"response_text", text}});
        out.push_back('\n');
    }
    return out;
}

BoundedClient::BoundedClient(LlmClient& inner, std::ptrdiff_t max_in_flight)
    : inner_(inner), slots_(std::clamp<std::ptrdiff_t>(max_in_flight, 1, kMaxInFlight)) {}

ChatResponse BoundedClient::complete(const ChatRequest& req) {
    slots_.acquire();
    struct Release {
        std::counting_semaphore<kMaxInFlight>& s;
        ~Release() { s.release(); }
    } release{slots_};
    return inner_.complete(req);
}

// ---------------------------------------------------------------------------

HttpClientConfig HttpClientConfig::from_env() {
    HttpClientConfig cfg;
    const char* endpoint = std::getenv("GLARIFY_LLM_ENDPOINT");
    if (endpoint == nullptr || *endpoint == '\0') throw UsageError("GLARIFY_LLM_ENDPOINT is not set");
    cfg.endpoint = endpoint;
    if (const char* key = std::getenv("GLARIFY_LLM_KEY")) cfg.api_key = key;
    if (const char* model = std::getenv("GLARIFY_LLM_MODEL")) cfg.model = model;
    return cfg;
}

HttpChatClient::HttpChatClient(HttpClientConfig cfg) : cfg_(std::move(cfg)) {
    const auto scheme_end = cfg_.endpoint.find("://");
    if (scheme_end == std::string::npos) throw UsageError("endpoint must be a URL: " + cfg_.endpoint);
    const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
    scheme_host_port_ = cfg_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);
}

nlohmann::json HttpChatClient::build_body(const ChatRequest& req) const {
    json user_parts = json::array();
    user_parts.push_back({{"type", "text"}, {"text", req.user_text}});
    for (const auto& ref : req.image_refs)
        user_parts.push_back({{"type", "image_url"}, {"image_url", {{"url", ref}}}});
    return json{{"model", cfg_.model.empty() ? req.model_name : cfg_.model},
                {"temperature", req.temperature},
                {"max_tokens", req.max_output_tokens},
                {"messages",
                 json::array({json{{"role", "system"}, {"content", req.system_prompt}},
                              json{{"role", "user"}, {"content", std::move(user_parts)}}})}};
}

ChatResponse HttpChatClient::complete(const ChatRequest& req) {
    req.validate();
    const std::string body = build_body(req).dump();
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + cfg_.api_key);
        headers.emplace("api-key", cfg_.api_key);
    }

    int last_status = 0;
    std::string last_error;
    auto backoff = cfg_.initial_backoff;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client cli(scheme_host_port_);
        cli.set_connection_timeout(cfg_.timeout);
        cli.set_read_timeout(cfg_.timeout);
        const auto start = std::chrono::steady_clock::now();
        auto res = cli.Post(path_, headers, body, "application/json");
        if (!res) {
            last_status = 0;
            last_error = httplib::to_string(res.error());
            continue;
        }
        last_status = res->status;
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw ServiceError("chat endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body,
                               res->status);
        ChatResponse out;
        out.latency_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        try {
            const auto j = json::parse(res->body);
            out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
            if (j.contains("usage")) {
                out.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
                out.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
            }
        } catch (const json::exception& e) {
            throw ServiceError(std::string("malformed chat response: ") + e.what(), res->status);
        }
        return out;
    }
    throw ServiceError("chat endpoint failed after " + std::to_string(cfg_.max_retries) +
                           " retries: " + last_error,
                       last_status);
}

}  // namespace glarify
