#pragma once

#include <chrono>
#include <cstddef>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lawreason/detail/sha256.hpp"

// Chat-completion gateway: a uniform backend interface with the default
// decoding parameters used throughout, plus deterministic scripted and
// record/replay backends so every pipeline is testable offline. Remote
// credentials are read from a named environment variable, never from
// configuration files.

namespace lawreason::llm {

using nlohmann::json;

// ============================================================================
// Requests
// ============================================================================

enum class Role { System, User, Assistant };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "?";
}

inline std::optional<Role> role_from_name(std::string_view s) {
    if (s == "system") return Role::System;
    if (s == "user") return Role::User;
    if (s == "assistant") return Role::Assistant;
    return std::nullopt;
}

struct Message {
    Role role = Role::User;
    std::string content;

    bool operator==(const Message&) const = default;
};

struct DecodingParams {
    double temperature = 0.6;
    std::size_t max_tokens = 8096;
    double top_p = 1.0;
    double frequency_penalty = 0.0;
    double presence_penalty = 0.0;
    std::size_t n = 1;

    bool operator==(const DecodingParams&) const = default;
};

struct ChatRequest {
    std::vector<Message> messages;
    DecodingParams params;

    bool operator==(const ChatRequest&) const = default;

    /// A request must carry at least one message and no empty contents.
    void validate() const {
        if (messages.empty()) throw std::invalid_argument("chat request has no messages");
        for (const auto& m : messages)
            if (m.content.empty())
                throw std::invalid_argument("chat request has an empty message content");
    }
};

inline json params_to_json(const DecodingParams& p) {
    return json{{"temperature", p.temperature},
                {"max_tokens", p.max_tokens},
                {"top_p", p.top_p},
                {"frequency_penalty", p.frequency_penalty},
                {"presence_penalty", p.presence_penalty},
                {"n", p.n}};
}

inline json messages_to_json(const std::vector<Message>& messages) {
    json arr = json::array();
    for (const auto& m : messages)
        arr.push_back(json{{"role", role_name(m.role)}, {"content", m.content}});
    return arr;
}

/// Stable digest of (model, messages, params): the replay-cache key. Object
/// keys are sorted by the serializer, so the serialization is canonical.
inline std::string cache_key(const std::string& model, const std::vector<Message>& messages,
                             const DecodingParams& params) {
    const json j{{"model", model},
                 {"messages", messages_to_json(messages)},
                 {"params", params_to_json(params)}};
    return detail::sha256_hex(j.dump());
}

// ============================================================================
// Errors
// ============================================================================

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NetworkError : public BackendError {
public:
    using BackendError::BackendError;
};

class QueueExhausted : public BackendError {
public:
    using BackendError::BackendError;
};

class CacheMiss : public BackendError {
public:
    using BackendError::BackendError;
};

// ============================================================================
// Backend interface
// ============================================================================

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string model_id() const = 0;

    std::string complete(const ChatRequest& request) {
        request.validate();
        return do_complete(request);
    }

private:
    virtual std::string do_complete(const ChatRequest& request) = 0;
};

// ============================================================================
// Scripted backend
// ============================================================================

/// Pops one canned response per call, in order. Deterministic and offline;
/// meant for a single scripted episode at a time (concurrent calls are safe
/// but interleave the queue).
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(std::vector<std::string> responses,
                             std::string model = "scripted")
        : model_(std::move(model)), queue_(responses.begin(), responses.end()) {}

    std::string model_id() const override { return model_; }

    std::size_t calls() const {
        std::lock_guard<std::mutex> lock(mu_);
        return requests_.size();
    }
    std::size_t remaining() const {
        std::lock_guard<std::mutex> lock(mu_);
        return queue_.size();
    }
    std::vector<ChatRequest> requests() const {
        std::lock_guard<std::mutex> lock(mu_);
        return requests_;
    }

private:
    std::string do_complete(const ChatRequest& request) override {
        std::lock_guard<std::mutex> lock(mu_);
        if (queue_.empty())
            throw QueueExhausted("scripted backend exhausted after " +
                                 std::to_string(requests_.size()) + " calls");
        requests_.push_back(request);
        std::string response = std::move(queue_.front());
        queue_.pop_front();
        return response;
    }

    std::string model_;
    mutable std::mutex mu_;
    std::deque<std::string> queue_;
    std::vector<ChatRequest> requests_;
};

// ============================================================================
// Response cache and replay backend
// ============================================================================

/// Write-through response store, one JSON file, keys sorted so the file is
/// byte-stable for identical content.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
        std::ifstream in(path_);
        if (!in) return;
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw BackendError("malformed response cache " + path_.string() + ": " + e.what());
        }
        if (j.contains("entries"))
            for (const auto& [key, entry] : j.at("entries").items()) entries_[key] = entry;
    }

    const std::filesystem::path& path() const { return path_; }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return entries_.size();
    }

    std::optional<std::string> lookup(const std::string& key) const {
        std::lock_guard<std::mutex> lock(mu_);
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second.at("response").get<std::string>();
    }

    void store(const std::string& key, const std::string& response, json metadata = json::object()) {
        std::lock_guard<std::mutex> lock(mu_);
        entries_[key] = json{{"response", response}, {"metadata", std::move(metadata)}};
        save_locked();
    }

private:
    void save_locked() {
        json entries = json::object();
        for (const auto& [key, entry] : entries_) entries[key] = entry;
        std::ofstream out(path_, std::ios::binary);
        if (!out) throw BackendError("cannot write response cache: " + path_.string());
        out << json{{"entries", std::move(entries)}}.dump(2) << '\n';
    }

    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::map<std::string, json> entries_;
};

/// Serves responses from a cache file. Strict mode forbids misses (fully
/// offline); non-strict mode falls through to a wrapped upstream backend and
/// records what it returns.
class ReplayBackend : public Backend {
public:
    ReplayBackend(std::filesystem::path cache_path, bool strict,
                  std::shared_ptr<Backend> upstream = nullptr, std::string model = "")
        : cache_(std::move(cache_path)),
          strict_(strict),
          upstream_(std::move(upstream)),
          model_(!model.empty() ? std::move(model)
                                : (upstream_ ? upstream_->model_id() : std::string("replay"))) {}

    std::string model_id() const override { return model_; }
    const ResponseCache& cache() const { return cache_; }

private:
    std::string do_complete(const ChatRequest& request) override {
        const std::string key = cache_key(model_, request.messages, request.params);
        if (auto hit = cache_.lookup(key)) return *hit;
        if (strict_)
            throw CacheMiss("strict replay: no cached response for key " + key);
        if (!upstream_)
            throw CacheMiss("replay cache miss for key " + key + " and no upstream backend");
        std::string response = upstream_->complete(request);
        cache_.store(key, response, json{{"model", model_}});
        return response;
    }

    ResponseCache cache_;
    bool strict_;
    std::shared_ptr<Backend> upstream_;
    std::string model_;
};

// ============================================================================
// Remote backend (OpenAI-compatible chat completions)
// ============================================================================

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string error;  // non-empty on transport failure
};

using HttpHeader = std::pair<std::string, std::string>;
using HttpPostFn = std::function<HttpResponse(const std::string& url,
                                              const std::vector<HttpHeader>& headers,
                                              const std::string& body)>;

struct RemoteConfig {
    std::string endpoint;        // full URL of the chat-completions route
    std::string model;
    std::string credential_env;  // NAME of the env var holding the API key
    std::size_t max_attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
};

/// The default transport, built on the bundled HTTP client. Declared here so
/// tests can compare against it; defined at the bottom of this header.
HttpPostFn default_transport();

/// Speaks the common chat-completions wire format: POST a JSON body with
/// model/messages/decoding fields, read choices[0].message.content. Failures
/// are retried with exponential backoff (max_attempts total tries) and then
/// surfaced as NetworkError. The transport is injectable so tests never touch
/// a socket.
class RemoteChatBackend : public Backend {
public:
    explicit RemoteChatBackend(RemoteConfig config, HttpPostFn transport = default_transport())
        : config_(std::move(config)), transport_(std::move(transport)) {
        if (config_.endpoint.empty())
            throw std::invalid_argument("remote backend needs an endpoint URL");
        if (config_.model.empty())
            throw std::invalid_argument("remote backend needs a model id");
        if (config_.max_attempts < 1)
            throw std::invalid_argument("remote backend needs max_attempts >= 1");
    }

    std::string model_id() const override { return config_.model; }

private:
    std::string do_complete(const ChatRequest& request) override {
        json body = params_to_json(request.params);
        body["model"] = config_.model;
        body["messages"] = messages_to_json(request.messages);

        std::vector<HttpHeader> headers;
        if (!config_.credential_env.empty()) {
            const char* secret = std::getenv(config_.credential_env.c_str());
            if (!secret || !*secret)
                throw NetworkError("credential environment variable \"" +
                                   config_.credential_env + "\" is not set");
            headers.emplace_back("Authorization", std::string("Bearer ") + secret);
        }

        std::string last_error;
        for (std::size_t attempt = 1; attempt <= config_.max_attempts; ++attempt) {
            if (attempt > 1 && config_.initial_backoff.count() > 0)
                std::this_thread::sleep_for(config_.initial_backoff * (1u << (attempt - 2)));
            const HttpResponse res = transport_(config_.endpoint, headers, body.dump());
            if (!res.error.empty()) {
                last_error = res.error;
                continue;
            }
            if (res.status != 200) {
                last_error = "HTTP " + std::to_string(res.status) + ": " + res.body;
                continue;
            }
            try {
                const json j = json::parse(res.body);
                return j.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception& e) {
                last_error = std::string("malformed completion response: ") + e.what();
                continue;
            }
        }
        throw NetworkError("remote completion failed after " +
                           std::to_string(config_.max_attempts) + " attempts: " + last_error);
    }

    RemoteConfig config_;
    HttpPostFn transport_;
};

}  // namespace lawreason::llm

// The HTTP client include is isolated at the bottom: it drags in platform
// headers and optional TLS support that nothing above needs.
#include <httplib.h>

namespace lawreason::llm {

namespace detail {

/// Splits "scheme://host[:port]/path" into the client base and the path.
inline std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) return {url, "/v1/chat/completions"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace detail

inline HttpPostFn default_transport() {
    return [](const std::string& url, const std::vector<HttpHeader>& headers,
              const std::string& body) -> HttpResponse {
        const auto [base, path] = detail::split_url(url);
        httplib::Client client(base);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(120, 0);
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        const httplib::Result res = client.Post(path, h, body, "application/json");
        if (!res) return HttpResponse{0, "", "transport error: " + httplib::to_string(res.error())};
        return HttpResponse{res->status, res->body, ""};
    };
}

}  // namespace lawreason::llm
