#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "httplib.h"

#include "tablegraph/agent.hpp"
#include "tablegraph/types.hpp"

namespace tablegraph {

struct ChatMessage {
    std::string role; // system | user | assistant | tool
    std::string content;
};

struct ChatResult {
    std::string content;
    std::optional<TokenUsage> usage;
};

struct ChatConfig {
    std::string base_url = "http://localhost:8000/v1";
    std::string model = "gpt-4o-mini";
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string api_key_env = "OPENAI_API_KEY";
    std::string cache_dir;    // record/replay cache; empty disables caching
    bool live = false;        // without --live only cache hits are allowed
    int timeout_seconds = 120;
};

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    /// Sends one chat-completions request body; returns the response body.
    virtual Json post(const Json& request) = 0;
};

/// OpenAI-style chat-completions endpoint over HTTP.
class HttpChatTransport : public ChatTransport {
public:
    explicit HttpChatTransport(const ChatConfig& config) : config_(config) {
        auto scheme_end = config.base_url.find("://");
        std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        auto path_start = config.base_url.find('/', host_start);
        if (path_start == std::string::npos) {
            origin_ = config.base_url;
        } else {
            origin_ = config.base_url.substr(0, path_start);
            base_path_ = config.base_url.substr(path_start);
        }
        while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
    }

    // a fresh connection per request keeps concurrent in-flight calls safe
    Json post(const Json& request) override {
        httplib::Client client(origin_);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        httplib::Headers headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
        auto res = client.Post(base_path_ + "/chat/completions", headers, request.dump(),
                               "application/json");
        if (!res)
            throw PolicyTransportError("chat request failed: " + to_string(res.error()));
        if (res->status != 200)
            throw PolicyTransportError("chat request returned HTTP " +
                                       std::to_string(res->status) + ": " + res->body);
        try {
            return Json::parse(res->body);
        } catch (const std::exception& e) {
            throw PolicyTransportError(std::string("chat response is not JSON: ") + e.what());
        }
    }

private:
    ChatConfig config_;
    std::string origin_;
    std::string base_path_;
};

/// Test transport: either a fixed queue of completions or a handler function.
class ScriptedChatTransport : public ChatTransport {
public:
    struct Canned {
        std::string content;
        long prompt_tokens = 0;
        long completion_tokens = 0;
    };

    explicit ScriptedChatTransport(std::vector<Canned> queue) : queue_(std::move(queue)) {}
    explicit ScriptedChatTransport(std::function<Canned(const Json&)> handler)
        : handler_(std::move(handler)) {}

    Json post(const Json& request) override {
        std::lock_guard<std::mutex> lock(mutex_);
        Canned canned;
        if (handler_) {
            canned = handler_(request);
        } else {
            if (index_ >= queue_.size())
                throw PolicyTransportError("scripted chat transport exhausted");
            canned = queue_[index_++];
        }
        return Json{{"choices", Json::array({Json{{"message", Json{{"role", "assistant"},
                                                                   {"content", canned.content}}}}})},
                    {"usage", Json{{"prompt_tokens", canned.prompt_tokens},
                                   {"completion_tokens", canned.completion_tokens}}}};
    }

private:
    std::vector<Canned> queue_;
    std::function<Canned(const Json&)> handler_;
    std::size_t index_ = 0;
    std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Client with record/replay cache
// ---------------------------------------------------------------------------

namespace detail {
inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}
} // namespace detail

/// Chat-completions client. Every request is keyed by a content hash; with a
/// cache directory set, hits are replayed and (in live mode) misses are
/// recorded, so test and CI runs never silently reach the network.
class ChatClient {
public:
    ChatClient(ChatConfig config, std::shared_ptr<ChatTransport> transport)
        : config_(std::move(config)), transport_(std::move(transport)) {}

    const ChatConfig& config() const { return config_; }

    ChatResult complete(const std::vector<ChatMessage>& messages) {
        Json request = build_request(messages);
        std::string key = detail::hex64(detail::fnv1a64(request.dump()));
        if (!config_.cache_dir.empty()) {
            if (auto cached = read_cache(key)) return parse_response(*cached);
        }
        if (!config_.live)
            throw PolicyTransportError(
                "request " + key + " not in replay cache and live mode is off");
        Json response = transport_->post(request);
        if (!config_.cache_dir.empty()) write_cache(key, request, response);
        return parse_response(response);
    }

    Json build_request(const std::vector<ChatMessage>& messages) const {
        Json jmessages = Json::array();
        for (auto& m : messages) jmessages.push_back({{"role", m.role}, {"content", m.content}});
        return Json{{"model", config_.model},
                    {"temperature", config_.temperature},
                    {"max_tokens", config_.max_tokens},
                    {"messages", jmessages}};
    }

private:
    ChatConfig config_;
    std::shared_ptr<ChatTransport> transport_;

    static ChatResult parse_response(const Json& response) {
        ChatResult result;
        try {
            result.content = response.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const std::exception& e) {
            throw PolicyTransportError(std::string("unexpected chat response shape: ") + e.what());
        }
        if (response.contains("usage")) {
            const Json& usage = response.at("usage");
            TokenUsage u;
            u.input = usage.value("prompt_tokens", 0L);
            u.output = usage.value("completion_tokens", 0L);
            result.usage = u;
        }
        return result;
    }

    std::filesystem::path cache_path(const std::string& key) const {
        return std::filesystem::path(config_.cache_dir) / (key + ".json");
    }

    std::optional<Json> read_cache(const std::string& key) const {
        std::ifstream in(cache_path(key), std::ios::binary);
        if (!in) return std::nullopt;
        try {
            Json entry = Json::parse(in);
            return entry.at("response");
        } catch (const std::exception&) {
            return std::nullopt; // treat a torn entry as a miss
        }
    }

    /// Atomic per-key write: temp file + rename, safe under concurrent episodes.
    void write_cache(const std::string& key, const Json& request, const Json& response) const {
        std::filesystem::create_directories(config_.cache_dir);
        Json entry{{"request", request}, {"response", response}};
        auto final_path = cache_path(key);
        auto tmp_path = final_path;
        tmp_path += ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(this));
        {
            std::ofstream out(tmp_path, std::ios::binary);
            out << entry.dump(2) << "\n";
        }
        std::error_code ec;
        std::filesystem::rename(tmp_path, final_path, ec);
        if (ec) std::filesystem::remove(tmp_path, ec);
    }
};

// ---------------------------------------------------------------------------
// LLM policy
// ---------------------------------------------------------------------------

/// Maps the episode history onto a chat-message sequence: the initial
/// prompt's preamble as the system message, its instruction/object/schema
/// block as the first user message, each turn's raw output as an assistant
/// message and each tool result as a tool-role message.
inline std::vector<ChatMessage> history_to_messages(const History& history) {
    std::vector<ChatMessage> messages;
    const std::string& prompt = history.initial_prompt;
    std::size_t split = prompt.find(kPromptUserMarker);
    if (split == std::string::npos) {
        messages.push_back({"system", prompt});
    } else {
        messages.push_back({"system", prompt.substr(0, split)});
        messages.push_back({"user", prompt.substr(split + 2)}); // keep "Instruction: ..."
    }
    for (std::size_t i = 0; i < history.turns.size(); ++i) {
        if (history.conclusion_at && *history.conclusion_at == i)
            messages.push_back({"user", kConcludeNotice});
        const Turn& turn = history.turns[i];
        messages.push_back({"assistant", turn.raw});
        if (turn.kind != ParsedOutput::Kind::actions)
            messages.push_back({"tool", turn.tool_result});
    }
    if (history.conclusion_at && *history.conclusion_at == history.turns.size())
        messages.push_back({"user", kConcludeNotice});
    return messages;
}

class LlmPolicy : public Policy {
public:
    explicit LlmPolicy(std::shared_ptr<ChatClient> client) : client_(std::move(client)) {}

    PolicyReply step(const History& history) override {
        ChatResult result = client_->complete(history_to_messages(history));
        return {result.content, result.usage};
    }

private:
    std::shared_ptr<ChatClient> client_;
};

} // namespace tablegraph
