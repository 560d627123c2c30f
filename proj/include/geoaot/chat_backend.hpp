// Remote model access over a chat-completions wire format.
//
// Request:  POST {base}{path}  with JSON
//   { "model": "...", "temperature": 0,
//     "messages": [ { "role": "user", "content": [
//         { "type": "text", "text": "<prompt>" },
//         { "type": "image_url", "image_url": { "url": "data:image/x-portable-pixmap;base64,..." } }
//     ] } ] }
// Response: { "choices": [ { "message": { "content": "<model text>" } } ] }
//
// Temperature is pinned to 0. Transport failures map to TransportError:
// connect errors, timeouts, 408/429/5xx are retryable; other statuses and
// malformed bodies are fatal. Every request/response pair is logged and can
// be exported as a replay script.
#pragma once

#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "geoaot/backend.hpp"
#include "geoaot/image.hpp"

namespace geoaot {

enum class ImageTransport { None, InlineBase64, Url };

struct ChatBackendConfig {
    std::string base_url = "http://localhost:8080";
    std::string path = "/v1/chat/completions";
    std::string model_name = "stub-model";
    std::string api_key;                      // sent as Bearer token when non-empty
    ImageTransport image_transport = ImageTransport::InlineBase64;
    std::string image_url_prefix;             // Url mode: prefix + view_ref
    int timeout_seconds = 60;

    // Fills endpoint and key from GEOAOT_API_BASE / GEOAOT_API_KEY.
    static ChatBackendConfig from_env() {
        ChatBackendConfig cfg;
        if (const char* base = std::getenv("GEOAOT_API_BASE")) cfg.base_url = base;
        if (const char* key = std::getenv("GEOAOT_API_KEY")) cfg.api_key = key;
        return cfg;
    }
};

struct ChatExchange {
    std::string episode_key;
    std::string request_body;
    int status = 0;
    std::string response_body;
    std::string content;  // extracted model text (empty on failure)
};

namespace detail {

inline std::string base64(const std::string& in) {
    static const char* tab = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    unsigned val = 0;
    int bits = -6;
    for (unsigned char c : in) {
        val = (val << 8) + c;
        bits += 8;
        while (bits >= 0) {
            out.push_back(tab[(val >> bits) & 0x3F]);
            bits -= 6;
        }
    }
    if (bits > -6) out.push_back(tab[((val << 8) >> (bits + 8)) & 0x3F]);
    while (out.size() % 4) out.push_back('=');
    return out;
}

}  // namespace detail

class ChatBackend : public ModelBackend {
public:
    explicit ChatBackend(ChatBackendConfig cfg) : cfg_(std::move(cfg)) {}

    std::unique_ptr<BackendSession> start_session(const std::string& episode_key) override {
        class S : public BackendSession {
        public:
            S(ChatBackend& owner, std::string key) : owner_(owner), key_(std::move(key)) {}
            std::string complete(const std::string& prompt, const Observation& obs) override {
                return owner_.request(key_, prompt, obs);
            }

        private:
            ChatBackend& owner_;
            std::string key_;
        };
        return std::make_unique<S>(*this, episode_key);
    }

    // Deterministic because decoding is greedy (temperature 0).
    bool deterministic() const override { return true; }
    bool concurrent_sessions() const override { return true; }
    std::string name() const override { return cfg_.model_name; }

    std::vector<ChatExchange> log() const {
        std::lock_guard<std::mutex> lk(mu_);
        return log_;
    }

    // Replay script equivalent to the logged conversation, loadable by
    // ReplayBackend.
    nlohmann::json replay_script() const {
        nlohmann::json by_graph = nlohmann::json::object();
        std::lock_guard<std::mutex> lk(mu_);
        for (const auto& e : log_) {
            if (e.status != 200) continue;
            by_graph[e.episode_key].push_back(e.content);
        }
        return nlohmann::json{{"by_graph", by_graph}};
    }

    void write_log(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("ChatBackend: cannot open log file " + path);
        std::lock_guard<std::mutex> lk(mu_);
        for (const auto& e : log_) {
            nlohmann::json j{{"episode", e.episode_key},
                             {"request", e.request_body},
                             {"status", e.status},
                             {"response", e.response_body}};
            out << j.dump() << "\n";
        }
    }

private:
    std::string request(const std::string& episode_key, const std::string& prompt,
                        const Observation& obs) {
        nlohmann::json content = nlohmann::json::array();
        content.push_back({{"type", "text"}, {"text", prompt}});
        if (cfg_.image_transport == ImageTransport::InlineBase64 && obs.view) {
            content.push_back(
                {{"type", "image_url"},
                 {"image_url",
                  {{"url", "data:image/x-portable-pixmap;base64," +
                               detail::base64(encode_ppm(*obs.view))}}}});
        } else if (cfg_.image_transport == ImageTransport::Url) {
            content.push_back({{"type", "image_url"},
                               {"image_url", {{"url", cfg_.image_url_prefix + obs.view_ref}}}});
        }
        nlohmann::json body{{"model", cfg_.model_name},
                            {"temperature", 0},
                            {"messages", nlohmann::json::array({nlohmann::json{
                                             {"role", "user"}, {"content", content}}})}};

        ChatExchange ex;
        ex.episode_key = episode_key;
        ex.request_body = body.dump();

        httplib::Client cli(cfg_.base_url);
        cli.set_connection_timeout(cfg_.timeout_seconds);
        cli.set_read_timeout(cfg_.timeout_seconds);
        httplib::Headers headers;
        if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

        auto res = cli.Post(cfg_.path, headers, ex.request_body, "application/json");
        if (!res) {
            record(ex);
            throw TransportError("chat backend: connection to " + cfg_.base_url + " failed",
                                 /*retryable=*/true);
        }
        ex.status = res->status;
        ex.response_body = res->body;
        if (res->status != 200) {
            record(ex);
            const bool retryable =
                res->status == 408 || res->status == 429 || res->status >= 500;
            throw TransportError("chat backend: HTTP " + std::to_string(res->status), retryable,
                                 res->status);
        }
        try {
            const nlohmann::json j = nlohmann::json::parse(res->body);
            ex.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            record(ex);
            throw TransportError(std::string("chat backend: malformed response body: ") +
                                     e.what(),
                                 /*retryable=*/false);
        }
        record(ex);
        return ex.content;
    }

    void record(const ChatExchange& ex) {
        std::lock_guard<std::mutex> lk(mu_);
        log_.push_back(ex);
    }

    ChatBackendConfig cfg_;
    mutable std::mutex mu_;
    std::vector<ChatExchange> log_;
};

}  // namespace geoaot
