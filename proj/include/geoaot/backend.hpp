// Model backends. An episode opens one session and feeds it prompts; the
// session replies with raw model text. Scripted and replay backends are
// deterministic by construction and safe to share across threads; each
// session's state is owned by exactly one episode.
#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoaot/env.hpp"

namespace geoaot {

// Transport-level failure from a remote backend. Retryable errors (timeouts,
// 429, 5xx) may be re-attempted by the caller; fatal ones may not.
class TransportError : public std::runtime_error {
public:
    TransportError(std::string msg, bool retryable, int http_status = 0)
        : std::runtime_error(std::move(msg)), retryable_(retryable), status_(http_status) {}
    bool retryable() const { return retryable_; }
    int http_status() const { return status_; }

private:
    bool retryable_;
    int status_;
};

class BackendSession {
public:
    virtual ~BackendSession() = default;
    // Raw model text for this prompt. The observation is passed alongside so
    // image-capable transports can attach the rendered view.
    virtual std::string complete(const std::string& prompt, const Observation& obs) = 0;
};

class ModelBackend {
public:
    virtual ~ModelBackend() = default;
    virtual std::unique_ptr<BackendSession> start_session(const std::string& episode_key) = 0;
    virtual bool deterministic() const = 0;
    virtual bool concurrent_sessions() const = 0;
    virtual std::string name() const = 0;
};

// Backend driven by a caller-supplied function of (turn index, prompt,
// observation). The workhorse for tests and demos.
class ScriptedBackend : public ModelBackend {
public:
    using Fn = std::function<std::string(size_t turn, const std::string& prompt,
                                         const Observation& obs)>;

    explicit ScriptedBackend(Fn fn, std::string tag = "scripted") : fn_(std::move(fn)),
                                                                    tag_(std::move(tag)) {}

    std::unique_ptr<BackendSession> start_session(const std::string&) override {
        class S : public BackendSession {
        public:
            S(const Fn& fn) : fn_(fn) {}
            std::string complete(const std::string& prompt, const Observation& obs) override {
                return fn_(turn_++, prompt, obs);
            }

        private:
            const Fn& fn_;
            size_t turn_ = 0;
        };
        return std::make_unique<S>(fn_);
    }
    bool deterministic() const override { return true; }
    bool concurrent_sessions() const override { return true; }
    std::string name() const override { return tag_; }

private:
    Fn fn_;
    std::string tag_;
};

// Replays canned replies from a JSON document of the shape
//   { "default": ["reply 0", ...], "by_graph": { "<graph_id>": [ ... ] } }
// Sessions are keyed by graph id and fall back to "default"; a session that
// runs out of replies answers "STOP".
class ReplayBackend : public ModelBackend {
public:
    explicit ReplayBackend(const nlohmann::json& doc, std::string tag = "replay")
        : tag_(std::move(tag)) {
        if (!doc.is_object()) throw std::invalid_argument("replay script: expected JSON object");
        if (doc.contains("default")) default_ = read_list(doc.at("default"));
        if (doc.contains("by_graph")) {
            if (!doc.at("by_graph").is_object())
                throw std::invalid_argument("replay script: by_graph must be an object");
            for (const auto& [k, v] : doc.at("by_graph").items()) by_graph_[k] = read_list(v);
        }
    }

    static ReplayBackend from_file(const std::string& path, std::string tag = "replay") {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("replay script: cannot open " + path);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("replay script " + path + ": " + e.what());
        }
        return ReplayBackend(doc, std::move(tag));
    }

    std::unique_ptr<BackendSession> start_session(const std::string& episode_key) override {
        class S : public BackendSession {
        public:
            explicit S(const std::vector<std::string>& replies) : replies_(replies) {}
            std::string complete(const std::string&, const Observation&) override {
                if (cursor_ >= replies_.size()) return "STOP";
                return replies_[cursor_++];
            }

        private:
            const std::vector<std::string>& replies_;
            size_t cursor_ = 0;
        };
        const auto it = by_graph_.find(episode_key);
        return std::make_unique<S>(it != by_graph_.end() ? it->second : default_);
    }
    bool deterministic() const override { return true; }
    bool concurrent_sessions() const override { return true; }
    std::string name() const override { return tag_; }

private:
    static std::vector<std::string> read_list(const nlohmann::json& j) {
        if (!j.is_array()) throw std::invalid_argument("replay script: reply list must be array");
        std::vector<std::string> out;
        for (const auto& e : j) {
            if (!e.is_string())
                throw std::invalid_argument("replay script: replies must be strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    std::vector<std::string> default_;
    std::map<std::string, std::vector<std::string>> by_graph_;
    std::string tag_;
};

}  // namespace geoaot
