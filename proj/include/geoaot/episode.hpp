// Drives one episode: prompt, model reply, parsed action, environment
// step, until a terminal action, a confident enough hypothesis, or the turn
// budget ends it. The resulting trace carries everything needed to replay
// or audit the run, including every prompt that was sent.
#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "geoaot/action_grammar.hpp"
#include "geoaot/backend.hpp"
#include "geoaot/env.hpp"
#include "geoaot/prompt.hpp"

namespace geoaot {

struct EpisodeConfig {
    int max_turns = 10;
    double start_heading = 0.0;
    double fov_deg = 90.0;
    double move_tolerance_deg = 45.0;
    std::optional<double> stop_on_confidence;
    int transport_retries = 3;  // extra attempts after a retryable failure
    ViewConfig view;            // fov_deg below overrides view.fov_deg
    Env::PanoSource pano_source;  // null means synthetic panos
};

struct EpisodeTrace {
    std::string graph_id;
    std::string backend_name;
    std::string start_node;
    double start_heading = 0.0;
    int max_turns = 0;
    std::vector<AgentTurn> turns;
    std::vector<std::string> prompts;         // every prompt sent, reprompts included
    std::vector<std::string> parse_failures;  // raw replies that failed to parse
    int transport_retries = 0;                // retryable failures recovered from
    std::optional<GuessAction> final_guess;
    GeoPoint ground_truth_point;
    PlaceLabels ground_truth_labels;
    std::optional<double> distance_km;  // absent when the agent never guessed
    double score = 0.0;                 // 0 when the agent never guessed
};

namespace detail {

inline std::string observation_ref(const Observation& obs) {
    if (!obs.view) return obs.view_ref;
    char buf[32];
    std::snprintf(buf, sizeof(buf), ":%016llx",
                  static_cast<unsigned long long>(obs.view_hash));
    return obs.view_ref + buf;
}

}  // namespace detail

// Runs the loop against a finalized graph. Ground truth is the start node:
// the episode asks "where did this walk begin", wherever the agent wandered.
inline EpisodeTrace run_episode(const NavGraph& g, ModelBackend& backend,
                                const EpisodeConfig& cfg = {}) {
    if (cfg.max_turns < 0) throw std::invalid_argument("run_episode: max_turns must be >= 0");

    ViewConfig view = cfg.view;
    view.fov_deg = cfg.fov_deg;
    Env env(g, view, cfg.move_tolerance_deg, cfg.pano_source);

    EpisodeTrace trace;
    trace.graph_id = g.graph_id;
    trace.backend_name = backend.name();
    trace.max_turns = cfg.max_turns;
    trace.start_heading = wrap_deg_360(cfg.start_heading);

    auto [state, obs] = env.reset(std::nullopt, cfg.start_heading);
    trace.start_node = state.node;
    const auto start_idx = g.index_of(state.node);
    trace.ground_truth_point = g.node(*start_idx).location;
    trace.ground_truth_labels = g.node(*start_idx).labels;

    auto session = backend.start_session(g.graph_id);

    auto call = [&](const std::string& prompt) -> std::string {
        trace.prompts.push_back(prompt);
        for (int attempt = 0;; ++attempt) {
            try {
                return session->complete(prompt, obs);
            } catch (const TransportError& e) {
                if (!e.retryable() || attempt >= cfg.transport_retries) throw;
                ++trace.transport_retries;
            }
        }
    };

    std::optional<GuessAction> hypothesis;
    bool terminal = false;

    for (int turn = 0; turn <= cfg.max_turns && !terminal; ++turn) {
        std::string reply = call(build_prompt(obs, trace.turns));
        std::optional<ParsedTurn> parsed;
        try {
            parsed = parse_action(reply);
        } catch (const ParseError& e) {
            trace.parse_failures.push_back(e.raw_text());
            reply = call(build_prompt(obs, trace.turns, true));
            try {
                parsed = parse_action(reply);
            } catch (const ParseError& e2) {
                trace.parse_failures.push_back(e2.raw_text());
                parsed = ParsedTurn{Action{StopAction{}}, std::nullopt};
            }
        }

        if (parsed->guess) hypothesis = parsed->guess;

        AgentTurn rec;
        rec.observation_ref = detail::observation_ref(obs);
        rec.node = state.node;
        rec.heading = state.heading;
        rec.reasoning_text = reply;
        rec.guess = parsed->guess;
        rec.action = parsed->action;
        trace.turns.push_back(std::move(rec));

        if (is_terminal_action(parsed->action)) {
            terminal = true;
        } else if (cfg.stop_on_confidence && parsed->guess && parsed->guess->confidence &&
                   *parsed->guess->confidence >= *cfg.stop_on_confidence) {
            // Confident enough: end here, skipping the movement.
            terminal = true;
        } else if (turn < cfg.max_turns) {
            StepResult res = env.step(state, parsed->action);
            state = res.state;
            obs = *res.observation;
        }
    }

    trace.final_guess = hypothesis;
    if (trace.final_guess) {
        trace.distance_km = haversine_km(trace.final_guess->point, trace.ground_truth_point);
        trace.score = geo_score(*trace.distance_km);
    }
    return trace;
}

// --- trace serialization -------------------------------------------------

inline nlohmann::json guess_to_json(const GuessAction& g) {
    nlohmann::json j{{"lat", g.point.lat}, {"lon", g.point.lon}};
    nlohmann::json labels{{"country", g.labels.country}};
    if (g.labels.city) labels["city"] = *g.labels.city;
    if (g.labels.street) labels["street"] = *g.labels.street;
    j["labels"] = labels;
    if (g.confidence) j["confidence"] = *g.confidence;
    return j;
}

inline GuessAction guess_from_json(const nlohmann::json& j) {
    GuessAction g;
    g.point = GeoPoint{j.at("lat").get<double>(), j.at("lon").get<double>()};
    const auto& labels = j.at("labels");
    g.labels.country = labels.at("country").get<std::string>();
    if (labels.contains("city")) g.labels.city = labels.at("city").get<std::string>();
    if (labels.contains("street")) g.labels.street = labels.at("street").get<std::string>();
    if (j.contains("confidence")) g.confidence = j.at("confidence").get<double>();
    return g;
}

inline nlohmann::json trace_to_json(const EpisodeTrace& t, bool include_prompts = true) {
    nlohmann::json turns = nlohmann::json::array();
    for (size_t i = 0; i < t.turns.size(); ++i) {
        const AgentTurn& u = t.turns[i];
        nlohmann::json j{{"turn", i},
                         {"observation_ref", u.observation_ref},
                         {"node", u.node},
                         {"heading", u.heading},
                         {"reasoning", u.reasoning_text},
                         {"action", serialize_action(u.action)}};
        j["guess"] = u.guess ? guess_to_json(*u.guess) : nlohmann::json(nullptr);
        turns.push_back(std::move(j));
    }
    nlohmann::json gt{{"lat", t.ground_truth_point.lat},
                      {"lon", t.ground_truth_point.lon},
                      {"labels",
                       [&] {
                           nlohmann::json l{{"country", t.ground_truth_labels.country},
                                            {"continent",
                                             continent_code(t.ground_truth_labels.continent)}};
                           if (t.ground_truth_labels.city) l["city"] = *t.ground_truth_labels.city;
                           if (t.ground_truth_labels.street)
                               l["street"] = *t.ground_truth_labels.street;
                           return l;
                       }()}};
    nlohmann::json j{{"graph_id", t.graph_id},
                     {"backend", t.backend_name},
                     {"start_node", t.start_node},
                     {"start_heading", t.start_heading},
                     {"max_turns", t.max_turns},
                     {"turns", std::move(turns)},
                     {"final_guess",
                      t.final_guess ? guess_to_json(*t.final_guess) : nlohmann::json(nullptr)},
                     {"ground_truth", std::move(gt)},
                     {"distance_km",
                      t.distance_km ? nlohmann::json(*t.distance_km) : nlohmann::json(nullptr)},
                     {"score", t.score},
                     {"transport_retries", t.transport_retries},
                     {"parse_failures", t.parse_failures}};
    if (include_prompts) j["prompts"] = t.prompts;
    return j;
}

// One line of the run-level JSONL index.
inline nlohmann::json trace_index_entry(const EpisodeTrace& t, const std::string& trace_file) {
    return nlohmann::json{{"graph_id", t.graph_id},
                          {"file", trace_file},
                          {"turns", t.turns.size()},
                          {"distance_km", t.distance_km ? nlohmann::json(*t.distance_km)
                                                        : nlohmann::json(nullptr)},
                          {"score", t.score}};
}

}  // namespace geoaot
