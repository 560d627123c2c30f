// Two-stage location proposal. Stage 1 asks the model for a seed
// coordinate and description; stage 2 shows it candidate markers taken
// from a map provider near that seed and lets it accept one or reject the
// batch, which loops back to stage 1. Rounds are bounded; the whole
// negotiation transcript is kept either way.
//
// Model reply grammar (case-insensitive keywords, prose tolerated):
//   stage 1:  PROPOSE <lat>,<lon> "<description>"
//   stage 2:  ACCEPT <marker index>   |   REJECT [reason]
#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geoaot/action_grammar.hpp"
#include "geoaot/backend.hpp"
#include "geoaot/nav_graph.hpp"

namespace geoaot {

struct MapMarker {
    GeoPoint location;
    std::string label;
};

// Source of candidate markers near a seed point, plus a rendering of the
// "satellite tile" the model is shown. Real map services plug in here; the
// deterministic stub below is what tests use.
class MapProvider {
public:
    virtual ~MapProvider() = default;
    virtual std::vector<MapMarker> candidates(const GeoPoint& seed, int k) = 0;
    virtual std::string tile_descriptor(const GeoPoint& seed,
                                        const std::vector<MapMarker>& markers) = 0;
};

// Stub provider over a fixed bank of panorama locations: candidates are the
// k nearest bank entries to the seed (ties by bank order), and the tile is
// a textual stand-in for the zoom-16 satellite view.
class StubMapProvider : public MapProvider {
public:
    explicit StubMapProvider(std::vector<MapMarker> bank) : bank_(std::move(bank)) {
        if (bank_.empty()) throw std::invalid_argument("StubMapProvider: empty marker bank");
    }

    std::vector<MapMarker> candidates(const GeoPoint& seed, int k) override {
        std::vector<std::pair<double, std::size_t>> order;
        order.reserve(bank_.size());
        for (std::size_t i = 0; i < bank_.size(); ++i)
            order.emplace_back(haversine_km(seed, bank_[i].location), i);
        std::stable_sort(order.begin(), order.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<MapMarker> out;
        for (std::size_t i = 0; i < order.size() && static_cast<int>(i) < k; ++i)
            out.push_back(bank_[order[i].second]);
        return out;
    }

    std::string tile_descriptor(const GeoPoint& seed,
                                const std::vector<MapMarker>& markers) override {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "satellite tile, zoom 16, centered %.6f,%.6f; markers:",
                      seed.lat, seed.lon);
        std::string s = buf;
        for (std::size_t i = 0; i < markers.size(); ++i) {
            std::snprintf(buf, sizeof(buf), " %zu=(%.6f,%.6f %s)", i + 1, markers[i].location.lat,
                          markers[i].location.lon, markers[i].label.c_str());
            s += buf;
        }
        return s;
    }

private:
    std::vector<MapMarker> bank_;
};

struct ProposalConfig {
    int max_rounds = 5;  // stage-2 presentations before giving up
    int markers_per_round = 3;
};

struct ProposalResult {
    GeoPoint point;            // accepted marker's coordinates
    std::string rationale;     // stage-1 description that led to it
    int rounds = 0;            // stage-2 rounds consumed
    std::vector<std::pair<std::string, std::string>> transcript;  // (prompt, reply)
};

class ProposalFailed : public std::runtime_error {
public:
    ProposalFailed(std::string msg, std::vector<std::pair<std::string, std::string>> transcript)
        : std::runtime_error(std::move(msg)), transcript_(std::move(transcript)) {}
    const std::vector<std::pair<std::string, std::string>>& transcript() const {
        return transcript_;
    }

private:
    std::vector<std::pair<std::string, std::string>> transcript_;
};

namespace detail {

struct StageOneReply {
    GeoPoint seed;
    std::string description;
};

inline std::optional<StageOneReply> parse_propose(std::string_view text) {
    size_t pos = 0;
    std::optional<StageOneReply> last;
    while (pos < text.size()) {
        const size_t at = text.find('P', pos);
        const size_t at2 = text.find('p', pos);
        const size_t hit = std::min(at == std::string_view::npos ? text.size() : at,
                                    at2 == std::string_view::npos ? text.size() : at2);
        if (hit >= text.size()) break;
        pos = hit + 1;
        if (hit > 0 && std::isalnum(static_cast<unsigned char>(text[hit - 1]))) continue;
        std::string_view s = text.substr(hit);
        if (!ieq_prefix(s, "PROPOSE")) continue;
        s = trim_view(s.substr(7));
        double lat, lon;
        size_t used;
        if (!parse_double(s, lat, used)) continue;
        s = trim_view(s.substr(used));
        if (s.empty() || s.front() != ',') continue;
        s = trim_view(s.substr(1));
        if (!parse_double(s, lon, used)) continue;
        s = trim_view(s.substr(used));
        if (s.empty() || s.front() != '"') continue;
        const size_t close = s.find('"', 1);
        if (close == std::string_view::npos) continue;
        try {
            last = StageOneReply{GeoPoint{lat, lon}, std::string(s.substr(1, close - 1))};
        } catch (const std::invalid_argument&) {
        }
    }
    return last;
}

// Returns the accepted 1-based marker index, 0 for REJECT, nullopt when
// neither keyword parses.
inline std::optional<int> parse_verdict(std::string_view text, int marker_count) {
    std::optional<int> verdict;
    size_t pos = 0;
    while (pos <= text.size()) {
        const size_t nl = text.find('\n', pos);
        const size_t end = nl == std::string_view::npos ? text.size() : nl;
        std::string_view line = trim_view(text.substr(pos, end - pos));
        for (size_t i = 0; i < line.size(); ++i) {
            if (i > 0 && std::isalnum(static_cast<unsigned char>(line[i - 1]))) continue;
            std::string_view s = line.substr(i);
            if (ieq_prefix(s, "ACCEPT")) {
                double idx;
                size_t used;
                if (parse_double(trim_view(s.substr(6)), idx, used) && idx >= 1 &&
                    idx <= marker_count && idx == static_cast<int>(idx))
                    verdict = static_cast<int>(idx);
            } else if (ieq_prefix(s, "REJECT")) {
                verdict = 0;
            }
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return verdict;
}

}  // namespace detail

inline ProposalResult propose_location(ModelBackend& backend, MapProvider& provider,
                                       Continent continent, Difficulty difficulty,
                                       const ProposalConfig& cfg = {}) {
    if (cfg.max_rounds < 1 || cfg.markers_per_round < 1)
        throw std::invalid_argument("propose_location: bounds must be >= 1");

    auto session = backend.start_session(std::string("proposal:") + continent_code(continent) +
                                         ":" + difficulty_name(difficulty));
    Observation none;  // proposal prompts carry no rendered view
    std::vector<std::pair<std::string, std::string>> transcript;

    auto ask = [&](const std::string& prompt) {
        std::string reply = session->complete(prompt, none);
        transcript.emplace_back(prompt, reply);
        return reply;
    };

    char head[256];
    std::snprintf(head, sizeof(head),
                  "Propose a street-level location on continent %s at %s difficulty.\n"
                  "Reply with: PROPOSE <lat>,<lon> \"<one-line description>\"\n",
                  continent_code(continent), difficulty_name(difficulty));

    std::string stage1_prompt = head;
    detail::StageOneReply seed;
    {
        auto parsed = detail::parse_propose(ask(stage1_prompt));
        if (!parsed)
            parsed = detail::parse_propose(
                ask(stage1_prompt +
                    "\nYour previous reply was not parseable. Use exactly: PROPOSE "
                    "<lat>,<lon> \"<description>\"\n"));
        if (!parsed)
            throw ProposalFailed("proposal stage 1: unparseable reply", std::move(transcript));
        seed = *parsed;
    }

    for (int round = 1; round <= cfg.max_rounds; ++round) {
        const auto markers = provider.candidates(seed.seed, cfg.markers_per_round);
        const std::string tile = provider.tile_descriptor(seed.seed, markers);
        const std::string stage2_prompt =
            tile +
            "\nPick the marker that best matches your description, or reject the batch.\n"
            "Reply with: ACCEPT <marker number>   or   REJECT <reason>\n";

        std::string reply = ask(stage2_prompt);
        auto verdict = detail::parse_verdict(reply, static_cast<int>(markers.size()));
        if (!verdict) {
            reply = ask(stage2_prompt +
                        "\nYour previous reply was not parseable. Use exactly ACCEPT <n> or "
                        "REJECT <reason>.\n");
            verdict = detail::parse_verdict(reply, static_cast<int>(markers.size()));
            if (!verdict)
                throw ProposalFailed("proposal stage 2: unparseable reply",
                                     std::move(transcript));
        }
        if (*verdict > 0) {
            ProposalResult res;
            res.point = markers[static_cast<std::size_t>(*verdict - 1)].location;
            res.rationale = seed.description;
            res.rounds = round;
            res.transcript = std::move(transcript);
            return res;
        }
        // Rejected: regenerate the seed, unless this was the last round.
        if (round == cfg.max_rounds) break;
        auto parsed = detail::parse_propose(
            ask(std::string(head) + "\nThe previous batch was rejected. Propose a different "
                                    "location.\n"));
        if (!parsed)
            throw ProposalFailed("proposal stage 1 (regenerate): unparseable reply",
                                 std::move(transcript));
        seed = *parsed;
    }
    throw ProposalFailed("proposal: no marker accepted within the round bound",
                         std::move(transcript));
}

}  // namespace geoaot
