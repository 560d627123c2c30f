// Grammar bridging free-form model text and environment actions.
//
// The model is asked to end its reply with a fenced block:
//
//   ```action
//   ROTATE +30
//   ```
//
// Commands (keywords case-insensitive, one per line):
//   ROTATE <signed degrees>            delta in (-360, 360)
//   MOVE                               trailing words ignored ("MOVE forward 10 meters")
//   GUESS <lat>,<lon> "<country[/city[/street]]>" [confidence]
//   STOP
//
// A GUESS line may precede a movement command inside the same block; it is
// then recorded as the current hypothesis while the movement is executed.
// A GUESS with no movement command is terminal. When no fenced block is
// present the parser falls back to scanning raw lines, keeping the last
// parseable command, so prose like "...therefore ROTATE +30" still works.
#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "geoaot/env.hpp"

namespace geoaot {

class ParseError : public std::runtime_error {
public:
    explicit ParseError(std::string raw)
        : std::runtime_error("no parseable action in model output"), raw_(std::move(raw)) {}
    const std::string& raw_text() const { return raw_; }

private:
    std::string raw_;
};

// An action plus the hypothesis attached to the same reply, if any. For a
// terminal GUESS both fields describe the same guess.
struct ParsedTurn {
    Action action;
    std::optional<GuessAction> guess;
};

namespace detail {

inline std::string_view trim_view(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline bool ieq_prefix(std::string_view s, std::string_view kw) {
    if (s.size() < kw.size()) return false;
    for (size_t i = 0; i < kw.size(); ++i)
        if (std::toupper(static_cast<unsigned char>(s[i])) != kw[i]) return false;
    // Keyword must end at a word boundary.
    return s.size() == kw.size() || !std::isalnum(static_cast<unsigned char>(s[kw.size()]));
}

// Finds the first position in `line` where one of the keywords starts at a
// word boundary. Returns npos if none.
inline size_t find_keyword(std::string_view line) {
    static constexpr std::string_view kws[] = {"ROTATE", "MOVE", "GUESS", "STOP"};
    for (size_t i = 0; i < line.size(); ++i) {
        if (i > 0 && std::isalnum(static_cast<unsigned char>(line[i - 1]))) continue;
        for (auto kw : kws)
            if (ieq_prefix(line.substr(i), kw)) return i;
    }
    return std::string_view::npos;
}

inline bool parse_double(std::string_view s, double& out, size_t& consumed) {
    std::string buf(s.substr(0, 64));
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end == buf.c_str() || !std::isfinite(v)) return false;
    out = v;
    consumed = static_cast<size_t>(end - buf.c_str());
    return true;
}

// Parses one command starting at the keyword. Returns nullopt when the line
// does not form a valid command.
inline std::optional<Action> parse_command(std::string_view s) {
    s = trim_view(s);
    if (ieq_prefix(s, "ROTATE")) {
        std::string_view rest = trim_view(s.substr(6));
        double delta;
        size_t used;
        if (!parse_double(rest, delta, used)) return std::nullopt;
        if (!(delta > -360.0 && delta < 360.0)) return std::nullopt;
        return Action{RotateAction{delta}};
    }
    if (ieq_prefix(s, "MOVE")) return Action{MoveAction{}};
    if (ieq_prefix(s, "STOP")) return Action{StopAction{}};
    if (ieq_prefix(s, "GUESS")) {
        std::string_view rest = trim_view(s.substr(5));
        double lat, lon;
        size_t used;
        if (!parse_double(rest, lat, used)) return std::nullopt;
        rest = trim_view(rest.substr(used));
        if (rest.empty() || rest.front() != ',') return std::nullopt;
        rest = trim_view(rest.substr(1));
        if (!parse_double(rest, lon, used)) return std::nullopt;
        rest = trim_view(rest.substr(used));
        if (rest.empty() || rest.front() != '"') return std::nullopt;
        const size_t close = rest.find('"', 1);
        if (close == std::string_view::npos) return std::nullopt;
        const std::string_view path = rest.substr(1, close - 1);
        rest = trim_view(rest.substr(close + 1));

        GuessAction g;
        try {
            g.point = GeoPoint{lat, lon};
        } catch (const std::invalid_argument&) {
            return std::nullopt;
        }
        // path = country[/city[/street]]
        std::vector<std::string> parts;
        size_t pos = 0;
        while (pos <= path.size()) {
            const size_t slash = path.find('/', pos);
            const size_t end = slash == std::string_view::npos ? path.size() : slash;
            parts.push_back(normalize_label(path.substr(pos, end - pos)));
            if (slash == std::string_view::npos) break;
            pos = slash + 1;
        }
        if (parts.empty() || parts.size() > 3 || parts[0].empty()) return std::nullopt;
        g.labels.country = parts[0];
        if (parts.size() > 1 && !parts[1].empty()) g.labels.city = parts[1];
        if (parts.size() > 2 && !parts[2].empty()) g.labels.street = parts[2];

        if (!rest.empty()) {
            double conf;
            if (!parse_double(rest, conf, used)) return std::nullopt;
            if (conf < 0.0 || conf > 1.0) return std::nullopt;
            g.confidence = conf;
        }
        return Action{g};
    }
    return std::nullopt;
}

// Pulls the contents of the last ```action fenced block, or of the last
// anonymous fenced block as a fallback. Empty when no block exists.
inline std::string_view fenced_block(std::string_view text) {
    auto extract = [&](std::string_view opener) -> std::string_view {
        const size_t open = text.rfind(opener);
        if (open == std::string_view::npos) return {};
        size_t body = text.find('\n', open);
        if (body == std::string_view::npos) return {};
        ++body;
        const size_t close = text.find("```", body);
        if (close == std::string_view::npos) return {};
        return text.substr(body, close - body);
    };
    if (auto b = extract("```action"); !b.empty()) return b;
    return extract("```");
}

}  // namespace detail

// Extracts the action (and any accompanying hypothesis) from raw model
// output. Throws ParseError, carrying the raw text, when nothing parses.
inline ParsedTurn parse_action(std::string_view text) {
    std::string_view region = detail::fenced_block(text);
    if (region.empty()) region = text;

    std::optional<Action> last_non_guess;
    std::optional<GuessAction> last_guess;

    size_t pos = 0;
    while (pos <= region.size()) {
        const size_t nl = region.find('\n', pos);
        const size_t end = nl == std::string_view::npos ? region.size() : nl;
        std::string_view line = region.substr(pos, end - pos);
        const size_t kw = detail::find_keyword(line);
        if (kw != std::string_view::npos) {
            if (auto act = detail::parse_command(line.substr(kw))) {
                if (const auto* g = std::get_if<GuessAction>(&*act))
                    last_guess = *g;
                else
                    last_non_guess = *act;
            }
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }

    if (last_non_guess) return {*last_non_guess, last_guess};
    if (last_guess) return {Action{*last_guess}, last_guess};
    throw ParseError(std::string(text));
}

// Canonical textual form of an action; parse_action inverts it exactly.
inline std::string serialize_action(const Action& a) {
    char buf[256];
    if (const auto* r = std::get_if<RotateAction>(&a)) {
        std::snprintf(buf, sizeof(buf), "ROTATE %+.17g", r->delta_deg);
        return buf;
    }
    if (std::holds_alternative<MoveAction>(a)) return "MOVE";
    if (std::holds_alternative<StopAction>(a)) return "STOP";
    const auto& g = std::get<GuessAction>(a);
    std::string path = g.labels.country;
    if (g.labels.city) path += "/" + *g.labels.city;
    if (g.labels.street) {
        if (!g.labels.city) path += "/";  // keep positional slots
        path += "/" + *g.labels.street;
    }
    std::snprintf(buf, sizeof(buf), "GUESS %.17g,%.17g \"%s\"", g.point.lat, g.point.lon,
                  path.c_str());
    std::string out = buf;
    if (g.confidence) {
        std::snprintf(buf, sizeof(buf), " %.17g", *g.confidence);
        out += buf;
    }
    return out;
}

}  // namespace geoaot
