// Per-turn prompt assembly. The prompt is a pure function of the
// observation and the accumulated transcript, so identical inputs yield
// byte-identical prompts. Ground truth never appears here: the observation
// type itself carries none.
#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "geoaot/action_grammar.hpp"
#include "geoaot/env.hpp"

namespace geoaot {

// One completed agent turn: what the model saw, what it wrote, what we did.
struct AgentTurn {
    std::string observation_ref;
    std::string node;       // environment node the observation came from
    double heading = 0.0;   // heading at observation time
    std::string reasoning_text;
    std::optional<GuessAction> guess;  // hypothesis carried by this turn, if any
    Action action;
};

namespace detail {

inline const char* kStageInstructions =
    "Work through these four stages each turn:\n"
    "(i) analyze the visible geographical and cultural cues;\n"
    "(ii) identify missing or ambiguous evidence;\n"
    "(iii) propose an environmental action to reduce uncertainty;\n"
    "(iv) update your geolocation hypothesis.\n";

inline const char* kGrammarHelp =
    "Finish your reply with exactly one fenced block:\n"
    "```action\n"
    "<COMMAND>\n"
    "```\n"
    "Commands:\n"
    "  ROTATE <signed degrees>    turn in place; degrees strictly between -360 and 360\n"
    "  MOVE                       advance along the street closest to your heading\n"
    "  GUESS <lat>,<lon> \"<country[/city[/street]]>\" [confidence 0-1]\n"
    "  STOP                       end the episode with your last hypothesis\n"
    "A GUESS line placed before MOVE or ROTATE records your working hypothesis and the\n"
    "episode continues; a GUESS on its own ends the episode.\n";

}  // namespace detail

inline std::string describe_observation(const Observation& obs) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "Current view: %s; heading %.1f deg; %d street(s) meet here",
                  obs.view_ref.c_str(), obs.heading, obs.node_degree);
    std::string s = buf;
    if (!obs.edge_lengths_m.empty()) {
        s += " (lengths m:";
        for (size_t i = 0; i < obs.edge_lengths_m.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s %.1f", i ? "," : "", obs.edge_lengths_m[i]);
            s += buf;
        }
        s += ")";
    }
    if (obs.move_failed) s += "; your last MOVE failed: no street within the heading tolerance";
    s += ".";
    return s;
}

inline std::string build_prompt(const Observation& obs, const std::vector<AgentTurn>& history,
                                bool grammar_reminder = false) {
    std::string p;
    p += "You are standing in a street-level panorama and must work out where on Earth you "
         "are. You can look around, walk along the streets, and commit to a final location.\n\n";
    p += detail::kStageInstructions;
    p += "\n";
    p += detail::kGrammarHelp;
    p += "\nHistory:\n";
    if (history.empty()) {
        p += "  (none)\n";
    } else {
        for (size_t i = 0; i < history.size(); ++i) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "  turn %zu [%s]\n", i,
                          history[i].observation_ref.c_str());
            p += buf;
            p += "    " + history[i].reasoning_text + "\n";
            p += "    action taken: " + serialize_action(history[i].action) + "\n";
        }
    }
    p += "\n" + describe_observation(obs) + "\n";
    if (grammar_reminder)
        p += "\nYour previous reply contained no valid command. Reply again and end with one "
             "fenced ```action block exactly as specified above.\n";
    p += "\nYour reply:";
    return p;
}

}  // namespace geoaot
