// The embodied environment: current-node-plus-heading state, the action
// vocabulary, the deterministic transition function, and the observation
// the agent is allowed to see. Observations never carry ground-truth
// coordinates or labels.
#pragma once

#include <algorithm>
#include <cstdio>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "geoaot/image.hpp"
#include "geoaot/nav_graph.hpp"
#include "geoaot/projection.hpp"

namespace geoaot {

struct RotateAction {
    double delta_deg = 0.0;  // signed, in (-360, 360)
    friend bool operator==(const RotateAction&, const RotateAction&) = default;
};
struct MoveAction {
    friend bool operator==(const MoveAction&, const MoveAction&) = default;
};
struct GuessAction {
    GeoPoint point;
    PlaceLabels labels;
    std::optional<double> confidence;  // [0, 1] when present
    friend bool operator==(const GuessAction&, const GuessAction&) = default;
};
struct StopAction {
    friend bool operator==(const StopAction&, const StopAction&) = default;
};

using Action = std::variant<RotateAction, MoveAction, GuessAction, StopAction>;

inline bool is_terminal_action(const Action& a) {
    return std::holds_alternative<GuessAction>(a) || std::holds_alternative<StopAction>(a);
}

struct EnvState {
    std::string graph_id;
    std::string node;
    double heading = 0.0;  // degrees, [0, 360)
    int turn = 0;
    friend bool operator==(const EnvState&, const EnvState&) = default;
};

// What the agent sees. view_ref identifies the rendered view
// deterministically; the image itself is attached only in rendered mode.
struct Observation {
    std::string view_ref;
    std::uint64_t view_hash = 0;
    std::optional<Image> view;
    int node_degree = 0;
    int turn = 0;
    double heading = 0.0;
    std::vector<double> edge_lengths_m;  // incident edge lengths, sorted
    bool move_failed = false;
};

// Among the neighbors of `node`, picks the one whose initial bearing is
// angularly closest to `heading`, if that difference is within the
// tolerance. Ties break toward the smaller node id.
inline std::optional<std::string> resolve_move(const NavGraph& g, const std::string& node,
                                               double heading, double tolerance_deg = 45.0) {
    const auto idx = g.index_of(node);
    if (!idx) throw std::invalid_argument("resolve_move: unknown node " + node);
    std::optional<std::string> best;
    double best_diff = 0.0;
    for (const auto& [nbr, edge] : g.neighbors(*idx)) {
        const double b = bearing_deg(g.node(*idx).location, g.node(nbr).location);
        const double diff = angular_diff_deg(b, heading);
        if (diff > tolerance_deg) continue;
        if (!best || diff < best_diff || (diff == best_diff && g.node(nbr).id < *best)) {
            best = g.node(nbr).id;
            best_diff = diff;
        }
    }
    return best;
}

struct ViewConfig {
    double fov_deg = 90.0;
    int width = 512;
    int height = 512;
    bool render = true;         // false: descriptor-only observations
    int synthetic_pano_width = 512;
};

struct StepResult {
    EnvState state;
    std::optional<Observation> observation;  // absent on terminal steps
    bool terminal = false;
};

// One navigable environment over an immutable graph. A pano source maps a
// node to its equirectangular image; by default the synthetic
// bearing-encoding pano stands in, so every graph is renderable without
// bundled imagery.
class Env {
public:
    using PanoSource = std::function<Image(const PanoNode&)>;

    explicit Env(const NavGraph& graph, ViewConfig view = {}, double move_tolerance_deg = 45.0,
                 PanoSource pano_source = nullptr)
        : graph_(graph), view_(view), move_tolerance_(move_tolerance_deg),
          pano_source_(std::move(pano_source)) {
        if (!graph.finalized()) throw std::invalid_argument("Env: graph not finalized");
    }

    const NavGraph& graph() const { return graph_; }
    const ViewConfig& view_config() const { return view_; }

    std::pair<EnvState, Observation> reset(std::optional<std::string> start = std::nullopt,
                                           double heading = 0.0) const {
        const std::string start_id = start.value_or(graph_.start_node());
        if (!graph_.index_of(start_id))
            throw std::invalid_argument("Env::reset: unknown start node " + start_id);
        EnvState s;
        s.graph_id = graph_.graph_id;
        s.node = start_id;
        s.heading = wrap_deg_360(heading);
        s.turn = 0;
        return {s, observe(s, false)};
    }

    StepResult step(const EnvState& state, const Action& action) const {
        const auto idx = graph_.index_of(state.node);
        if (!idx) throw std::invalid_argument("Env::step: unknown node " + state.node);

        StepResult res;
        res.state = state;
        res.state.turn = state.turn + 1;

        if (const auto* rot = std::get_if<RotateAction>(&action)) {
            if (!(rot->delta_deg > -360.0 && rot->delta_deg < 360.0))
                throw std::invalid_argument("Env::step: rotate delta outside (-360, 360)");
            res.state.heading = wrap_deg_360(state.heading + rot->delta_deg);
            res.observation = observe(res.state, false);
            return res;
        }
        if (std::holds_alternative<MoveAction>(action)) {
            const auto target = resolve_move(graph_, state.node, state.heading, move_tolerance_);
            if (target) {
                res.state.node = *target;
                res.observation = observe(res.state, false);
            } else {
                // A blocked move still consumes the turn.
                res.observation = observe(res.state, true);
            }
            return res;
        }
        res.terminal = true;
        return res;
    }

    // Renders what the agent sees at (node, heading). Deterministic.
    Observation observe(const EnvState& state, bool move_failed) const {
        const auto idx = graph_.index_of(state.node);
        const PanoNode& node = graph_.node(*idx);

        Observation obs;
        obs.turn = state.turn;
        obs.heading = state.heading;
        obs.node_degree = static_cast<int>(graph_.degree(*idx));
        obs.move_failed = move_failed;
        for (const auto& [nbr, e] : graph_.neighbors(*idx))
            obs.edge_lengths_m.push_back(graph_.edges()[e].length_m);
        std::sort(obs.edge_lengths_m.begin(), obs.edge_lengths_m.end());

        char buf[160];
        std::snprintf(buf, sizeof(buf), "view:%s:h%.1f:fov%.1f:%dx%d",
                      node.image_ref.empty() ? node.id.c_str() : node.image_ref.c_str(),
                      state.heading, view_.fov_deg, view_.width, view_.height);
        obs.view_ref = buf;

        if (view_.render) {
            const Image pano = pano_source_
                                   ? pano_source_(node)
                                   : make_bearing_pano(view_.synthetic_pano_width,
                                                       node.pano_heading_ref);
            const double yaw = state.heading - node.pano_heading_ref;
            Image v = render_view(pano, node.pano_heading_ref, yaw, 0.0, view_.fov_deg,
                                  view_.width, view_.height);
            obs.view_hash = image_hash(v);
            obs.view = std::move(v);
        }
        return obs;
    }

private:
    const NavGraph& graph_;
    ViewConfig view_;
    double move_tolerance_;
    PanoSource pano_source_;
};

}  // namespace geoaot
