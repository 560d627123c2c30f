#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "geoaot/dataset.hpp"
#include "geoaot/env.hpp"

using namespace geoaot;

namespace {

const NavGraph& paris_line() {
    static const LoadedDataset ds = load_dataset(GEOAOT_FIXTURE_DIR "/wb-mini");
    return ds.graphs[0];  // wb-paris-line, start p10, east-west chain
}

const NavGraph& tokyo_loop() {
    static const LoadedDataset ds = load_dataset(GEOAOT_FIXTURE_DIR "/wb-mini");
    return ds.graphs[1];
}

ViewConfig small_views() {
    ViewConfig v;
    v.width = 33;
    v.height = 33;
    v.synthetic_pano_width = 128;
    return v;
}

}  // namespace

TEST_CASE("reset starts at the graph's start node with wrapped heading") {
    const Env env(paris_line(), small_views());
    const auto [s, obs] = env.reset();
    CHECK(s.graph_id == "wb-paris-line");
    CHECK(s.node == "p10");
    CHECK(s.heading == 0.0);
    CHECK(s.turn == 0);
    CHECK(obs.node_degree == 2);
    CHECK(obs.turn == 0);

    const auto [s2, obs2] = env.reset("p03", -90.0);
    CHECK(s2.node == "p03");
    CHECK(s2.heading == 270.0);
    CHECK_THROWS_AS(env.reset("nope"), std::invalid_argument);

    NavGraph unfinalized;
    CHECK_THROWS_AS(Env(unfinalized), std::invalid_argument);
}

TEST_CASE("observations never expose location or labels") {
    const Env env(paris_line(), small_views());
    const auto [s, obs] = env.reset();
    // The observation type carries a view, degree, heading, turn and edge
    // lengths; the view_ref names the node id only because fixture nodes
    // have no image files. It must not leak label text or coordinates.
    CHECK(obs.view_ref.find("france") == std::string::npos);
    CHECK(obs.view_ref.find("48.8") == std::string::npos);
    CHECK(obs.edge_lengths_m.size() == 2);
    CHECK(obs.edge_lengths_m[0] == Catch::Approx(29.26).margin(0.05));
    CHECK(std::is_sorted(obs.edge_lengths_m.begin(), obs.edge_lengths_m.end()));
}

TEST_CASE("rotate wraps the heading and consumes a turn") {
    const Env env(paris_line(), small_views());
    auto [s, obs] = env.reset();
    const StepResult r = env.step(s, RotateAction{-90.0});
    CHECK(r.state.heading == 270.0);
    CHECK(r.state.turn == 1);
    CHECK(r.state.node == "p10");
    CHECK_FALSE(r.terminal);
    REQUIRE(r.observation.has_value());
    CHECK(r.observation->turn == 1);

    const StepResult r2 = env.step(r.state, RotateAction{135.0});
    CHECK(r2.state.heading == 45.0);

    CHECK_THROWS_AS(env.step(s, RotateAction{360.0}), std::invalid_argument);
    CHECK_THROWS_AS(env.step(s, RotateAction{-400.0}), std::invalid_argument);
}

TEST_CASE("move follows the nearest in-tolerance street") {
    const NavGraph& g = paris_line();
    // The chain runs west-east; from p10, east is ~90 deg, west ~270 deg.
    CHECK(resolve_move(g, "p10", 90.0) == "p11");
    CHECK(resolve_move(g, "p10", 270.0) == "p09");
    // Tolerance is inclusive: a street 44.9998 deg off still resolves.
    CHECK(resolve_move(g, "p10", 45.0) == "p11");
    // Facing north, both streets sit ~90 deg away: out of tolerance.
    CHECK(resolve_move(g, "p10", 0.0) == std::nullopt);
    CHECK(resolve_move(g, "p10", 0.0, 90.0).has_value());  // wider tolerance
    CHECK_THROWS_AS(resolve_move(g, "nope", 0.0), std::invalid_argument);

    // Exact bearing ties (coincident neighbor locations) break to the
    // smaller node id.
    NavGraph tie;
    auto add = [&](const char* id, double lat, double lon) {
        PanoNode n;
        n.id = id;
        n.location = GeoPoint{lat, lon};
        n.labels = PlaceLabels::make(std::nullopt, std::nullopt, "x", Continent::Europe);
        tie.add_node(std::move(n));
    };
    add("a", 48.0, 2.0);
    add("c", 48.001, 2.0);
    add("b", 48.001, 2.0);  // same spot as c
    tie.add_edge("a", "b");
    tie.add_edge("a", "c");
    tie.set_start("a");
    tie.finalize();
    CHECK(resolve_move(tie, "a", 0.0) == "b");

    const Env env(g, small_views());
    auto [s, obs] = env.reset();  // heading 0: nothing within 45 deg
    const StepResult blocked = env.step(s, MoveAction{});
    CHECK(blocked.state.node == "p10");
    CHECK(blocked.state.turn == 1);  // blocked moves still consume the turn
    REQUIRE(blocked.observation.has_value());
    CHECK(blocked.observation->move_failed);

    const StepResult east = env.step(env.step(s, RotateAction{90.0}).state, MoveAction{});
    CHECK(east.state.node == "p11");
    CHECK_FALSE(east.observation->move_failed);
}

TEST_CASE("guess and stop are terminal and produce no observation") {
    const Env env(paris_line(), small_views());
    auto [s, obs] = env.reset();
    const StepResult stop = env.step(s, StopAction{});
    CHECK(stop.terminal);
    CHECK_FALSE(stop.observation.has_value());

    GuessAction guess;
    guess.point = GeoPoint{48.85, 2.35};
    guess.labels = PlaceLabels::make(std::nullopt, "Paris", "France", Continent::Europe);
    const StepResult done = env.step(s, guess);
    CHECK(done.terminal);
    CHECK(is_terminal_action(guess));
    CHECK_FALSE(is_terminal_action(RotateAction{10}));
    CHECK_FALSE(is_terminal_action(MoveAction{}));
}

TEST_CASE("views are deterministic and heading-dependent") {
    const Env env(paris_line(), small_views());
    const auto [s, obs_a] = env.reset();
    const auto [s2, obs_b] = env.reset();
    CHECK(obs_a.view_hash == obs_b.view_hash);
    CHECK(obs_a.view_ref == obs_b.view_ref);
    REQUIRE(obs_a.view.has_value());
    CHECK(obs_a.view->width == 33);

    const StepResult rot = env.step(s, RotateAction{90.0});
    CHECK(rot.observation->view_hash != obs_a.view_hash);
    CHECK(rot.observation->view_ref != obs_a.view_ref);
}

TEST_CASE("rendered view faces the agent heading regardless of pano orientation") {
    // Tokyo nodes have varying pano_heading_ref; the rendered center
    // column must still face the agent's absolute heading.
    const Env env(tokyo_loop(), small_views());
    for (const char* node : {"t00", "t05", "t13"}) {
        for (double heading : {0.0, 77.0, 200.0}) {
            const auto [s, obs] = env.reset(node, heading);
            REQUIRE(obs.view.has_value());
            const double decoded = decode_bearing(*obs.view, 16, 16);
            CHECK(angular_diff_deg(decoded, heading) < 1.0);
        }
    }
}

TEST_CASE("descriptor-only mode skips rendering") {
    ViewConfig v = small_views();
    v.render = false;
    const Env env(paris_line(), v);
    const auto [s, obs] = env.reset();
    CHECK_FALSE(obs.view.has_value());
    CHECK(obs.view_hash == 0);
    CHECK(!obs.view_ref.empty());
}

TEST_CASE("a custom pano source replaces the synthetic imagery") {
    bool called = false;
    Env::PanoSource src = [&](const PanoNode& n) {
        called = true;
        return make_bearing_pano(64, n.pano_heading_ref);
    };
    const Env env(paris_line(), small_views(), 45.0, src);
    const auto [s, obs] = env.reset();
    CHECK(called);
    REQUIRE(obs.view.has_value());
}

TEST_CASE("replaying an action script reproduces states and hashes") {
    const Env env(paris_line(), small_views());
    const std::vector<Action> script{RotateAction{90}, MoveAction{}, MoveAction{},
                                     RotateAction{180}, MoveAction{}, RotateAction{-45},
                                     RotateAction{45}, MoveAction{}, MoveAction{},
                                     RotateAction{30}};
    auto run_once = [&] {
        std::vector<EnvState> states;
        std::vector<std::uint64_t> hashes;
        auto [s, obs] = env.reset();
        states.push_back(s);
        hashes.push_back(obs.view_hash);
        for (const Action& a : script) {
            const StepResult r = env.step(s, a);
            s = r.state;
            states.push_back(s);
            if (r.observation) hashes.push_back(r.observation->view_hash);
        }
        return std::pair{states, hashes};
    };
    const auto [states1, hashes1] = run_once();
    const auto [states2, hashes2] = run_once();
    CHECK(states1 == states2);
    CHECK(hashes1 == hashes2);
    // The script walks east twice, back west once, then west twice more.
    CHECK(states1.back().node == "p09");
}

TEST_CASE("random walks always land on graph neighbors") {
    const NavGraph& g = tokyo_loop();
    const Env env(g, small_views());
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> rot(-180.0, 180.0);
    auto [s, obs] = env.reset();
    for (int i = 0; i < 300; ++i) {
        if (rng() % 2 == 0) {
            const StepResult r = env.step(s, RotateAction{rot(rng)});
            s = r.state;
        } else {
            const std::string before = s.node;
            const StepResult r = env.step(s, MoveAction{});
            REQUIRE(r.observation.has_value());
            if (!r.observation->move_failed) {
                const auto bi = g.index_of(before);
                const auto ai = g.index_of(r.state.node);
                CHECK(g.has_edge(*bi, *ai));
            } else {
                CHECK(r.state.node == before);
            }
            s = r.state;
        }
    }
}
