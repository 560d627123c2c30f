#include <catch2/catch_amalgamated.hpp>

#include <cctype>
#include <cmath>
#include <utility>
#include <vector>

#include "geoaot/consensus.hpp"
#include "geoaot/dataset.hpp"

using namespace geoaot;

namespace {

// Asymmetric L-shaped chain; asymmetry pins the canonical orientation.
PlanarPositions l_shape() {
    PlanarPositions pos;
    pos.xy = {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {3, 1}};
    pos.start_index = 0;
    return pos;
}

std::vector<std::pair<std::size_t, std::size_t>> chain_edges(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
    return e;
}

PlanarPositions transform(const PlanarPositions& in, double theta, double scale, double tx,
                          double ty, bool mirror_y) {
    PlanarPositions out;
    out.start_index = in.start_index;
    const double c = std::cos(theta), s = std::sin(theta);
    for (auto [x, y] : in.xy) {
        if (mirror_y) y = -y;
        out.xy.push_back({scale * (c * x - s * y) + tx, scale * (s * x + c * y) + ty});
    }
    return out;
}

double max_position_diff(const NormalizedGraph& a, const NormalizedGraph& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.positions.size(); ++i) {
        m = std::max(m, std::fabs(a.positions[i].first - b.positions[i].first));
        m = std::max(m, std::fabs(a.positions[i].second - b.positions[i].second));
    }
    return m;
}

NavGraph tiny_graph(double lat0, double lon0) {
    NavGraph g;
    auto add = [&](const char* id, double dlat, double dlon) {
        PanoNode n;
        n.id = id;
        n.location = GeoPoint{lat0 + dlat, lon0 + dlon};
        n.labels = PlaceLabels::make(std::nullopt, std::nullopt, "x", Continent::Europe);
        g.add_node(std::move(n));
    };
    add("a", 0.0, 0.0);
    add("b", 0.0, 0.0004);
    add("c", 0.0003, 0.0004);
    g.add_edge("a", "b");
    g.add_edge("b", "c");
    g.set_start("a");
    g.finalize();
    return g;
}

}  // namespace

TEST_CASE("local projection puts the start at the origin with east-north axes") {
    const NavGraph g = tiny_graph(48.0, 2.0);
    const PlanarPositions pos = project_local(g);
    REQUIRE(pos.xy.size() == 3);
    CHECK(pos.xy[0].first == Catch::Approx(0.0).margin(1e-9));
    CHECK(pos.xy[0].second == Catch::Approx(0.0).margin(1e-9));
    // b is due east of a: positive x, ~zero y.
    CHECK(pos.xy[1].first > 0.0);
    CHECK(pos.xy[1].second == Catch::Approx(0.0).margin(1e-6));
    // c is north of b: positive y.
    CHECK(pos.xy[2].second > 0.0);
    // Planar edge length close to the haversine length at this scale.
    const double planar = std::hypot(pos.xy[1].first, pos.xy[1].second);
    const double sphere = haversine_km(g.node(0).location, g.node(1).location) * 1000.0;
    CHECK(planar == Catch::Approx(sphere).epsilon(1e-5));
}

TEST_CASE("local projection rejects graphs spanning over 100 km") {
    NavGraph g;
    auto add = [&](const char* id, double lat, double lon) {
        PanoNode n;
        n.id = id;
        n.location = GeoPoint{lat, lon};
        n.labels = PlaceLabels::make(std::nullopt, std::nullopt, "x", Continent::Europe);
        g.add_node(std::move(n));
    };
    add("a", 48.0, 2.0);
    add("b", 49.5, 2.0);  // ~167 km north
    g.add_edge("a", "b");
    g.set_start("a");
    g.finalize();
    CHECK_THROWS_AS(project_local(g), std::invalid_argument);
}

TEST_CASE("normalization: origin, unit median edge, principal axis on x") {
    const auto ng = normalize_graph(l_shape(), chain_edges(5));
    // Start node at the origin.
    CHECK(ng.positions[0].first == Catch::Approx(0.0).margin(1e-12));
    CHECK(ng.positions[0].second == Catch::Approx(0.0).margin(1e-12));
    CHECK(ng.scale_used == Catch::Approx(1.0));

    // Median of normalized edge lengths is 1 by construction.
    std::vector<double> lens;
    for (const auto& [a, b] : ng.edges)
        lens.push_back(std::hypot(ng.positions[a].first - ng.positions[b].first,
                                  ng.positions[a].second - ng.positions[b].second));
    std::sort(lens.begin(), lens.end());
    CHECK(lens[lens.size() / 2] == Catch::Approx(1.0).margin(1e-12));

    // Principal component on the x axis: x spread dominates y spread.
    double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
    for (const auto& [x, y] : ng.positions) {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
    }
    CHECK(max_x - min_x > max_y - min_y);
}

TEST_CASE("normalization cancels translation, rotation, scale and reflection") {
    const auto base = normalize_graph(l_shape(), chain_edges(5));
    const struct {
        double theta, scale, tx, ty;
        bool mirror;
    } cases[] = {
        {0.7, 3.0, 100.0, -40.0, false},
        {-2.1, 0.25, -7.0, 13.0, false},
        {1.234, 5.5, 0.0, 0.0, true},  // mirrored copy lands on the same form
        {3.14, 1.0, 2.0, 2.0, true},
    };
    for (const auto& tc : cases) {
        const auto moved = transform(l_shape(), tc.theta, tc.scale, tc.tx, tc.ty, tc.mirror);
        const auto ng = normalize_graph(moved, chain_edges(5));
        CHECK(max_position_diff(base, ng) < 1e-9);
        CHECK(ng.scale_used == Catch::Approx(tc.scale).epsilon(1e-9));
    }
}

TEST_CASE("normalization input validation") {
    PlanarPositions one;
    one.xy = {{0, 0}};
    CHECK_THROWS_AS(normalize_graph(one, {}), std::invalid_argument);
    PlanarPositions two;
    two.xy = {{0, 0}, {1, 0}};
    CHECK_THROWS_AS(normalize_graph(two, {}), std::invalid_argument);
    PlanarPositions coincident;
    coincident.xy = {{0, 0}, {0, 0}};
    CHECK_THROWS_AS(normalize_graph(coincident, {{0, 1}}), std::invalid_argument);
}

TEST_CASE("polar binning: radial rings and angular sectors") {
    NormalizedGraph ng;
    // Radii 0, 0.5, 1, 2; angles 0, 90, 180 degrees.
    ng.positions = {{0, 0}, {0.5, 0}, {0, 1}, {-2, 0}};
    ng.edges = {{0, 1}, {1, 2}, {2, 3}};
    const PolarHistogram h = polar_bin(ng, 4, 4, 1.0);  // r_max = max radius = 2
    CHECK(h.r_max == Catch::Approx(2.0));
    CHECK(h.node_at(0, 0) == 1);  // origin: ring 0, sector 0 by convention
    CHECK(h.node_at(1, 0) == 1);  // r=0.5 -> ring floor(4*0.25)=1, angle 0 -> sector 0
    CHECK(h.node_at(2, 1) == 1);  // r=1 -> ring 2; angle 90 deg -> sector 1
    CHECK(h.node_at(3, 2) == 1);  // r=2 clamps into the last ring; angle 180 -> sector 2

    std::uint64_t total = 0;
    for (auto c : h.node_counts) total += c;
    CHECK(total == 4);

    // Every edge contributes symmetrically: edge {1,2} spans bins (1,0)-(2,1).
    const int b_a = 1 * 4 + 0, b_b = 2 * 4 + 1;
    CHECK(h.edge_at(b_a, b_b) == 1);
    CHECK(h.edge_at(b_b, b_a) == 1);
    CHECK_THROWS_AS(polar_bin(ng, 0, 4), std::invalid_argument);
}

TEST_CASE("shared r_max overrides the per-graph percentile") {
    NormalizedGraph ng;
    ng.positions = {{0, 0}, {1, 0}};
    ng.edges = {{0, 1}};
    const PolarHistogram own = polar_bin(ng, 6, 8, 0.99);
    CHECK(own.r_max == Catch::Approx(1.0));
    const PolarHistogram shared = polar_bin(ng, 6, 8, 0.99, 4.0);
    CHECK(shared.r_max == 4.0);
    // Under the larger radius the far node drops from ring 5 to ring 1.
    CHECK(own.node_at(5, 0) == 1);
    CHECK(shared.node_at(1, 0) == 1);
}

TEST_CASE("aggregation pools all graphs under one shared radius") {
    const LoadedDataset ds = load_dataset(GEOAOT_FIXTURE_DIR "/wb-mini");
    const PolarHistogram h = aggregate_consensus(ds.graphs);
    std::uint64_t node_total = 0;
    for (auto c : h.node_counts) node_total += c;
    std::size_t expect_nodes = 0;
    for (const auto& g : ds.graphs) expect_nodes += g.node_count();
    CHECK(node_total == expect_nodes);
    CHECK(h.r_max > 0.0);

    // Doubling the input doubles every bin exactly.
    std::vector<NavGraph> twice = ds.graphs;
    for (const auto& g : ds.graphs) twice.push_back(g);
    const PolarHistogram h2 = aggregate_consensus(twice);
    CHECK(h2.r_max == Catch::Approx(h.r_max));
    REQUIRE(h2.node_counts.size() == h.node_counts.size());
    for (std::size_t i = 0; i < h.node_counts.size(); ++i)
        CHECK(h2.node_counts[i] == 2 * h.node_counts[i]);
    for (std::size_t i = 0; i < h.edge_counts.size(); ++i)
        CHECK(h2.edge_counts[i] == 2 * h.edge_counts[i]);

    // Input order does not matter.
    std::vector<NavGraph> rev(ds.graphs.rbegin(), ds.graphs.rend());
    const PolarHistogram hr = aggregate_consensus(rev);
    CHECK(hr.node_counts == h.node_counts);
    CHECK(hr.edge_counts == h.edge_counts);
}

TEST_CASE("CSV matrices carry every nonzero bin") {
    const LoadedDataset ds = load_dataset(GEOAOT_FIXTURE_DIR "/wb-mini");
    const PolarHistogram h = aggregate_consensus(ds.graphs);

    const std::string nodes = node_counts_csv(h);
    CHECK(nodes.rfind("radial_bin,angular_bin,count\n", 0) == 0);
    // One line per bin plus the header.
    CHECK(std::count(nodes.begin(), nodes.end(), '\n') == 1 + 6 * 8);

    const std::string edges = edge_counts_csv(h);
    CHECK(edges.rfind("bin_a,bin_b,count\n", 0) == 0);
    CHECK(edges.find("\n0,") != std::string::npos);
}

TEST_CASE("SVG rendering is deterministic and structurally sane") {
    const LoadedDataset ds = load_dataset(GEOAOT_FIXTURE_DIR "/wb-mini");
    const PolarHistogram h = aggregate_consensus(ds.graphs);
    const std::string a = consensus_svg(h);
    const std::string b = consensus_svg(h);
    CHECK(a == b);  // byte-identical
    CHECK(a.rfind("<svg ", 0) == 0);
    CHECK(a.find("</svg>") != std::string::npos);
    CHECK(a.find("<circle") != std::string::npos);
    CHECK(a.find("<line") != std::string::npos);
    // Fixed-precision coordinates only: "e-" after a digit would mean a
    // scientific-notation number leaked through ("stroke-width" is fine).
    for (std::size_t p = a.find("e-"); p != std::string::npos; p = a.find("e-", p + 1))
        CHECK_FALSE((p > 0 && std::isdigit(static_cast<unsigned char>(a[p - 1]))));
}
