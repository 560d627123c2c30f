// Cross-location "average graph": per-graph normalization (center at the
// start node, scale by median edge length, PCA-align the principal axis),
// polar discretization, and accumulation of node/edge bin frequencies.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geoaot/nav_graph.hpp"

namespace geoaot {

struct PlanarPositions {
    std::vector<std::pair<double, double>> xy;  // meters, start node at (0, 0)
    std::size_t start_index = 0;
};

// Equirectangular local projection about the start node:
// x = R * dlon * cos(lat0), y = R * dlat (radians to meters). Valid for
// local graphs only; the pairwise diameter must stay under 100 km.
inline PlanarPositions project_local(const NavGraph& g) {
    const auto start_idx = g.index_of(g.start_node());
    if (!start_idx) throw std::invalid_argument("project_local: start node missing");
    const GeoPoint origin = g.node(*start_idx).location;

    for (std::size_t i = 0; i < g.node_count(); ++i)
        for (std::size_t j = i + 1; j < g.node_count(); ++j)
            if (haversine_km(g.node(i).location, g.node(j).location) >= 100.0)
                throw std::invalid_argument("project_local: graph diameter exceeds 100 km");

    PlanarPositions out;
    out.start_index = *start_idx;
    out.xy.reserve(g.node_count());
    const double R_m = kEarthRadiusKm * 1000.0;
    const double cos_lat0 = std::cos(deg2rad(origin.lat));
    for (const PanoNode& n : g.nodes()) {
        const double dlon = deg2rad(wrap_lon(n.location.lon - origin.lon));
        const double dlat = deg2rad(n.location.lat - origin.lat);
        out.xy.push_back({R_m * dlon * cos_lat0, R_m * dlat});
    }
    return out;
}

struct NormalizedGraph {
    std::vector<std::pair<double, double>> positions;  // start at (0,0), unit median edge
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    double scale_used = 0.0;     // meters per normalized unit
    double rotation_used = 0.0;  // radians applied to reach the canonical frame
};

namespace detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline double third_central_moment(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double m3 = 0.0;
    for (double x : v) m3 += (x - mean) * (x - mean) * (x - mean);
    return m3;
}

}  // namespace detail

// Canonical similarity-normalized form: translate the start node to the
// origin, divide by the median planar edge length, rotate the first
// principal component onto the x axis. The residual orientation freedom
// is fixed by non-negative third central moments, first along x (which
// picks one of the two axis directions) and then along y (which picks
// between a shape and its mirror, so reflected inputs land on the same
// canonical form). Exactly-zero moments keep the positive convention.
inline NormalizedGraph normalize_graph(
    const PlanarPositions& pos,
    const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    if (pos.xy.size() < 2)
        throw std::invalid_argument("normalize_graph: need at least 2 nodes");
    if (edges.empty()) throw std::invalid_argument("normalize_graph: need at least 1 edge");

    const auto [sx, sy] = pos.xy[pos.start_index];
    std::vector<std::pair<double, double>> p;
    p.reserve(pos.xy.size());
    for (const auto& [x, y] : pos.xy) p.push_back({x - sx, y - sy});

    std::vector<double> lengths;
    lengths.reserve(edges.size());
    for (const auto& [a, b] : edges)
        lengths.push_back(std::hypot(p[a].first - p[b].first, p[a].second - p[b].second));
    const double med = detail::median(lengths);
    if (med <= 0.0)
        throw std::invalid_argument("normalize_graph: zero median edge length");
    for (auto& [x, y] : p) {
        x /= med;
        y /= med;
    }

    // 2x2 PCA over the node cloud.
    const double n = static_cast<double>(p.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : p) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (const auto& [x, y] : p) {
        cxx += (x - mx) * (x - mx);
        cxy += (x - mx) * (y - my);
        cyy += (y - my) * (y - my);
    }
    cxx /= n;
    cxy /= n;
    cyy /= n;

    const double tr_half = (cxx + cyy) / 2.0;
    const double disc = std::sqrt((cxx - cyy) * (cxx - cyy) / 4.0 + cxy * cxy);
    const double lambda1 = tr_half + disc, lambda2 = tr_half - disc;

    double theta = 0.0;
    const double degen_tol = 1e-12 * std::max(lambda1, 1.0);
    if (lambda1 - lambda2 > degen_tol)
        theta = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);

    NormalizedGraph ng;
    ng.scale_used = med;
    ng.rotation_used = -theta;
    ng.edges = edges;
    ng.positions.reserve(p.size());
    const double c = std::cos(-theta), s = std::sin(-theta);
    for (const auto& [x, y] : p)
        ng.positions.push_back({c * x - s * y, s * x + c * y});

    std::vector<double> xs, ys;
    xs.reserve(p.size());
    ys.reserve(p.size());
    for (const auto& [x, y] : ng.positions) {
        xs.push_back(x);
        ys.push_back(y);
    }
    if (detail::third_central_moment(xs) < 0.0) {
        for (auto& [x, y] : ng.positions) {
            x = -x;
            y = -y;
        }
        for (auto& v : ys) v = -v;
        ng.rotation_used += kPi;
    }
    if (detail::third_central_moment(ys) < 0.0)
        for (auto& [x, y] : ng.positions) y = -y;
    return ng;
}

struct PolarHistogram {
    int radial_bins = 6;
    int angular_bins = 8;
    double r_max = 0.0;  // radius covering the configured percentile
    std::vector<std::uint64_t> node_counts;  // radial-major, R*A entries
    std::vector<std::uint64_t> edge_counts;  // (R*A) x (R*A), symmetric

    std::uint64_t& node_at(int r, int a) { return node_counts[r * angular_bins + a]; }
    std::uint64_t node_at(int r, int a) const { return node_counts[r * angular_bins + a]; }
    std::uint64_t& edge_at(int b1, int b2) {
        return edge_counts[b1 * radial_bins * angular_bins + b2];
    }
    std::uint64_t edge_at(int b1, int b2) const {
        return edge_counts[b1 * radial_bins * angular_bins + b2];
    }
};

namespace detail {

// Nearest-rank percentile of radii; deterministic for any input order.
inline double radius_percentile(std::vector<double> radii, double percentile) {
    std::sort(radii.begin(), radii.end());
    const std::size_t n = radii.size();
    std::size_t idx = static_cast<std::size_t>(
        std::ceil(percentile * static_cast<double>(n)));
    if (idx > 0) --idx;
    if (idx >= n) idx = n - 1;
    return radii[idx];
}

inline int polar_bin_index(double x, double y, int R, int A, double r_max) {
    const double r = std::hypot(x, y);
    int rb = 0;
    if (r_max > 0.0)
        rb = std::clamp(static_cast<int>(std::floor(static_cast<double>(R) * r / r_max)), 0,
                        R - 1);
    double theta = 0.0;
    if (r > 0.0) {
        theta = std::atan2(y, x);
        if (theta < 0.0) theta += 2.0 * kPi;
    }
    const int ab = std::clamp(
        static_cast<int>(std::floor(static_cast<double>(A) * theta / (2.0 * kPi))), 0, A - 1);
    return rb * A + ab;
}

inline void accumulate(PolarHistogram& h, const NormalizedGraph& ng) {
    std::vector<int> bin_of(ng.positions.size());
    for (std::size_t i = 0; i < ng.positions.size(); ++i) {
        bin_of[i] = polar_bin_index(ng.positions[i].first, ng.positions[i].second,
                                    h.radial_bins, h.angular_bins, h.r_max);
        h.node_counts[bin_of[i]]++;
    }
    for (const auto& [a, b] : ng.edges) {
        const int ba = bin_of[a], bb = bin_of[b];
        h.edge_at(ba, bb)++;
        if (ba != bb) h.edge_at(bb, ba)++;
    }
}

}  // namespace detail

// Histogram of a single normalized graph. r_max defaults to the given
// percentile of this graph's own node radii; pass an explicit r_max to
// share a policy across graphs.
inline PolarHistogram polar_bin(const NormalizedGraph& ng, int radial_bins = 6,
                                int angular_bins = 8, double percentile = 0.99,
                                std::optional<double> shared_r_max = std::nullopt) {
    if (radial_bins < 1 || angular_bins < 1)
        throw std::invalid_argument("polar_bin: bin counts must be >= 1");
    PolarHistogram h;
    h.radial_bins = radial_bins;
    h.angular_bins = angular_bins;
    h.node_counts.assign(static_cast<std::size_t>(radial_bins) * angular_bins, 0);
    h.edge_counts.assign(static_cast<std::size_t>(radial_bins) * angular_bins *
                             radial_bins * angular_bins,
                         0);
    if (shared_r_max) {
        h.r_max = *shared_r_max;
    } else {
        std::vector<double> radii;
        radii.reserve(ng.positions.size());
        for (const auto& [x, y] : ng.positions) radii.push_back(std::hypot(x, y));
        h.r_max = detail::radius_percentile(std::move(radii), percentile);
    }
    detail::accumulate(h, ng);
    return h;
}

// Normalizes every graph and accumulates the histograms under one shared
// r_max (the global percentile of all node radii), so counts from
// different graphs land in comparable bins. Summation commutes, so the
// result does not depend on input order.
inline PolarHistogram aggregate_consensus(const std::vector<NavGraph>& graphs,
                                          int radial_bins = 6, int angular_bins = 8,
                                          double percentile = 0.99) {
    if (graphs.empty()) throw std::invalid_argument("aggregate_consensus: no graphs");
    std::vector<NormalizedGraph> normalized;
    normalized.reserve(graphs.size());
    std::vector<double> all_radii;
    for (const NavGraph& g : graphs) {
        const PlanarPositions pos = project_local(g);
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        edges.reserve(g.edge_count());
        for (const NavEdge& e : g.edges()) edges.push_back({e.a, e.b});
        NormalizedGraph ng = normalize_graph(pos, edges);
        for (const auto& [x, y] : ng.positions) all_radii.push_back(std::hypot(x, y));
        normalized.push_back(std::move(ng));
    }
    const double r_max = detail::radius_percentile(std::move(all_radii), percentile);

    PolarHistogram total;
    total.radial_bins = radial_bins;
    total.angular_bins = angular_bins;
    total.r_max = r_max;
    total.node_counts.assign(static_cast<std::size_t>(radial_bins) * angular_bins, 0);
    total.edge_counts.assign(static_cast<std::size_t>(radial_bins) * angular_bins *
                                 radial_bins * angular_bins,
                             0);
    for (const NormalizedGraph& ng : normalized) detail::accumulate(total, ng);
    return total;
}

// ---------------------------------------------------------------------------
// Emission: CSV matrices and a deterministic SVG (circle radius grows with
// node count, stroke width with edge transition count).

inline std::string node_counts_csv(const PolarHistogram& h) {
    std::string out = "radial_bin,angular_bin,count\n";
    char buf[64];
    for (int r = 0; r < h.radial_bins; ++r)
        for (int a = 0; a < h.angular_bins; ++a) {
            std::snprintf(buf, sizeof(buf), "%d,%d,%llu\n", r, a,
                          static_cast<unsigned long long>(h.node_at(r, a)));
            out += buf;
        }
    return out;
}

inline std::string edge_counts_csv(const PolarHistogram& h) {
    std::string out = "bin_a,bin_b,count\n";
    char buf[64];
    const int nb = h.radial_bins * h.angular_bins;
    for (int i = 0; i < nb; ++i)
        for (int j = i; j < nb; ++j) {
            if (h.edge_at(i, j) == 0) continue;
            std::snprintf(buf, sizeof(buf), "%d,%d,%llu\n", i, j,
                          static_cast<unsigned long long>(h.edge_at(i, j)));
            out += buf;
        }
    return out;
}

namespace detail {

inline std::string fmt2(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace detail

inline std::string consensus_svg(const PolarHistogram& h, int size_px = 800) {
    const double cx = size_px / 2.0, cy = size_px / 2.0;
    const double plot_r = size_px * 0.45;
    const int nb = h.radial_bins * h.angular_bins;

    std::uint64_t max_node = 1, max_edge = 1;
    for (auto c : h.node_counts) max_node = std::max(max_node, c);
    for (int i = 0; i < nb; ++i)
        for (int j = i + 1; j < nb; ++j) max_edge = std::max(max_edge, h.edge_at(i, j));

    const auto bin_center = [&](int bin) {
        const int rb = bin / h.angular_bins, ab = bin % h.angular_bins;
        const double rr = (rb + 0.5) / h.radial_bins * plot_r;
        const double th = (ab + 0.5) / h.angular_bins * 2.0 * kPi;
        return std::pair<double, double>{cx + rr * std::cos(th), cy - rr * std::sin(th)};
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(size_px) +
           "\" height=\"" + std::to_string(size_px) + "\" viewBox=\"0 0 " +
           std::to_string(size_px) + " " + std::to_string(size_px) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int r = 1; r <= h.radial_bins; ++r) {
        svg += "<circle cx=\"" + detail::fmt2(cx) + "\" cy=\"" + detail::fmt2(cy) +
               "\" r=\"" + detail::fmt2(plot_r * r / h.radial_bins) +
               "\" fill=\"none\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    }
    for (int a = 0; a < h.angular_bins; ++a) {
        const double th = a * 2.0 * kPi / h.angular_bins;
        svg += "<line x1=\"" + detail::fmt2(cx) + "\" y1=\"" + detail::fmt2(cy) + "\" x2=\"" +
               detail::fmt2(cx + plot_r * std::cos(th)) + "\" y2=\"" +
               detail::fmt2(cy - plot_r * std::sin(th)) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    }
    // Edges first so node circles draw on top. Same-bin transitions have
    // no geometric extent and are reported only in the CSV matrices.
    for (int i = 0; i < nb; ++i)
        for (int j = i + 1; j < nb; ++j) {
            const std::uint64_t c = h.edge_at(i, j);
            if (c == 0) continue;
            const auto [x1, y1] = bin_center(i);
            const auto [x2, y2] = bin_center(j);
            const double w = 0.5 + 5.0 * static_cast<double>(c) / static_cast<double>(max_edge);
            svg += "<line x1=\"" + detail::fmt2(x1) + "\" y1=\"" + detail::fmt2(y1) +
                   "\" x2=\"" + detail::fmt2(x2) + "\" y2=\"" + detail::fmt2(y2) +
                   "\" stroke=\"#5b8db8\" stroke-width=\"" + detail::fmt2(w) + "\"/>\n";
        }
    for (int bin = 0; bin < nb; ++bin) {
        const std::uint64_t c = h.node_counts[bin];
        if (c == 0) continue;
        const auto [x, y] = bin_center(bin);
        const double rad =
            2.0 + 14.0 * std::sqrt(static_cast<double>(c) / static_cast<double>(max_node));
        svg += "<circle cx=\"" + detail::fmt2(x) + "\" cy=\"" + detail::fmt2(y) + "\" r=\"" +
               detail::fmt2(rad) + "\" fill=\"#d97642\" fill-opacity=\"0.85\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace geoaot
