// Spatial point-pattern metrics over model-proposed locations: grid
// occupancy, normalized grid entropy, convex-hull area, mean
// nearest-neighbor distance and the Clark-Evans ratio, all on point sets
// min-max normalized to the unit square per continent.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geoaot/geo.hpp"

namespace geoaot {

struct Point2D {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2D&, const Point2D&) = default;
};

// Points in [0,1]^2 tagged with their source continent and proposing model.
struct PointSet2D {
    std::vector<Point2D> points;
    Continent source_continent = Continent::Europe;
    std::string model_tag;
};

struct DiversityReport {
    double occupancy = 0.0;   // fraction of occupied grid cells, (0, 1]
    double entropy = 0.0;     // Shannon entropy of cell mass, normalized to [0, 1]
    double hull_area = 0.0;   // convex-hull area inside the unit square
    double clark_evans = 0.0; // observed / expected mean NN distance
    double mean_nn = 0.0;     // mean nearest-neighbor distance
};

// Per-continent affine min-max map of (lon, lat) onto [0,1]^2, each axis
// independently. A single point or a zero-extent axis maps to 0.5 so the
// downstream metrics stay finite.
inline std::vector<PointSet2D> normalize_per_continent(
    const std::vector<std::pair<GeoPoint, Continent>>& raw,
    const std::string& model_tag = {}) {
    std::map<Continent, std::vector<GeoPoint>> by_continent;
    for (const auto& [pt, cont] : raw) by_continent[cont].push_back(pt);

    std::vector<PointSet2D> out;
    out.reserve(by_continent.size());
    for (const auto& [cont, pts] : by_continent) {
        double min_lon = pts[0].lon, max_lon = pts[0].lon;
        double min_lat = pts[0].lat, max_lat = pts[0].lat;
        for (const auto& p : pts) {
            min_lon = std::min(min_lon, p.lon);
            max_lon = std::max(max_lon, p.lon);
            min_lat = std::min(min_lat, p.lat);
            max_lat = std::max(max_lat, p.lat);
        }
        const double dx = max_lon - min_lon, dy = max_lat - min_lat;
        PointSet2D ps;
        ps.source_continent = cont;
        ps.model_tag = model_tag;
        ps.points.reserve(pts.size());
        for (const auto& p : pts)
            ps.points.push_back({dx > 0.0 ? (p.lon - min_lon) / dx : 0.5,
                                 dy > 0.0 ? (p.lat - min_lat) / dy : 0.5});
        out.push_back(std::move(ps));
    }
    return out;
}

// Cell index for a coordinate in [0,1]: floor(x*k) clamped so the closed
// upper boundary lands in the last cell.
inline int grid_cell_index(double v, int k) {
    int c = static_cast<int>(std::floor(v * static_cast<double>(k)));
    return std::clamp(c, 0, k - 1);
}

// Fraction of k x k cells containing at least one point.
inline double occupancy_grid(const PointSet2D& ps, int k = 16) {
    if (k < 1) throw std::invalid_argument("occupancy_grid: k must be >= 1");
    if (ps.points.empty()) throw std::invalid_argument("occupancy_grid: empty point set");
    std::set<std::pair<int, int>> occupied;
    for (const auto& p : ps.points)
        occupied.insert({grid_cell_index(p.x, k), grid_cell_index(p.y, k)});
    return static_cast<double>(occupied.size()) / (static_cast<double>(k) * k);
}

// Shannon entropy of the cell-frequency distribution, normalized by
// ln(k^2) to [0, 1]. Single-cell mass gives 0, one point per cell gives 1.
inline double grid_entropy(const PointSet2D& ps, int k = 16) {
    if (k < 1) throw std::invalid_argument("grid_entropy: k must be >= 1");
    if (ps.points.empty()) throw std::invalid_argument("grid_entropy: empty point set");
    std::map<std::pair<int, int>, std::size_t> counts;
    for (const auto& p : ps.points)
        counts[{grid_cell_index(p.x, k), grid_cell_index(p.y, k)}]++;
    const double n = static_cast<double>(ps.points.size());
    double h = 0.0;
    for (const auto& [cell, c] : counts) {
        const double f = static_cast<double>(c) / n;
        h -= f * std::log(f);
    }
    const double hmax = std::log(static_cast<double>(k) * k);
    return hmax > 0.0 ? h / hmax : 0.0;
}

namespace detail {

inline double cross2(const Point2D& o, const Point2D& a, const Point2D& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace detail

// Convex hull by monotone chain; vertices in counter-clockwise order.
// Collinear boundary points are dropped.
inline std::vector<Point2D> convex_hull(std::vector<Point2D> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point2D& a, const Point2D& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;

    std::vector<Point2D> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {  // lower chain
        while (k >= 2 && detail::cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {  // upper chain
        while (k >= lower && detail::cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

// Shoelace area of a simple polygon given in order.
inline double polygon_area(const std::vector<Point2D>& poly) {
    if (poly.size() < 3) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        acc += p.x * q.y - q.x * p.y;
    }
    return std::fabs(acc) / 2.0;
}

// Convex-hull area; 0 for fewer than three distinct points or collinear sets.
inline double hull_area(const PointSet2D& ps) {
    if (ps.points.empty()) throw std::invalid_argument("hull_area: empty point set");
    return polygon_area(convex_hull(ps.points));
}

// Mean over points of the Euclidean distance to the nearest other point.
// Exact O(n^2); the point sets here are small.
inline double mean_nn(const PointSet2D& ps) {
    const std::size_t n = ps.points.size();
    if (n < 2) throw std::invalid_argument("mean_nn: need at least 2 points");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dx = ps.points[i].x - ps.points[j].x;
            const double dy = ps.points[i].y - ps.points[j].y;
            best = std::min(best, std::hypot(dx, dy));
        }
        sum += best;
    }
    return sum / static_cast<double>(n);
}

// Clark-Evans ratio R = r_obs / r_exp with r_exp = 1 / (2 sqrt(n / area)).
// No edge correction; the study region defaults to the unit square.
// R < 1 indicates clustering, R > 1 regularity; a fully degenerate set
// (all points identical) reports 0.
inline double clark_evans(const PointSet2D& ps, double area = 1.0) {
    if (area <= 0.0) throw std::invalid_argument("clark_evans: area must be positive");
    const std::size_t n = ps.points.size();
    if (n < 2) throw std::invalid_argument("clark_evans: need at least 2 points");
    const double r_obs = mean_nn(ps);
    if (r_obs == 0.0) return 0.0;
    const double r_exp = 1.0 / (2.0 * std::sqrt(static_cast<double>(n) / area));
    return r_obs / r_exp;
}

inline DiversityReport diversity_report(const PointSet2D& ps, int grid_k = 16) {
    DiversityReport rep;
    rep.occupancy = occupancy_grid(ps, grid_k);
    rep.entropy = grid_entropy(ps, grid_k);
    rep.hull_area = hull_area(ps);
    if (ps.points.size() >= 2) {
        rep.mean_nn = mean_nn(ps);
        rep.clark_evans = clark_evans(ps);
    }
    return rep;
}

}  // namespace geoaot
