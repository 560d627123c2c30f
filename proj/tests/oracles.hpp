// Independent reference implementations the tests compare against. Each
// deliberately takes a different route than the library: spherical law of
// cosines instead of haversine, 3D tangent-basis azimuth instead of the
// closed bearing formula, Floyd-Warshall instead of BFS, extremal-edge
// hull instead of monotone chain.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

constexpr double kEarthRadiusKm = 6371.0;
constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }

// Spherical law of cosines; less robust than haversine at tiny angles but
// fine as a cross-check at test scales.
inline double slc_distance_km(double lat1, double lon1, double lat2, double lon2) {
    const double p1 = deg2rad(lat1), p2 = deg2rad(lat2);
    const double dl = deg2rad(lon2 - lon1);
    double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
    c = std::clamp(c, -1.0, 1.0);
    return kEarthRadiusKm * std::acos(c);
}

// Azimuth via 3D vectors: project the unit-sphere direction toward the
// target onto the local (east, north) tangent basis.
inline double azimuth_deg(double lat1, double lon1, double lat2, double lon2) {
    const double p1 = deg2rad(lat1), l1 = deg2rad(lon1);
    const double p2 = deg2rad(lat2), l2 = deg2rad(lon2);
    const double a[3] = {std::cos(p1) * std::cos(l1), std::cos(p1) * std::sin(l1), std::sin(p1)};
    const double b[3] = {std::cos(p2) * std::cos(l2), std::cos(p2) * std::sin(l2), std::sin(p2)};
    // d = component of (b - a) orthogonal to a
    const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    double d[3] = {b[0] - dot * a[0], b[1] - dot * a[1], b[2] - dot * a[2]};
    const double east[3] = {-std::sin(l1), std::cos(l1), 0.0};
    const double north[3] = {-std::sin(p1) * std::cos(l1), -std::sin(p1) * std::sin(l1),
                             std::cos(p1)};
    const double e = d[0] * east[0] + d[1] * east[1] + d[2] * east[2];
    const double n = d[0] * north[0] + d[1] * north[1] + d[2] * north[2];
    double az = std::atan2(e, n) * 180.0 / kPi;
    if (az < 0) az += 360.0;
    return az;
}

// All-pairs hop counts; -1 where unreachable.
inline std::vector<std::vector<int>> floyd_warshall_hops(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    const int inf = 1 << 28;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
    for (const auto& [a, b] : edges) d[a][b] = d[b][a] = 1;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    for (auto& row : d)
        for (auto& v : row)
            if (v >= inf) v = -1;
    return d;
}

// Convex hull area by the extremal-edge test: (i, j) is a hull edge when
// every other point lies on one side. O(n^3).
inline double brute_hull_area(const std::vector<std::pair<double, double>>& pts) {
    const std::size_t n = pts.size();
    if (n < 3) return 0.0;
    std::vector<std::pair<double, double>> hull;
    for (std::size_t i = 0; i < n; ++i) {
        bool extremal_vertex = false;
        for (std::size_t j = 0; j < n && !extremal_vertex; ++j) {
            if (i == j) continue;
            bool pos = false, neg = false, ok = true;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                const double cross = (pts[j].first - pts[i].first) * (pts[k].second - pts[i].second) -
                                     (pts[j].second - pts[i].second) * (pts[k].first - pts[i].first);
                if (cross > 0) pos = true;
                if (cross < 0) neg = true;
                if (pos && neg) {
                    ok = false;
                    break;
                }
            }
            if (ok) extremal_vertex = true;
        }
        if (extremal_vertex) hull.push_back(pts[i]);
    }
    if (hull.size() < 3) return 0.0;
    double cx = 0, cy = 0;
    for (const auto& p : hull) {
        cx += p.first;
        cy += p.second;
    }
    cx /= static_cast<double>(hull.size());
    cy /= static_cast<double>(hull.size());
    std::sort(hull.begin(), hull.end(), [&](const auto& a, const auto& b) {
        return std::atan2(a.second - cy, a.first - cx) < std::atan2(b.second - cy, b.first - cx);
    });
    double area = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const auto& p = hull[i];
        const auto& q = hull[(i + 1) % hull.size()];
        area += p.first * q.second - q.first * p.second;
    }
    return std::abs(area) / 2.0;
}

// Distinct-cell count by direct double loop over cells.
inline std::size_t brute_cell_count(const std::vector<std::pair<double, double>>& pts, int k) {
    std::size_t count = 0;
    for (int cy = 0; cy < k; ++cy)
        for (int cx = 0; cx < k; ++cx) {
            bool hit = false;
            for (const auto& [x, y] : pts) {
                int ix = static_cast<int>(x * k), iy = static_cast<int>(y * k);
                if (ix == k) ix = k - 1;
                if (iy == k) iy = k - 1;
                if (ix == cx && iy == cy) {
                    hit = true;
                    break;
                }
            }
            if (hit) count++;
        }
    return count;
}

}  // namespace oracle
