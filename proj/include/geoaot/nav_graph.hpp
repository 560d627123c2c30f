// Navigation-graph data model: panoramas as nodes, traversable links as
// undirected edges, plus the boundary/depth validation queries and
// aggregate statistics the dataset protocol needs. Graphs are immutable
// once built; every query here is read-only.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geoaot/geo.hpp"

namespace geoaot {

enum class Difficulty { Easy, Medium, Hard };

inline const char* difficulty_name(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Medium: return "medium";
        case Difficulty::Hard: return "hard";
    }
    return "?";
}

inline std::optional<Difficulty> parse_difficulty(const std::string& s) {
    if (s == "easy") return Difficulty::Easy;
    if (s == "medium") return Difficulty::Medium;
    if (s == "hard") return Difficulty::Hard;
    return std::nullopt;
}

// One panorama: a location, the compass bearing of the image's center
// column, an optional 2:1 equirectangular image reference, and resolved
// place labels.
struct PanoNode {
    std::string id;
    GeoPoint location;
    double pano_heading_ref = 0.0;  // degrees, [0, 360)
    std::string image_ref;          // empty when no imagery is bundled
    PlaceLabels labels;
};

// Undirected traversable link, stored as a canonical ordered index pair.
struct NavEdge {
    std::size_t a = 0;  // node indices, a < b
    std::size_t b = 0;
    double length_m = 0.0;
};

class NavGraph {
public:
    std::string graph_id;
    Difficulty difficulty = Difficulty::Medium;
    Continent continent = Continent::Europe;

    // Build-time interface; `finalize` freezes the graph and checks the
    // structural invariants that do not depend on file parsing.
    void add_node(PanoNode node) {
        if (index_of_.count(node.id))
            throw std::invalid_argument("NavGraph: duplicate node id " + node.id);
        node.pano_heading_ref = wrap_deg_360(node.pano_heading_ref);
        index_of_[node.id] = nodes_.size();
        nodes_.push_back(std::move(node));
    }

    // Returns false if the edge was already present. Self-loops are
    // rejected; a missing length defaults to the haversine distance
    // between the endpoints.
    bool add_edge(const std::string& from, const std::string& to,
                  std::optional<double> length_m = std::nullopt) {
        const auto ia = index_of_.find(from), ib = index_of_.find(to);
        if (ia == index_of_.end() || ib == index_of_.end())
            throw std::invalid_argument("NavGraph: edge endpoint not found: " +
                                        (ia == index_of_.end() ? from : to));
        if (ia->second == ib->second)
            throw std::invalid_argument("NavGraph: self-loop at " + from);
        if (length_m && *length_m <= 0.0)
            throw std::invalid_argument("NavGraph: edge length must be positive");
        std::size_t a = ia->second, b = ib->second;
        if (a > b) std::swap(a, b);
        if (!edge_set_.insert({a, b}).second) return false;
        const double len = length_m.value_or(
            haversine_km(nodes_[a].location, nodes_[b].location) * 1000.0);
        edges_.push_back({a, b, len});
        return true;
    }

    void set_start(const std::string& id) { start_id_ = id; }

    void finalize() {
        if (nodes_.empty()) throw std::invalid_argument("NavGraph: no nodes");
        if (!index_of_.count(start_id_))
            throw std::invalid_argument("NavGraph: start node not found: " + start_id_);
        adjacency_.assign(nodes_.size(), {});
        std::vector<std::vector<std::size_t>> tmp(nodes_.size());
        for (std::size_t e = 0; e < edges_.size(); ++e) {
            tmp[edges_[e].a].push_back(e);
            tmp[edges_[e].b].push_back(e);
        }
        adjacency_ = std::move(tmp);
        finalized_ = true;
    }

    bool finalized() const { return finalized_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<PanoNode>& nodes() const { return nodes_; }
    const std::vector<NavEdge>& edges() const { return edges_; }
    const std::string& start_node() const { return start_id_; }

    std::optional<std::size_t> index_of(const std::string& id) const {
        auto it = index_of_.find(id);
        if (it == index_of_.end()) return std::nullopt;
        return it->second;
    }

    const PanoNode& node(std::size_t idx) const { return nodes_.at(idx); }

    std::size_t degree(std::size_t idx) const { return adjacency_.at(idx).size(); }

    // Neighbor node indices together with the connecting edge index.
    std::vector<std::pair<std::size_t, std::size_t>> neighbors(std::size_t idx) const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t e : adjacency_.at(idx)) {
            const NavEdge& edge = edges_[e];
            out.push_back({edge.a == idx ? edge.b : edge.a, e});
        }
        return out;
    }

    bool has_edge(std::size_t u, std::size_t v) const {
        if (u > v) std::swap(u, v);
        return edge_set_.count({u, v}) > 0;
    }

    bool is_connected() const {
        if (nodes_.empty()) return false;
        const auto dist = bfs_hops(0);
        return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
    }

    // BFS hop distances from a node; -1 marks unreachable nodes.
    std::vector<int> bfs_hops(std::size_t from) const {
        std::vector<int> dist(nodes_.size(), -1);
        std::queue<std::size_t> q;
        dist[from] = 0;
        q.push(from);
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop();
            for (const auto& [v, e] : neighbors(u)) {
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    q.push(v);
                }
            }
        }
        return dist;
    }

private:
    std::vector<PanoNode> nodes_;
    std::vector<NavEdge> edges_;
    std::map<std::string, std::size_t> index_of_;
    std::set<std::pair<std::size_t, std::size_t>> edge_set_;
    std::vector<std::vector<std::size_t>> adjacency_;
    std::string start_id_;
    bool finalized_ = false;
};

// Minimal number of edges between two nodes; 0 iff u == v. Throws on
// unknown ids; an unreachable pair signals a disconnected graph, which a
// validated NavGraph never has.
inline int shortest_path_hops(const NavGraph& g, const std::string& u, const std::string& v) {
    const auto iu = g.index_of(u), iv = g.index_of(v);
    if (!iu) throw std::invalid_argument("shortest_path_hops: unknown node " + u);
    if (!iv) throw std::invalid_argument("shortest_path_hops: unknown node " + v);
    const auto dist = g.bfs_hops(*iu);
    if (dist[*iv] < 0)
        throw std::runtime_error("shortest_path_hops: " + u + " and " + v +
                                 " are not connected");
    return dist[*iv];
}

// Exactly the degree-1 nodes.
inline std::vector<std::string> boundary_nodes(const NavGraph& g) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < g.node_count(); ++i)
        if (g.degree(i) == 1) out.push_back(g.node(i).id);
    std::sort(out.begin(), out.end());
    return out;
}

struct DepthCheck {
    bool pass = false;
    std::optional<std::string> witness;  // offending boundary node on failure
    int witness_distance = -1;
};

// Depth constraint from the designated start node: every boundary node
// must be at least `min_depth` hops away. A graph without boundary nodes
// passes vacuously.
inline DepthCheck validate_depth(const NavGraph& g, int min_depth = 10) {
    DepthCheck res;
    const auto start_idx = g.index_of(g.start_node());
    if (!start_idx) throw std::invalid_argument("validate_depth: start node missing");
    const auto dist = g.bfs_hops(*start_idx);

    res.pass = true;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        if (g.degree(i) != 1) continue;
        if (dist[i] >= 0 && dist[i] < min_depth) {
            if (!res.witness || dist[i] < res.witness_distance ||
                (dist[i] == res.witness_distance && g.node(i).id < *res.witness)) {
                res.witness = g.node(i).id;
                res.witness_distance = dist[i];
            }
            res.pass = false;
        }
    }
    return res;
}

struct GraphStats {
    double n_nodes = 0.0;
    double n_edges = 0.0;
    double avg_degree = 0.0;  // 2 E / V over the pooled counts
    double boundary_count = 0.0;
};

// Aggregate means over a dataset. The degree figure is the ratio of
// pooled counts, 2*sum(E)/sum(V), which is what the edge-to-node summary
// reports.
inline GraphStats graph_stats(const std::vector<NavGraph>& graphs) {
    if (graphs.empty()) throw std::invalid_argument("graph_stats: empty graph list");
    double nodes = 0.0, edges = 0.0, boundary = 0.0;
    for (const auto& g : graphs) {
        nodes += static_cast<double>(g.node_count());
        edges += static_cast<double>(g.edge_count());
        boundary += static_cast<double>(boundary_nodes(g).size());
    }
    const double n = static_cast<double>(graphs.size());
    GraphStats s;
    s.n_nodes = nodes / n;
    s.n_edges = edges / n;
    s.avg_degree = nodes > 0.0 ? 2.0 * edges / nodes : 0.0;
    s.boundary_count = boundary / n;
    return s;
}

}  // namespace geoaot
