// File ingestion for the dataset: the per-graph JSON schema, the dataset
// manifest, and the question-record schema (parsed and re-emitted as-is;
// question generation itself lives elsewhere).
//
// Graph file schema (one UTF-8 JSON document per graph):
//   {
//     "graph_id": "...", "continent": "EU", "difficulty": "medium",
//     "start_node": "n00",
//     "nodes": [ { "id": "n00", "lat": 48.85, "lon": 2.35,
//                  "heading_ref": 90.0, "image": "n00.png",
//                  "labels": { "street": "...", "city": "...",
//                              "country": "...", "continent": "EU" } }, ... ],
//     "edges": [ { "from": "n00", "to": "n01", "length_m": 12.5 }, ... ]
//   }
// Edges are undirected and deduplicated; "length_m" defaults to the
// haversine distance between the endpoints. Unknown fields are ignored
// with a warning.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "geoaot/nav_graph.hpp"

namespace geoaot {

enum class GraphParseErrorCode {
    MalformedDocument,
    DuplicateNodeId,
    DanglingEdgeEndpoint,
    SelfLoop,
    MissingStartNode,
    DisconnectedGraph,
    InvalidField,
};

inline const char* graph_parse_error_name(GraphParseErrorCode c) {
    switch (c) {
        case GraphParseErrorCode::MalformedDocument: return "malformed-document";
        case GraphParseErrorCode::DuplicateNodeId: return "duplicate-node-id";
        case GraphParseErrorCode::DanglingEdgeEndpoint: return "dangling-edge-endpoint";
        case GraphParseErrorCode::SelfLoop: return "self-loop";
        case GraphParseErrorCode::MissingStartNode: return "missing-start-node";
        case GraphParseErrorCode::DisconnectedGraph: return "disconnected-graph";
        case GraphParseErrorCode::InvalidField: return "invalid-field";
    }
    return "?";
}

class GraphParseError : public std::runtime_error {
public:
    GraphParseError(GraphParseErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(graph_parse_error_name(code)) + ": " + detail),
          code_(code) {}
    GraphParseErrorCode code() const { return code_; }

private:
    GraphParseErrorCode code_;
};

struct GraphParseResult {
    NavGraph graph;
    std::vector<std::string> warnings;  // unknown-field notices
};

namespace detail {

inline void warn_unknown_fields(const nlohmann::json& obj,
                                const std::vector<std::string>& known,
                                const std::string& context,
                                std::vector<std::string>& warnings) {
    for (const auto& [key, val] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            warnings.push_back("ignoring unknown field '" + key + "' in " + context);
    }
}

inline double require_number(const nlohmann::json& obj, const char* key,
                             const std::string& context) {
    if (!obj.contains(key) || !obj[key].is_number())
        throw GraphParseError(GraphParseErrorCode::InvalidField,
                              context + " needs numeric '" + key + "'");
    return obj[key].get<double>();
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  const std::string& context) {
    if (!obj.contains(key) || !obj[key].is_string())
        throw GraphParseError(GraphParseErrorCode::InvalidField,
                              context + " needs string '" + key + "'");
    return obj[key].get<std::string>();
}

}  // namespace detail

inline GraphParseResult parse_graph_json(const nlohmann::json& doc) {
    using nlohmann::json;
    GraphParseResult res;
    if (!doc.is_object())
        throw GraphParseError(GraphParseErrorCode::MalformedDocument,
                              "top level must be an object");
    detail::warn_unknown_fields(
        doc, {"graph_id", "continent", "difficulty", "start_node", "nodes", "edges"},
        "graph document", res.warnings);

    NavGraph& g = res.graph;
    g.graph_id = detail::require_string(doc, "graph_id", "graph document");

    const std::string cont = detail::require_string(doc, "continent", "graph document");
    const auto parsed_cont = parse_continent(cont);
    if (!parsed_cont)
        throw GraphParseError(GraphParseErrorCode::InvalidField,
                              "unknown continent code '" + cont + "'");
    g.continent = *parsed_cont;

    const std::string diff = detail::require_string(doc, "difficulty", "graph document");
    const auto parsed_diff = parse_difficulty(diff);
    if (!parsed_diff)
        throw GraphParseError(GraphParseErrorCode::InvalidField,
                              "unknown difficulty '" + diff + "'");
    g.difficulty = *parsed_diff;

    if (!doc.contains("nodes") || !doc["nodes"].is_array() || doc["nodes"].empty())
        throw GraphParseError(GraphParseErrorCode::MalformedDocument,
                              "graph document needs a non-empty 'nodes' array");
    for (const auto& jn : doc["nodes"]) {
        const std::string ctx = "node";
        detail::warn_unknown_fields(jn, {"id", "lat", "lon", "heading_ref", "image", "labels"},
                                    ctx, res.warnings);
        PanoNode node;
        node.id = detail::require_string(jn, "id", ctx);
        try {
            node.location = GeoPoint(detail::require_number(jn, "lat", ctx),
                                     detail::require_number(jn, "lon", ctx));
        } catch (const std::invalid_argument& e) {
            throw GraphParseError(GraphParseErrorCode::InvalidField,
                                  "node " + node.id + ": " + e.what());
        }
        node.pano_heading_ref =
            jn.contains("heading_ref") ? detail::require_number(jn, "heading_ref", ctx) : 0.0;
        if (jn.contains("image")) node.image_ref = detail::require_string(jn, "image", ctx);
        if (!jn.contains("labels") || !jn["labels"].is_object())
            throw GraphParseError(GraphParseErrorCode::InvalidField,
                                  "node " + node.id + " needs a 'labels' object");
        const auto& jl = jn["labels"];
        detail::warn_unknown_fields(jl, {"street", "city", "country", "continent"},
                                    "labels of " + node.id, res.warnings);
        std::optional<std::string> street, city;
        if (jl.contains("street") && jl["street"].is_string() &&
            !jl["street"].get<std::string>().empty())
            street = jl["street"].get<std::string>();
        if (jl.contains("city") && jl["city"].is_string() &&
            !jl["city"].get<std::string>().empty())
            city = jl["city"].get<std::string>();
        const std::string label_cont_code =
            jl.contains("continent") && jl["continent"].is_string()
                ? jl["continent"].get<std::string>()
                : cont;
        const auto label_cont = parse_continent(label_cont_code);
        if (!label_cont)
            throw GraphParseError(GraphParseErrorCode::InvalidField,
                                  "node " + node.id + ": bad label continent");
        try {
            node.labels = PlaceLabels::make(
                street ? std::optional<std::string_view>(*street) : std::nullopt,
                city ? std::optional<std::string_view>(*city) : std::nullopt,
                detail::require_string(jl, "country", "labels of " + node.id), *label_cont);
        } catch (const std::invalid_argument& e) {
            throw GraphParseError(GraphParseErrorCode::InvalidField,
                                  "node " + node.id + ": " + e.what());
        }
        try {
            g.add_node(std::move(node));
        } catch (const std::invalid_argument&) {
            throw GraphParseError(GraphParseErrorCode::DuplicateNodeId,
                                  "node id repeated: " + jn["id"].get<std::string>());
        }
    }

    if (doc.contains("edges")) {
        if (!doc["edges"].is_array())
            throw GraphParseError(GraphParseErrorCode::MalformedDocument,
                                  "'edges' must be an array");
        for (const auto& je : doc["edges"]) {
            detail::warn_unknown_fields(je, {"from", "to", "length_m"}, "edge", res.warnings);
            const std::string from = detail::require_string(je, "from", "edge");
            const std::string to = detail::require_string(je, "to", "edge");
            if (from == to)
                throw GraphParseError(GraphParseErrorCode::SelfLoop,
                                      "edge " + from + " -> " + to);
            if (!g.index_of(from))
                throw GraphParseError(GraphParseErrorCode::DanglingEdgeEndpoint,
                                      "edge endpoint '" + from + "' not in nodes");
            if (!g.index_of(to))
                throw GraphParseError(GraphParseErrorCode::DanglingEdgeEndpoint,
                                      "edge endpoint '" + to + "' not in nodes");
            std::optional<double> len;
            if (je.contains("length_m")) {
                len = detail::require_number(je, "length_m", "edge");
                if (*len <= 0.0)
                    throw GraphParseError(GraphParseErrorCode::InvalidField,
                                          "edge " + from + "-" + to +
                                              ": length_m must be positive");
            }
            g.add_edge(from, to, len);  // duplicate edges collapse silently
        }
    }

    const std::string start = detail::require_string(doc, "start_node", "graph document");
    if (!g.index_of(start))
        throw GraphParseError(GraphParseErrorCode::MissingStartNode,
                              "start_node '" + start + "' not in nodes");
    g.set_start(start);
    g.finalize();

    if (!g.is_connected())
        throw GraphParseError(GraphParseErrorCode::DisconnectedGraph,
                              "graph " + g.graph_id + " is not connected");
    return res;
}

inline GraphParseResult parse_graph_file(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw GraphParseError(GraphParseErrorCode::MalformedDocument, e.what());
    }
    return parse_graph_json(doc);
}

// Canonical serialized form: nodes sorted by id, edges by endpoint id
// pair. parse -> serialize -> parse is the identity on this form.
inline nlohmann::json graph_to_json(const NavGraph& g) {
    using nlohmann::json;
    json doc;
    doc["graph_id"] = g.graph_id;
    doc["continent"] = continent_code(g.continent);
    doc["difficulty"] = difficulty_name(g.difficulty);
    doc["start_node"] = g.start_node();

    std::vector<std::size_t> order(g.node_count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return g.node(a).id < g.node(b).id;
    });
    json nodes = json::array();
    for (std::size_t idx : order) {
        const PanoNode& n = g.node(idx);
        json jn;
        jn["id"] = n.id;
        jn["lat"] = n.location.lat;
        jn["lon"] = n.location.lon;
        jn["heading_ref"] = n.pano_heading_ref;
        if (!n.image_ref.empty()) jn["image"] = n.image_ref;
        json jl;
        if (n.labels.street) jl["street"] = *n.labels.street;
        if (n.labels.city) jl["city"] = *n.labels.city;
        jl["country"] = n.labels.country;
        jl["continent"] = continent_code(n.labels.continent);
        jn["labels"] = jl;
        nodes.push_back(jn);
    }
    doc["nodes"] = nodes;

    std::vector<std::tuple<std::string, std::string, double>> sorted_edges;
    for (const NavEdge& e : g.edges()) {
        std::string ia = g.node(e.a).id, ib = g.node(e.b).id;
        if (ia > ib) std::swap(ia, ib);
        sorted_edges.emplace_back(ia, ib, e.length_m);
    }
    std::sort(sorted_edges.begin(), sorted_edges.end());
    json edges = json::array();
    for (const auto& [from, to, len] : sorted_edges) {
        json je;
        je["from"] = from;
        je["to"] = to;
        je["length_m"] = len;
        edges.push_back(je);
    }
    doc["edges"] = edges;
    return doc;
}

inline std::string serialize_graph(const NavGraph& g) { return graph_to_json(g).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Dataset manifest: graph files plus the attribution of the model that
// proposed each location.

struct ManifestEntry {
    std::string file;
    std::string proposed_by;  // model attribution, may be empty
};

struct DatasetManifest {
    std::string dataset_id;
    std::vector<ManifestEntry> graphs;
};

inline DatasetManifest parse_manifest(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw GraphParseError(GraphParseErrorCode::MalformedDocument,
                              std::string("manifest: ") + e.what());
    }
    DatasetManifest m;
    if (doc.contains("dataset_id") && doc["dataset_id"].is_string())
        m.dataset_id = doc["dataset_id"].get<std::string>();
    if (!doc.contains("graphs") || !doc["graphs"].is_array())
        throw GraphParseError(GraphParseErrorCode::MalformedDocument,
                              "manifest needs a 'graphs' array");
    for (const auto& jg : doc["graphs"]) {
        ManifestEntry e;
        e.file = detail::require_string(jg, "file", "manifest entry");
        if (jg.contains("proposed_by") && jg["proposed_by"].is_string())
            e.proposed_by = jg["proposed_by"].get<std::string>();
        m.graphs.push_back(std::move(e));
    }
    return m;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct LoadedDataset {
    DatasetManifest manifest;
    std::vector<NavGraph> graphs;
    std::vector<std::string> warnings;
};

// Loads every graph named in <dir>/manifest.json through the validating
// parser. Any graph failure propagates as GraphParseError naming the file.
inline LoadedDataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path))
        throw GraphParseError(GraphParseErrorCode::MalformedDocument,
                              "manifest missing: " + manifest_path.string());
    LoadedDataset ds;
    ds.manifest = parse_manifest(read_text_file(manifest_path));
    for (const auto& entry : ds.manifest.graphs) {
        try {
            GraphParseResult r = parse_graph_file(read_text_file(dir / entry.file));
            for (auto& w : r.warnings) ds.warnings.push_back(entry.file + ": " + w);
            ds.graphs.push_back(std::move(r.graph));
        } catch (const GraphParseError& e) {
            throw GraphParseError(e.code(), entry.file + ": " + e.what());
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Question records. Generation is out of scope here; the schema is parsed
// and re-emitted so downstream tooling has a stable contract.

struct QuestionRecord {
    std::string id;
    std::string graph_id;
    std::string type;  // multiple_choice | open_ended | scenario
    std::string text;
    std::string answer;
    std::vector<std::string> distractors;
    std::string difficulty;
};

inline QuestionRecord parse_question(const nlohmann::json& j) {
    QuestionRecord q;
    q.id = detail::require_string(j, "id", "question");
    q.graph_id = detail::require_string(j, "graph_id", "question");
    q.type = detail::require_string(j, "type", "question");
    q.text = detail::require_string(j, "text", "question");
    q.answer = detail::require_string(j, "answer", "question");
    if (j.contains("distractors") && j["distractors"].is_array())
        for (const auto& d : j["distractors"]) q.distractors.push_back(d.get<std::string>());
    if (j.contains("difficulty") && j["difficulty"].is_string())
        q.difficulty = j["difficulty"].get<std::string>();
    return q;
}

inline nlohmann::json question_to_json(const QuestionRecord& q) {
    nlohmann::json j;
    j["id"] = q.id;
    j["graph_id"] = q.graph_id;
    j["type"] = q.type;
    j["text"] = q.text;
    j["answer"] = q.answer;
    j["distractors"] = q.distractors;
    if (!q.difficulty.empty()) j["difficulty"] = q.difficulty;
    return j;
}

}  // namespace geoaot
