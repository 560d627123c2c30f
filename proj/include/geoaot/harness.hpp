// Operator-level commands behind the CLI: dataset validation, evaluation
// runs, diversity/trend computation over CSVs, consensus aggregation, and
// report emission. Everything here is deterministic for deterministic
// backends: episodes fan out to a worker pool but land in index-ordered
// slots, and every file write is temp-then-rename.
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "geoaot/backend.hpp"
#include "geoaot/chat_backend.hpp"
#include "geoaot/consensus.hpp"
#include "geoaot/csv.hpp"
#include "geoaot/dataset.hpp"
#include "geoaot/diversity.hpp"
#include "geoaot/episode.hpp"
#include "geoaot/geo.hpp"
#include "geoaot/nav_graph.hpp"
#include "geoaot/trend.hpp"

namespace geoaot {

// Bad flags, bad config files, bad input data: exit code 1 territory.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Run configuration

struct CoverageLevel {
    std::string label;
    int max_turns = 10;
    double fov_deg = 90.0;
};

struct RunConfig {
    std::string dataset_dir;
    std::string output_dir = "out";
    std::string backend_spec = "scripted:stop";  // scripted:stop | replay:<file> | chat[:<model>]
    int max_turns = 10;
    double fov_deg = 90.0;
    int parallelism = 1;
    std::uint64_t seed = 0;
    std::vector<CoverageLevel> coverage_levels;  // empty -> single "full" level
    std::optional<double> stop_on_confidence;
    int view_width = 96;
    int view_height = 96;
    bool render_views = true;
    int min_depth = 10;
    bool include_prompts = true;

    void validate() const {
        if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
        if (max_turns < 0) throw ConfigError("max_turns must be >= 0");
        if (dataset_dir.empty()) throw ConfigError("dataset directory is required");
        for (std::size_t i = 0; i < coverage_levels.size(); ++i) {
            if (coverage_levels[i].label.empty())
                throw ConfigError("coverage level labels must be non-empty");
            if (coverage_levels[i].max_turns < 0)
                throw ConfigError("coverage level max_turns must be >= 0");
            for (std::size_t j = 0; j < i; ++j)
                if (coverage_levels[j].label == coverage_levels[i].label)
                    throw ConfigError("duplicate coverage level label: " +
                                      coverage_levels[i].label);
        }
    }

    std::vector<CoverageLevel> effective_levels() const {
        if (!coverage_levels.empty()) return coverage_levels;
        return {CoverageLevel{"full", max_turns, fov_deg}};
    }

    // Merges keys from a config file; unknown keys are rejected so typos
    // cannot silently change a run.
    void apply_json(const nlohmann::json& j) {
        if (!j.is_object()) throw ConfigError("config file: expected a JSON object");
        for (const auto& [key, val] : j.items()) {
            try {
                if (key == "dataset") dataset_dir = val.get<std::string>();
                else if (key == "out") output_dir = val.get<std::string>();
                else if (key == "backend") backend_spec = val.get<std::string>();
                else if (key == "max_turns") max_turns = val.get<int>();
                else if (key == "fov") fov_deg = val.get<double>();
                else if (key == "parallelism") parallelism = val.get<int>();
                else if (key == "seed") seed = val.get<std::uint64_t>();
                else if (key == "stop_on_confidence") stop_on_confidence = val.get<double>();
                else if (key == "min_depth") min_depth = val.get<int>();
                else if (key == "include_prompts") include_prompts = val.get<bool>();
                else if (key == "view") {
                    if (val.contains("width")) view_width = val.at("width").get<int>();
                    if (val.contains("height")) view_height = val.at("height").get<int>();
                    if (val.contains("render")) render_views = val.at("render").get<bool>();
                } else if (key == "levels") {
                    coverage_levels.clear();
                    for (const auto& lv : val) {
                        CoverageLevel cl;
                        cl.label = lv.at("label").get<std::string>();
                        cl.max_turns = lv.contains("max_turns") ? lv.at("max_turns").get<int>()
                                                                : max_turns;
                        cl.fov_deg = lv.contains("fov") ? lv.at("fov").get<double>() : fov_deg;
                        coverage_levels.push_back(std::move(cl));
                    }
                } else {
                    throw ConfigError("config file: unknown key '" + key + "'");
                }
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("config file: bad value for '" + key + "': " + e.what());
            }
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"dataset", dataset_dir},
                         {"out", output_dir},
                         {"backend", backend_spec},
                         {"max_turns", max_turns},
                         {"fov", fov_deg},
                         {"parallelism", parallelism},
                         {"seed", seed},
                         {"min_depth", min_depth},
                         {"include_prompts", include_prompts},
                         {"view",
                          {{"width", view_width},
                           {"height", view_height},
                           {"render", render_views}}}};
        if (stop_on_confidence) j["stop_on_confidence"] = *stop_on_confidence;
        if (!coverage_levels.empty()) {
            nlohmann::json levels = nlohmann::json::array();
            for (const auto& l : coverage_levels)
                levels.push_back({{"label", l.label},
                                  {"max_turns", l.max_turns},
                                  {"fov", l.fov_deg}});
            j["levels"] = levels;
        }
        return j;
    }
};

inline std::unique_ptr<ModelBackend> make_backend(const std::string& spec) {
    if (spec == "scripted" || spec == "scripted:stop")
        return std::make_unique<ScriptedBackend>(
            [](std::size_t, const std::string&, const Observation&) { return "STOP"; },
            "scripted-stop");
    if (spec.rfind("replay:", 0) == 0) {
        try {
            return std::make_unique<ReplayBackend>(ReplayBackend::from_file(spec.substr(7)));
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    if (spec == "chat" || spec.rfind("chat:", 0) == 0) {
        auto cfg = ChatBackendConfig::from_env();
        if (spec.size() > 5) cfg.model_name = spec.substr(5);
        return std::make_unique<ChatBackend>(std::move(cfg));
    }
    throw ConfigError("unknown backend spec '" + spec +
                      "' (expected scripted:stop | replay:<file> | chat[:<model>])");
}

// ---------------------------------------------------------------------------
// Infrastructure

inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// Runs fn(0..n-1) on up to `workers` threads. Results must go into
// index-addressed slots owned by the caller; the first (lowest-index)
// escaped exception is rethrown after all workers finish.
template <typename Fn>
inline void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (n == 0) return;
    const int use = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (use == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(use));
    for (int t = 0; t < use; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Node images resolve against the dataset directory; nodes without an
// image_ref fall back to the synthetic bearing pano.
inline Env::PanoSource dataset_pano_source(std::filesystem::path dataset_dir,
                                           int synthetic_width = 256) {
    return [dir = std::move(dataset_dir), synthetic_width](const PanoNode& node) -> Image {
        if (node.image_ref.empty()) return make_bearing_pano(synthetic_width,
                                                             node.pano_heading_ref);
        return decode_ppm(read_text_file(dir / node.image_ref));
    };
}

inline std::string fmt_g(double v, const char* fmt = "%.17g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

inline std::string sanitize_for_filename(const std::string& s) {
    std::string out;
    for (char c : s)
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ||
                              c == '_'
                          ? c
                          : '-');
    return out;
}

// ---------------------------------------------------------------------------
// validate

struct ValidationResult {
    bool pass = false;
    std::vector<std::string> lines;      // one per graph (or one for a load failure)
    std::vector<std::string> warnings;   // unknown-field etc.
    std::optional<GraphStats> stats;
    std::vector<NavGraph> graphs;        // parsed graphs when loading succeeded
};

inline ValidationResult validate_dataset(const std::filesystem::path& dir, int min_depth = 10) {
    ValidationResult res;
    LoadedDataset ds;
    try {
        ds = load_dataset(dir);
    } catch (const GraphParseError& e) {
        res.lines.push_back(std::string("FAIL [") + graph_parse_error_name(e.code()) + "] " +
                            e.what());
        return res;
    }
    res.warnings = ds.warnings;
    res.pass = true;
    for (const auto& g : ds.graphs) {
        const DepthCheck d = validate_depth(g, min_depth);
        char buf[256];
        if (d.pass) {
            std::snprintf(buf, sizeof(buf), "ok   %s: nodes=%zu edges=%zu boundary=%zu",
                          g.graph_id.c_str(), g.node_count(), g.edge_count(),
                          boundary_nodes(g).size());
        } else {
            std::snprintf(buf, sizeof(buf),
                          "FAIL %s: depth-constraint: boundary node %s is %d hop(s) from start "
                          "%s, need >= %d",
                          g.graph_id.c_str(), d.witness->c_str(), d.witness_distance,
                          g.start_node().c_str(), min_depth);
            res.pass = false;
        }
        res.lines.push_back(buf);
    }
    if (!ds.graphs.empty()) res.stats = graph_stats(ds.graphs);
    res.graphs = std::move(ds.graphs);
    return res;
}

inline int run_validate(const std::filesystem::path& dataset_dir, int min_depth,
                        std::ostream& out) {
    const ValidationResult res = validate_dataset(dataset_dir, min_depth);
    for (const auto& l : res.lines) out << l << "\n";
    for (const auto& w : res.warnings) out << "warning: " << w << "\n";
    if (res.stats) {
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "dataset: %zu graph(s); mean nodes %.2f, mean edges %.2f, "
                      "avg degree %.2f, mean boundary %.2f",
                      res.graphs.size(), res.stats->n_nodes, res.stats->n_edges,
                      res.stats->avg_degree, res.stats->boundary_count);
        out << buf << "\n";
    }
    out << (res.pass ? "validation: PASS" : "validation: FAIL") << "\n";
    return res.pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// eval

struct LevelAggregate {
    std::string label;
    int episodes = 0;
    int failed = 0;
    int null_guesses = 0;
    std::optional<double> mean_distance_km;  // over episodes that guessed
    std::optional<double> mean_score;        // over completed episodes
    std::optional<LevelMetricsDetail> street, city, country;
};

struct BenchReport {
    std::string model;
    std::string dataset;
    std::uint64_t seed = 0;
    std::vector<std::string> levels;
    LevelAggregate overall;
    std::vector<LevelAggregate> per_level;
    std::optional<TrendReport> trend;
    // (continent code, point count, metrics) per continent with guesses
    std::vector<std::tuple<std::string, std::size_t, DiversityReport>> diversity;
};

namespace detail {

inline nlohmann::json metrics_json(const LevelMetricsDetail& m) {
    return nlohmann::json{{"accuracy", m.primary.accuracy},
                          {"recall", m.primary.recall},
                          {"f1", m.primary.f1},
                          {"macro_precision", m.macro_precision},
                          {"micro_precision", m.micro_precision},
                          {"micro_recall", m.micro_recall},
                          {"micro_f1", m.micro_f1}};
}

inline nlohmann::json aggregate_json(const LevelAggregate& a) {
    nlohmann::json j{{"level", a.label},
                     {"episodes", a.episodes},
                     {"failed", a.failed},
                     {"null_guesses", a.null_guesses}};
    j["mean_distance_km"] =
        a.mean_distance_km ? nlohmann::json(*a.mean_distance_km) : nlohmann::json(nullptr);
    j["mean_score"] = a.mean_score ? nlohmann::json(*a.mean_score) : nlohmann::json(nullptr);
    nlohmann::json lm = nlohmann::json::object();
    lm["street"] = a.street ? metrics_json(*a.street) : nlohmann::json(nullptr);
    lm["city"] = a.city ? metrics_json(*a.city) : nlohmann::json(nullptr);
    lm["country"] = a.country ? metrics_json(*a.country) : nlohmann::json(nullptr);
    j["label_metrics"] = lm;
    return j;
}

inline nlohmann::json trend_json(const TrendReport& t, const std::vector<std::string>& levels) {
    return nlohmann::json{{"levels", levels},
                          {"level_means", t.level_means},
                          {"f_stat", t.f_stat},
                          {"f_p", t.f_p},
                          {"spearman_rho", t.spearman_rho},
                          {"spearman_p", t.spearman_p},
                          {"spearman_p_exact", t.spearman_p_exact},
                          {"ols_slope", t.ols_slope},
                          {"ols_p", t.ols_p},
                          {"monotone_pass", t.monotone_pass},
                          {"remark", t.remark}};
}

// Per-level label metrics over the episodes whose ground truth defines the
// level; nullopt when no episode does.
inline std::optional<LevelMetricsDetail> metrics_at(
    const std::vector<std::pair<PlaceLabels, PlaceLabels>>& truth_pred, LabelLevel level) {
    std::vector<PlaceLabels> truth, pred;
    for (const auto& [t, p] : truth_pred) {
        const auto lbl = label_at(t, level);
        if (!lbl || lbl->empty()) continue;
        truth.push_back(t);
        pred.push_back(p);
    }
    if (truth.empty()) return std::nullopt;
    return level_metrics_detail(pred, truth, level);
}

}  // namespace detail

inline nlohmann::json bench_report_to_json(const BenchReport& r, const RunConfig& cfg) {
    nlohmann::json per_level = nlohmann::json::array();
    for (const auto& a : r.per_level) per_level.push_back(detail::aggregate_json(a));
    nlohmann::json diversity = nlohmann::json::array();
    for (const auto& [cont, n, rep] : r.diversity)
        diversity.push_back({{"continent", cont},
                             {"points", n},
                             {"occupancy", rep.occupancy},
                             {"entropy", rep.entropy},
                             {"hull_area", rep.hull_area},
                             {"clark_evans", rep.clark_evans},
                             {"mean_nn", rep.mean_nn}});
    nlohmann::json j{{"model", r.model},
                     {"dataset", r.dataset},
                     {"seed", r.seed},
                     {"levels", r.levels},
                     {"overall", detail::aggregate_json(r.overall)},
                     {"per_level", per_level},
                     {"trend", r.trend ? detail::trend_json(*r.trend, r.levels)
                                       : nlohmann::json(nullptr)},
                     {"diversity", diversity},
                     {"config", cfg.to_json()}};
    return j;
}

// The backend is a parameter so callers can inject one directly; the
// two-argument form below builds it from cfg.backend_spec.
inline int run_eval(const RunConfig& cfg, std::ostream& out, ModelBackend& backend) {
    cfg.validate();

    const ValidationResult val = validate_dataset(cfg.dataset_dir, cfg.min_depth);
    if (!val.pass) {
        for (const auto& l : val.lines) out << l << "\n";
        out << "eval: dataset failed validation\n";
        return 1;
    }

    const auto levels = cfg.effective_levels();
    const auto pano_source = dataset_pano_source(cfg.dataset_dir);

    struct Task {
        const NavGraph* graph;
        const CoverageLevel* level;
    };
    std::vector<Task> tasks;
    for (const auto& g : val.graphs)
        for (const auto& l : levels) tasks.push_back({&g, &l});

    struct Outcome {
        std::optional<EpisodeTrace> trace;
        std::string error;
    };
    std::vector<Outcome> outcomes(tasks.size());

    parallel_for(tasks.size(), cfg.parallelism, [&](std::size_t i) {
        EpisodeConfig ec;
        ec.max_turns = tasks[i].level->max_turns;
        ec.fov_deg = tasks[i].level->fov_deg;
        ec.stop_on_confidence = cfg.stop_on_confidence;
        ec.view.width = cfg.view_width;
        ec.view.height = cfg.view_height;
        ec.view.render = cfg.render_views;
        ec.pano_source = pano_source;
        try {
            outcomes[i].trace = run_episode(*tasks[i].graph, backend, ec);
        } catch (const std::exception& e) {
            outcomes[i].error = e.what();
        }
    });

    // Serial, index-ordered emission keeps every artifact independent of
    // the parallelism setting.
    const std::filesystem::path out_dir = cfg.output_dir;
    const std::filesystem::path trace_dir = out_dir / "traces";
    std::string index_jsonl;
    CsvTable scores;
    scores.header = {"model", "level", "score"};

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const std::string level = tasks[i].level->label;
        nlohmann::json entry;
        if (outcomes[i].trace) {
            const EpisodeTrace& t = *outcomes[i].trace;
            char name[160];
            std::snprintf(name, sizeof(name), "ep%03zu_%s_%s.json", i,
                          sanitize_for_filename(t.graph_id).c_str(),
                          sanitize_for_filename(level).c_str());
            const std::string rel = std::string("traces/") + name;
            write_file_atomic(out_dir / rel,
                              trace_to_json(t, cfg.include_prompts).dump(2) + "\n");
            entry = trace_index_entry(t, rel);
            entry["level"] = level;
            scores.rows.push_back({t.backend_name, level, fmt_g(t.score)});
        } else {
            entry = {{"graph_id", tasks[i].graph->graph_id},
                     {"level", level},
                     {"file", nullptr},
                     {"error", outcomes[i].error}};
        }
        index_jsonl += entry.dump() + "\n";
    }
    write_file_atomic(trace_dir / "index.jsonl", index_jsonl);
    write_file_atomic(out_dir / "scores.csv", format_csv(scores));

    // Aggregate.
    BenchReport rep;
    rep.model = backend.name();
    rep.dataset = cfg.dataset_dir;
    rep.seed = cfg.seed;
    for (const auto& l : levels) rep.levels.push_back(l.label);
    rep.overall.label = "overall";

    GroupedScores grouped;
    std::vector<std::pair<PlaceLabels, PlaceLabels>> all_pairs;
    std::vector<std::pair<GeoPoint, Continent>> guess_points;
    double all_dist = 0.0, all_score = 0.0;
    int all_guessed = 0, all_completed = 0;

    for (std::size_t li = 0; li < levels.size(); ++li) {
        LevelAggregate agg;
        agg.label = levels[li].label;
        std::vector<std::pair<PlaceLabels, PlaceLabels>> pairs;
        std::vector<double> level_scores;
        double dist = 0.0;
        int guessed = 0;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].level->label != levels[li].label) continue;
            agg.episodes++;
            if (!outcomes[i].trace) {
                agg.failed++;
                continue;
            }
            const EpisodeTrace& t = *outcomes[i].trace;
            level_scores.push_back(t.score);
            PlaceLabels pred;  // empty country == no prediction
            if (t.final_guess) {
                pred = t.final_guess->labels;
                dist += *t.distance_km;
                guessed++;
                guess_points.emplace_back(t.final_guess->point,
                                          t.ground_truth_labels.continent);
            } else {
                agg.null_guesses++;
            }
            pairs.emplace_back(t.ground_truth_labels, pred);
        }
        if (guessed > 0) agg.mean_distance_km = dist / guessed;
        if (!level_scores.empty()) {
            double s = 0.0;
            for (double v : level_scores) s += v;
            agg.mean_score = s / static_cast<double>(level_scores.size());
            grouped.levels.push_back(agg.label);
            grouped.samples.push_back(level_scores);
        }
        if (!pairs.empty()) {
            agg.street = detail::metrics_at(pairs, LabelLevel::Street);
            agg.city = detail::metrics_at(pairs, LabelLevel::City);
            agg.country = detail::metrics_at(pairs, LabelLevel::Country);
        }
        rep.overall.episodes += agg.episodes;
        rep.overall.failed += agg.failed;
        rep.overall.null_guesses += agg.null_guesses;
        all_dist += dist;
        all_guessed += guessed;
        for (double v : level_scores) all_score += v;
        all_completed += static_cast<int>(level_scores.size());
        all_pairs.insert(all_pairs.end(), pairs.begin(), pairs.end());
        rep.per_level.push_back(std::move(agg));
    }
    if (all_guessed > 0) rep.overall.mean_distance_km = all_dist / all_guessed;
    if (all_completed > 0) rep.overall.mean_score = all_score / all_completed;
    if (!all_pairs.empty()) {
        rep.overall.street = detail::metrics_at(all_pairs, LabelLevel::Street);
        rep.overall.city = detail::metrics_at(all_pairs, LabelLevel::City);
        rep.overall.country = detail::metrics_at(all_pairs, LabelLevel::Country);
    }
    if (grouped.levels.size() >= 2) {
        try {
            rep.trend = trend_report(grouped);
        } catch (const std::exception&) {
            // Degenerate sample layout: trend stays null.
        }
    }
    for (auto& set : normalize_per_continent(guess_points, rep.model))
        rep.diversity.emplace_back(continent_code(set.source_continent), set.points.size(),
                                   diversity_report(set));

    write_file_atomic(out_dir / "report.json", bench_report_to_json(rep, cfg).dump(2) + "\n");

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "eval: %d episode(s) across %zu level(s); %d failed, %d null guess(es)",
                  rep.overall.episodes, levels.size(), rep.overall.failed,
                  rep.overall.null_guesses);
    out << buf << "\n";
    if (rep.overall.mean_score)
        out << "mean score " << fmt_g(*rep.overall.mean_score, "%.4f") << "\n";
    return 0;
}

inline int run_eval(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    const auto backend = make_backend(cfg.backend_spec);
    return run_eval(cfg, out, *backend);
}

// ---------------------------------------------------------------------------
// diversity

inline int run_diversity(const std::filesystem::path& points_csv,
                         const std::filesystem::path& out_dir, std::ostream& out) {
    std::string text;
    try {
        text = read_text_file(points_csv);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    const CsvTable table = parse_csv(text);
    const std::size_t c_model = table.col("model"), c_cont = table.col("continent");
    const std::size_t c_lat = table.col("lat"), c_lon = table.col("lon");
    if (table.rows.empty()) throw CsvError(2, "no data rows");

    // Rows grouped per model in first-appearance order.
    std::vector<std::string> model_order;
    std::map<std::string, std::vector<std::pair<GeoPoint, Continent>>> per_model;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::size_t line = i + 2;  // header is line 1
        const auto& row = table.rows[i];
        const auto cont = parse_continent(row[c_cont]);
        if (!cont) throw CsvError(line, "unknown continent code '" + row[c_cont] + "'");
        double lat, lon;
        try {
            lat = std::stod(row[c_lat]);
            lon = std::stod(row[c_lon]);
        } catch (const std::exception&) {
            throw CsvError(line, "lat/lon must be numeric");
        }
        std::optional<GeoPoint> pt;
        try {
            pt = GeoPoint{lat, lon};
        } catch (const std::invalid_argument& e) {
            throw CsvError(line, e.what());
        }
        if (!per_model.count(row[c_model])) model_order.push_back(row[c_model]);
        per_model[row[c_model]].emplace_back(*pt, *cont);
    }

    CsvTable div;
    div.header = {"model",     "continent",   "n",      "occupancy",
                  "entropy",   "hull_area",   "clark_evans", "mean_nn"};
    struct RowVals {
        std::string model, cont;
        DiversityReport rep;
    };
    std::vector<RowVals> vals;
    for (const auto& model : model_order) {
        for (const auto& set : normalize_per_continent(per_model[model], model)) {
            const DiversityReport rep = diversity_report(set);
            vals.push_back({model, continent_code(set.source_continent), rep});
            div.rows.push_back({model, continent_code(set.source_continent),
                                std::to_string(set.points.size()), fmt_g(rep.occupancy),
                                fmt_g(rep.entropy), fmt_g(rep.hull_area),
                                fmt_g(rep.clark_evans), fmt_g(rep.mean_nn)});
        }
    }

    // Radar input: each metric min-max normalized across models, within a
    // continent. A continent with one model yields all-zero rows.
    CsvTable radar;
    radar.header = {"model",         "continent",    "occupancy_norm", "entropy_norm",
                    "hull_area_norm", "clark_evans_norm", "mean_nn_norm"};
    std::vector<std::string> cont_order;
    for (const auto& v : vals)
        if (std::find(cont_order.begin(), cont_order.end(), v.cont) == cont_order.end())
            cont_order.push_back(v.cont);
    std::map<std::string, std::vector<std::size_t>> rows_of_cont;
    for (std::size_t i = 0; i < vals.size(); ++i) rows_of_cont[vals[i].cont].push_back(i);
    std::vector<std::array<double, 5>> norm(vals.size());
    for (const auto& cont : cont_order) {
        const auto& idx = rows_of_cont[cont];
        auto metric = [&](auto get) {
            std::vector<double> col;
            for (auto i : idx) col.push_back(get(vals[i].rep));
            return minmax_normalize(col);
        };
        const auto occ = metric([](const DiversityReport& r) { return r.occupancy; });
        const auto ent = metric([](const DiversityReport& r) { return r.entropy; });
        const auto hull = metric([](const DiversityReport& r) { return r.hull_area; });
        const auto ce = metric([](const DiversityReport& r) { return r.clark_evans; });
        const auto nn = metric([](const DiversityReport& r) { return r.mean_nn; });
        for (std::size_t k = 0; k < idx.size(); ++k)
            norm[idx[k]] = {occ[k], ent[k], hull[k], ce[k], nn[k]};
    }
    for (std::size_t i = 0; i < vals.size(); ++i)
        radar.rows.push_back({vals[i].model, vals[i].cont, fmt_g(norm[i][0]), fmt_g(norm[i][1]),
                              fmt_g(norm[i][2]), fmt_g(norm[i][3]), fmt_g(norm[i][4])});

    write_file_atomic(out_dir / "diversity.csv", format_csv(div));
    write_file_atomic(out_dir / "radar.csv", format_csv(radar));
    out << "diversity: " << vals.size() << " (model, continent) group(s) from "
        << table.rows.size() << " point(s)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// trend

// Shared between `trend` and `report`: Table-shaped trend CSV from a
// (model, level, score) table. Level columns follow global first-appearance
// order; models with fewer than two levels are skipped with a warning.
inline CsvTable trend_table(const CsvTable& table, std::vector<std::string>& warnings) {
    const std::size_t c_model = table.col("model"), c_level = table.col("level");
    const std::size_t c_score = table.col("score");
    if (table.rows.empty()) throw CsvError(2, "no data rows");

    std::vector<std::string> model_order, level_order;
    std::map<std::string, std::map<std::string, std::vector<double>>> samples;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        double score;
        try {
            score = std::stod(row[c_score]);
        } catch (const std::exception&) {
            throw CsvError(i + 2, "score must be numeric");
        }
        if (!samples.count(row[c_model])) model_order.push_back(row[c_model]);
        if (std::find(level_order.begin(), level_order.end(), row[c_level]) == level_order.end())
            level_order.push_back(row[c_level]);
        samples[row[c_model]][row[c_level]].push_back(score);
    }

    CsvTable outt;
    outt.header = {"model"};
    for (const auto& l : level_order) outt.header.push_back("mean_" + l);
    for (const char* h : {"f_stat", "f_p", "spearman_rho", "spearman_p", "spearman_p_exact",
                          "ols_slope", "ols_p", "remark"})
        outt.header.push_back(h);

    for (const auto& model : model_order) {
        GroupedScores g;
        for (const auto& l : level_order) {
            auto it = samples[model].find(l);
            if (it == samples[model].end()) continue;
            g.levels.push_back(l);
            g.samples.push_back(it->second);
        }
        if (g.levels.size() < 2) {
            warnings.push_back("model '" + model + "' has fewer than 2 levels; skipped");
            continue;
        }
        TrendReport rep;
        try {
            rep = trend_report(g);
        } catch (const std::exception& e) {
            warnings.push_back("model '" + model + "': " + e.what() + "; skipped");
            continue;
        }
        std::vector<std::string> row{model};
        for (const auto& l : level_order) {
            auto pos = std::find(g.levels.begin(), g.levels.end(), l);
            row.push_back(pos == g.levels.end()
                              ? std::string()
                              : fmt_g(rep.level_means[static_cast<std::size_t>(
                                    pos - g.levels.begin())]));
        }
        row.push_back(fmt_g(rep.f_stat));
        row.push_back(fmt_g(rep.f_p));
        row.push_back(fmt_g(rep.spearman_rho));
        row.push_back(fmt_g(rep.spearman_p));
        row.push_back(fmt_g(rep.spearman_p_exact));
        row.push_back(fmt_g(rep.ols_slope));
        row.push_back(fmt_g(rep.ols_p));
        row.push_back(rep.remark ? "yes" : "no");
        outt.rows.push_back(std::move(row));
    }
    return outt;
}

inline int run_trend(const std::filesystem::path& scores_csv,
                     const std::filesystem::path& out_dir, std::ostream& out) {
    std::string text;
    try {
        text = read_text_file(scores_csv);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    std::vector<std::string> warnings;
    const CsvTable result = trend_table(parse_csv(text), warnings);
    write_file_atomic(out_dir / "trend.csv", format_csv(result));
    for (const auto& w : warnings) out << "warning: " << w << "\n";
    out << "trend: " << result.rows.size() << " model row(s)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// consensus

inline int run_consensus(const std::filesystem::path& dataset_dir,
                         const std::filesystem::path& out_dir, std::ostream& out,
                         int radial_bins = 6, int angular_bins = 8, double percentile = 0.99) {
    ValidationResult val = validate_dataset(dataset_dir, /*min_depth=*/0);
    if (val.graphs.empty() || !val.pass) {
        for (const auto& l : val.lines) out << l << "\n";
        out << "consensus: dataset failed to load\n";
        return 1;
    }
    const PolarHistogram h =
        aggregate_consensus(val.graphs, radial_bins, angular_bins, percentile);
    write_file_atomic(out_dir / "node_counts.csv", node_counts_csv(h));
    write_file_atomic(out_dir / "edge_counts.csv", edge_counts_csv(h));
    write_file_atomic(out_dir / "consensus.svg", consensus_svg(h));
    std::size_t occupied = 0;
    for (std::size_t v : h.node_counts)
        if (v > 0) occupied++;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "consensus: %zu graph(s), r_max %.6f, %zu occupied node bin(s)",
                  val.graphs.size(), h.r_max, occupied);
    out << buf << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report

inline int run_report(const std::filesystem::path& run_dir, std::ostream& out) {
    const auto report_path = run_dir / "report.json";
    const auto scores_path = run_dir / "scores.csv";
    if (!std::filesystem::exists(report_path))
        throw ConfigError("report: missing " + report_path.string() + " (run eval first)");
    nlohmann::json rep;
    try {
        rep = nlohmann::json::parse(read_text_file(report_path));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("report: cannot parse report.json: ") + e.what());
    }

    std::vector<std::string> warnings;
    std::optional<CsvTable> trend;
    if (std::filesystem::exists(scores_path)) {
        const CsvTable scores = parse_csv(read_text_file(scores_path));
        if (!scores.rows.empty()) {
            trend = trend_table(scores, warnings);
            write_file_atomic(run_dir / "trend.csv", format_csv(*trend));
        }
    }

    std::ostringstream md;
    md << "# Evaluation report\n\n";
    md << "- model: `" << rep.value("model", std::string("?")) << "`\n";
    md << "- dataset: `" << rep.value("dataset", std::string("?")) << "`\n";
    md << "- seed: " << rep.value("seed", 0ull) << "\n\n";

    auto num = [](const nlohmann::json& j, const char* key) -> std::string {
        if (!j.contains(key) || j.at(key).is_null()) return "-";
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.4f", j.at(key).get<double>());
        return buf;
    };
    auto acc = [&](const nlohmann::json& level_j, const char* lvl) -> std::string {
        const auto& lm = level_j.at("label_metrics").at(lvl);
        if (lm.is_null()) return "-";
        return num(lm, "accuracy");
    };

    md << "## Per level\n\n";
    md << "| level | episodes | failed | null guesses | mean distance (km) | mean score | "
          "acc(street) | acc(city) | acc(country) |\n";
    md << "|---|---|---|---|---|---|---|---|---|\n";
    auto level_row = [&](const nlohmann::json& a) {
        md << "| " << a.at("level").get<std::string>() << " | " << a.at("episodes") << " | "
           << a.at("failed") << " | " << a.at("null_guesses") << " | "
           << num(a, "mean_distance_km") << " | " << num(a, "mean_score") << " | "
           << acc(a, "street") << " | " << acc(a, "city") << " | " << acc(a, "country")
           << " |\n";
    };
    for (const auto& a : rep.at("per_level")) level_row(a);
    level_row(rep.at("overall"));

    if (!rep.at("trend").is_null()) {
        const auto& t = rep.at("trend");
        md << "\n## Trend across levels\n\n";
        md << "- F = " << num(t, "f_stat") << " (p = " << num(t, "f_p") << ")\n";
        md << "- Spearman rho = " << num(t, "spearman_rho") << " (p = " << num(t, "spearman_p")
           << ")\n";
        md << "- OLS slope = " << num(t, "ols_slope") << " (p = " << num(t, "ols_p") << ")\n";
        md << "- improving trend: " << (t.at("remark").get<bool>() ? "yes" : "no") << "\n";
    }
    if (!rep.at("diversity").empty()) {
        md << "\n## Guess diversity\n\n";
        md << "| continent | points | occupancy | entropy | hull area | Clark-Evans | mean NN "
              "|\n|---|---|---|---|---|---|---|\n";
        for (const auto& d : rep.at("diversity"))
            md << "| " << d.at("continent").get<std::string>() << " | " << d.at("points")
               << " | " << num(d, "occupancy") << " | " << num(d, "entropy") << " | "
               << num(d, "hull_area") << " | " << num(d, "clark_evans") << " | "
               << num(d, "mean_nn") << " |\n";
    }
    write_file_atomic(run_dir / "summary.md", md.str());
    for (const auto& w : warnings) out << "warning: " << w << "\n";
    out << "report: wrote " << (run_dir / "summary.md").string() << "\n";
    return 0;
}

// Maps harness exceptions onto the documented exit codes: 1 for bad input
// or configuration, 2 for runtime failures.
template <typename Fn>
inline int run_command(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const CsvError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const GraphParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace geoaot
