// Command-line front end. Subcommands: validate, eval, diversity, trend,
// consensus, report. A JSON config file (--config) provides defaults in the
// same shape as RunConfig; explicit flags override it. Exit codes: 0 ok,
// 1 bad input/config/validation, 2 runtime failure.
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geoaot/harness.hpp"

namespace {

std::vector<geoaot::CoverageLevel> parse_levels_flag(const std::string& raw, double fov) {
    // "low:2,mid:5,high:10" -> labels with per-level turn budgets.
    std::vector<geoaot::CoverageLevel> levels;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        const std::size_t comma = raw.find(',', pos);
        const std::size_t end = comma == std::string::npos ? raw.size() : comma;
        const std::string part = raw.substr(pos, end - pos);
        const std::size_t colon = part.find(':');
        if (part.empty() || colon == std::string::npos || colon == 0)
            throw geoaot::ConfigError("--levels: expected label:max_turns, got '" + part + "'");
        geoaot::CoverageLevel cl;
        cl.label = part.substr(0, colon);
        try {
            cl.max_turns = std::stoi(part.substr(colon + 1));
        } catch (const std::exception&) {
            throw geoaot::ConfigError("--levels: max_turns must be an integer in '" + part + "'");
        }
        cl.fov_deg = fov;
        levels.push_back(std::move(cl));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return levels;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GeoAoT: navigable-panorama geolocation evaluation harness"};
    app.require_subcommand(1);
    app.fallthrough();  // accept the global flags after the subcommand name too

    std::string dataset, out_dir = "out", config_file;
    std::uint64_t seed = 0;
    int parallelism = 1;
    app.add_option("--dataset", dataset, "Dataset directory (manifest.json + graphs)");
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--seed", seed, "Run seed, recorded in reports")->capture_default_str();
    app.add_option("--parallelism", parallelism, "Worker threads for episode fan-out")
        ->capture_default_str();
    app.add_option("--config", config_file, "JSON config file mirroring the run configuration");

    auto* c_validate = app.add_subcommand("validate", "Parse and validate a dataset");
    int min_depth = 10;
    c_validate->add_option("--min-depth", min_depth, "Required start-to-boundary hop count")
        ->capture_default_str();

    auto* c_eval = app.add_subcommand("eval", "Run episodes and write traces + report");
    std::string backend = "scripted:stop", levels_flag;
    int max_turns = 10;
    double fov = 90.0, stop_conf = -1.0;
    bool no_render = false;
    int view_size = 96;
    c_eval->add_option("--backend", backend,
                       "scripted:stop | replay:<file> | chat[:<model>]")
        ->capture_default_str();
    c_eval->add_option("--max-turns", max_turns, "Model calls per episode minus one")
        ->capture_default_str();
    c_eval->add_option("--fov", fov, "Horizontal field of view, degrees")->capture_default_str();
    c_eval->add_option("--levels", levels_flag,
                       "Coverage levels as label:max_turns[,label:max_turns...]");
    c_eval->add_option("--stop-on-confidence", stop_conf,
                       "End the episode once a hypothesis reaches this confidence");
    c_eval->add_flag("--no-render", no_render, "Descriptor-only observations (no view images)");
    c_eval->add_option("--view-size", view_size, "Rendered view width and height, pixels")
        ->capture_default_str();

    auto* c_div = app.add_subcommand("diversity", "Point-pattern metrics from a points CSV");
    std::string points_csv;
    c_div->add_option("--points", points_csv, "CSV with columns model,continent,lat,lon")
        ->required();

    auto* c_trend = app.add_subcommand("trend", "Across-level trend statistics from a scores CSV");
    std::string scores_csv;
    c_trend->add_option("--scores", scores_csv, "CSV with columns model,level,score")->required();

    auto* c_cons = app.add_subcommand("consensus", "Aggregate polar histogram + SVG");
    int radial = 6, angular = 8;
    double percentile = 0.99;
    c_cons->add_option("--radial", radial, "Radial bin count")->capture_default_str();
    c_cons->add_option("--angular", angular, "Angular bin count")->capture_default_str();
    c_cons->add_option("--percentile", percentile, "Radius percentile defining the outer ring")
        ->capture_default_str();

    auto* c_report = app.add_subcommand("report", "Summarize a finished eval output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    return geoaot::run_command(std::cerr, [&]() -> int {
        geoaot::RunConfig cfg;
        if (!config_file.empty()) {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(geoaot::read_text_file(config_file));
            } catch (const std::exception& e) {
                throw geoaot::ConfigError(std::string("config file: ") + e.what());
            }
            cfg.apply_json(doc);
        }
        if (app.count("--dataset")) cfg.dataset_dir = dataset;
        if (app.count("--out")) cfg.output_dir = out_dir;
        if (app.count("--seed")) cfg.seed = seed;
        if (app.count("--parallelism")) cfg.parallelism = parallelism;

        if (*c_validate) {
            if (cfg.dataset_dir.empty()) throw geoaot::ConfigError("--dataset is required");
            if (c_validate->count("--min-depth")) cfg.min_depth = min_depth;
            return geoaot::run_validate(cfg.dataset_dir, cfg.min_depth, std::cout);
        }
        if (*c_eval) {
            if (c_eval->count("--backend")) cfg.backend_spec = backend;
            if (c_eval->count("--max-turns")) cfg.max_turns = max_turns;
            if (c_eval->count("--fov")) cfg.fov_deg = fov;
            if (c_eval->count("--stop-on-confidence")) cfg.stop_on_confidence = stop_conf;
            if (c_eval->count("--no-render")) cfg.render_views = false;
            if (c_eval->count("--view-size")) {
                cfg.view_width = view_size;
                cfg.view_height = view_size;
            }
            if (c_eval->count("--levels"))
                cfg.coverage_levels = parse_levels_flag(levels_flag, cfg.fov_deg);
            return geoaot::run_eval(cfg, std::cout);
        }
        if (*c_div) return geoaot::run_diversity(points_csv, cfg.output_dir, std::cout);
        if (*c_trend) return geoaot::run_trend(scores_csv, cfg.output_dir, std::cout);
        if (*c_cons) {
            if (cfg.dataset_dir.empty()) throw geoaot::ConfigError("--dataset is required");
            return geoaot::run_consensus(cfg.dataset_dir, cfg.output_dir, std::cout, radial,
                                         angular, percentile);
        }
        if (*c_report) return geoaot::run_report(cfg.output_dir, std::cout);
        return 2;  // unreachable: require_subcommand(1)
    });
}
