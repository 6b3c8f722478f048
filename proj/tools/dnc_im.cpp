// dnc-im: command-line front end for divide-and-conquer possibility contours.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dncim/dncim.hpp"

#ifndef DNCIM_GIT_DESCRIBE
#define DNCIM_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;
using namespace dncim;
using io::Json;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    int workers = 0;
    std::string output;
};

struct ModelOptions {
    std::string family;
    double tau2 = 1.0;
    double c = 0.8;
    double stable_alpha = 1.5;
};

void add_common(CLI::App* sub, Common& common)
{
    sub->add_option("--config", common.config, "TOML experiment config");
    sub->add_option("--seed", common.seed, "Master seed (overrides the config)");
    sub->add_option("--workers", common.workers, "Worker threads (default: DNC_IM_WORKERS or all cores)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--output", common.output, "Output directory");
}

void add_model(CLI::App* sub, ModelOptions& m)
{
    sub->add_option("--model", m.family, "gaussian | exponential | gk | stable");
    sub->add_option("--tau2", m.tau2, "Known variance (gaussian)");
    sub->add_option("--c", m.c, "g-and-k c constant");
    sub->add_option("--stable-alpha", m.stable_alpha, "Stability index (stable)");
}

std::string config_text(const Common& common)
{
    if (common.config.empty()) throw ConfigError("--config is required for this subcommand");
    return io::read_text(common.config);
}

ModelSpec resolve_model(const ModelOptions& m, const Common& common)
{
    if (!m.family.empty()) {
        toml::table t;
        t.insert("family", m.family);
        t.insert("tau2", m.tau2);
        t.insert("c", m.c);
        t.insert("alpha", m.stable_alpha);
        return model_from_toml(t);
    }
    if (!common.config.empty()) return load_config_text(config_text(common), common.config).model;
    throw ConfigError("no model given: pass --model or --config");
}

Json provenance(const std::string& command, const std::string& hashed, std::uint64_t seed)
{
    return Json{{"command", command},
                {"config_hash", io::hex64(io::fnv1a(hashed))},
                {"seed", seed},
                {"git_describe", DNCIM_GIT_DESCRIBE}};
}

ExperimentConfig experiment_config(const Common& common, std::string& text)
{
    text = config_text(common);
    ExperimentConfig cfg = load_config_text(text, common.config);
    if (common.seed) cfg.seed = *common.seed;
    if (common.workers > 0) cfg.workers = common.workers;
    if (!common.output.empty()) cfg.output_dir = common.output;
    return cfg;
}

fs::path output_dir(const Common& common, const char* fallback)
{
    return common.output.empty() ? fs::path(fallback) : fs::path(common.output);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Divide-and-conquer inferential models: block summaries, possibility contours, confidence regions"};
    app.require_subcommand(1);

    Common common;
    ModelOptions model_opts;

    // simulate ------------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "Draw one dataset at the config's truth");
    add_common(simulate, common);

    // summarize -----------------------------------------------------------
    std::string data_path;
    std::size_t n_blocks = 1;
    auto* summarize = app.add_subcommand("summarize", "Data file -> block summary JSONs");
    add_common(summarize, common);
    add_model(summarize, model_opts);
    summarize->add_option("--input", data_path, "One-column CSV with header y")->required();
    summarize->add_option("--blocks", n_blocks, "Number of blocks to partition into")->check(CLI::PositiveNumber);

    // combine -------------------------------------------------------------
    std::vector<std::string> summary_paths;
    auto* combine_cmd = app.add_subcommand("combine", "Block summary JSONs -> aggregated summary JSON");
    add_common(combine_cmd, common);
    combine_cmd->add_option("--inputs", summary_paths, "Block summary JSON files")->required();

    // contour -------------------------------------------------------------
    std::string aggregated_path;
    std::string kind_name = "valid";
    std::size_t mc_size = 3000;
    std::optional<int> coordinate;
    std::size_t grid_points = 201;
    auto* contour_cmd = app.add_subcommand("contour", "Aggregated summary + model -> contour CSV and JSON sidecar");
    add_common(contour_cmd, common);
    add_model(contour_cmd, model_opts);
    contour_cmd->add_option("--input", aggregated_path, "Aggregated summary JSON")->required();
    contour_cmd->add_option("--kind", kind_name, "large_n | valid | profile | importance | exp_closed_form");
    contour_cmd->add_option("--M", mc_size, "Monte Carlo size")->check(CLI::PositiveNumber);
    contour_cmd->add_option("--coordinate", coordinate, "1-based coordinate for a marginal contour");
    contour_cmd->add_option("--grid-points", grid_points, "Grid points per axis")->check(CLI::Range(2, 100000));

    // ci ------------------------------------------------------------------
    std::string sidecar_path;
    std::vector<double> alphas;
    auto* ci = app.add_subcommand("ci", "Contour sidecar + alpha -> confidence region JSON and CSV");
    add_common(ci, common);
    ci->add_option("--contour", sidecar_path, "Contour JSON sidecar")->required();
    ci->add_option("--alpha", alphas, "Level(s) alpha in (0, 1)")->required();

    // coverage / ecdf / merge ---------------------------------------------
    auto* coverage = app.add_subcommand("coverage", "Config -> coverage table CSV");
    add_common(coverage, common);
    auto* ecdf = app.add_subcommand("ecdf", "Config -> validity ECDF CSVs");
    add_common(ecdf, common);
    auto* merge = app.add_subcommand("merge", "Config -> merging discrepancy CSV");
    add_common(merge, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) {
            std::string text;
            const auto cfg = experiment_config(common, text);
            RandomStream rng = RandomStream(cfg.seed).split(StreamTag::Data, 0);
            const Dataset data = sample(cfg.model, cfg.truth, cfg.n(), rng);
            const auto dir = output_dir(common, cfg.output_dir.string().c_str());
            io::write_text(dir / "data.csv", io::data_csv(data));
            io::write_json(dir / "data.json", provenance("simulate", text, cfg.seed));
            std::cout << (dir / "data.csv").string() << "\n";
        } else if (summarize->parsed()) {
            const ModelSpec model = resolve_model(model_opts, common);
            const Dataset data = io::read_data_csv(data_path);
            const std::uint64_t seed = common.seed.value_or(0);
            RandomStream part_rng = RandomStream(seed).split(StreamTag::Partition, 0);
            const auto blocks = n_blocks == 1 ? std::vector<Dataset>{data} : partition(data, n_blocks, part_rng);
            std::vector<BlockSummary> out(blocks.size());
            parallel_for(blocks.size(), resolve_workers(common.workers),
                         [&](std::size_t b) { out[b] = summarize_block(model, blocks[b]); });
            Json all = Json::array();
            for (std::size_t b = 0; b < out.size(); ++b) {
                Json j = io::to_json(out[b]);
                j["model"] = model.name();
                j["parameters"] = io::parameters_to_json(model, out[b].theta_hat);
                if (!common.output.empty()) {
                    char name[32];
                    std::snprintf(name, sizeof name, "block_%03zu.json", b + 1);
                    io::write_json(fs::path(common.output) / name, j);
                }
                all.push_back(std::move(j));
            }
            std::cout << (all.size() == 1 ? all[0] : all).dump(2) << "\n";
        } else if (combine_cmd->parsed()) {
            std::vector<BlockSummary> blocks;
            for (const auto& p : summary_paths) {
                const Json j = io::read_json(p);
                if (j.is_array())
                    for (const auto& b : j)
                        blocks.push_back(io::block_summary_from_json(b));
                else
                    blocks.push_back(io::block_summary_from_json(j));
            }
            const Json j = io::to_json(combine(std::move(blocks)));
            if (!common.output.empty()) io::write_json(fs::path(common.output) / "aggregated.json", j);
            std::cout << j.dump(2) << "\n";
        } else if (contour_cmd->parsed()) {
            const ModelSpec model = resolve_model(model_opts, common);
            const AggregatedSummary agg = io::aggregated_from_json(io::read_json(aggregated_path));
            if (agg.dim() != model.dim()) throw ConfigError("aggregated summary dimension does not match the model");
            const ContourKind kind = contour_kind_from_string(kind_name);
            const std::uint64_t seed = common.seed.value_or(0);
            const RandomStream rng(seed);
            const unsigned workers = resolve_workers(common.workers);
            std::optional<int> q;
            if (coordinate) {
                if (*coordinate < 1 || *coordinate > model.dim()) throw ConfigError("--coordinate out of range");
                q = *coordinate - 1;
            }
            if (kind == ContourKind::ProfileMarginal && !q) throw ConfigError("--kind profile needs --coordinate");
            const auto axis = default_axis(agg, q.value_or(0), grid_points);
            auto joint_grid = model.dim() == 1 ? scalar_grid(axis) : default_grid(agg, grid_points);
            Contour c;
            switch (kind) {
            case ContourKind::LargeN:
                c = q && model.dim() > 1 ? make_large_n_profile(agg, *q, axis) : make_large_n_contour(agg, joint_grid);
                break;
            case ContourKind::ValidAnchored:
            case ContourKind::ProfileMarginal:
                if (q && model.dim() > 1)
                    c = profile_contour_anchored(model, agg, *q, axis, mc_size, agg.theta_check, rng, workers);
                else
                    c = valid_contour_anchored(model, agg, joint_grid, mc_size, agg.theta_check, rng, workers);
                break;
            case ContourKind::ValidImportance:
                c = valid_contour_importance(model, agg, joint_grid, mc_size, agg.theta_check, rng,
                                             summary_log_density, workers);
                break;
            case ContourKind::ExponentialClosedForm:
                if (model.family() != Family::Exponential)
                    throw UnsupportedModel("exp_closed_form requires the exponential model");
                c = make_exp_closed_form_contour(agg, joint_grid);
                break;
            case ContourKind::OracleFullData:
                throw ConfigError("oracle_mc needs the full dataset; it is available through coverage configs");
            }
            const auto dir = output_dir(common, ".");
            io::write_text(dir / "contour.csv", io::contour_csv(c, model.coordinate_names()));
            Json side = io::contour_sidecar(c);
            side["model"] = model.name();
            side["provenance"] = provenance("contour", io::read_text(aggregated_path) + kind_name, seed);
            io::write_json(dir / "contour.json", side);
            std::cout << (dir / "contour.csv").string() << "\n";
        } else if (ci->parsed()) {
            const Json side = io::read_json(sidecar_path);
            const Contour c = io::contour_from_sidecar(side);
            toml::table model_table;
            model_table.insert("family", side.value("model", std::string("exponential")));
            const ModelSpec model = model_from_toml(model_table);
            Json rows = Json::array();
            for (double a : alphas) {
                const auto region = level_set(c, a);
                for (auto& r : io::region_rows(region, model.coordinate_names()))
                    rows.push_back(std::move(r));
            }
            if (!common.output.empty()) {
                io::write_json(fs::path(common.output) / "region.json", rows);
                io::write_text(fs::path(common.output) / "region.csv", io::region_csv(rows));
            }
            std::cout << rows.dump(2) << "\n";
        } else if (coverage->parsed() || ecdf->parsed()) {
            std::string text;
            const auto cfg = experiment_config(common, text);
            const auto table = run_coverage(cfg, common.workers);
            const fs::path dir = cfg.output_dir;
            Json side = provenance(coverage->parsed() ? "coverage" : "ecdf", text, cfg.seed);
            side["n_reps"] = table.n_reps;
            side["skipped_replicates"] = table.skipped_replicates;
            side["used_replicates"] = table.n_reps - table.skipped_replicates;
            if (coverage->parsed()) {
                const std::string csv = coverage_csv(cfg.model, table);
                io::write_text(dir / "coverage.csv", csv);
                io::write_json(dir / "coverage.json", side);
                std::cout << csv;
            } else {
                const auto results = validity_ecdf(table);
                io::write_text(dir / "ecdf.csv", ecdf_csv(cfg.model, results));
                const std::string summary = ecdf_summary_csv(cfg.model, results);
                io::write_text(dir / "ecdf_summary.csv", summary);
                io::write_json(dir / "ecdf.json", side);
                std::cout << summary;
            }
        } else if (merge->parsed()) {
            std::string text;
            const auto cfg = experiment_config(common, text);
            const auto rows = run_merging_check(cfg, common.workers);
            const std::string csv = merge_csv(rows);
            io::write_text(cfg.output_dir / "merge.csv", csv);
            io::write_json(cfg.output_dir / "merge.json", provenance("merge", text, cfg.seed));
            std::cout << csv;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const UnsupportedModel& e) {
        std::cerr << "unsupported: " << e.what() << "\n";
        return 2;
    } catch (const EmptyHypothesis& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
