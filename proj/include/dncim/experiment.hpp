#pragma once

// Simulation harness: TOML experiment configs, coverage tables, validity
// ECDFs and the merging check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <toml.hpp>

#include "dncim/contours.hpp"
#include "dncim/error.hpp"
#include "dncim/inference.hpp"
#include "dncim/models.hpp"
#include "dncim/parallel.hpp"
#include "dncim/random.hpp"
#include "dncim/summaries.hpp"

namespace dncim {

struct MergeConfig {
    std::vector<std::size_t> n_schedule{30, 300, 3000};
    std::vector<std::size_t> block_weights{1, 2, 3};
    std::size_t M = 100000;
    std::size_t grid_points = 201;
};

struct ExperimentConfig {
    ModelSpec model = ModelSpec::exponential();
    Vector truth;
    std::vector<std::size_t> block_sizes;
    std::size_t M = 3000;
    std::size_t n_reps = 1000;
    std::vector<double> alphas;
    std::vector<ContourKind> kinds;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "results";
    int workers = 0;
    MergeConfig merge;

    std::size_t n() const
    {
        std::size_t total = 0;
        for (auto s : block_sizes)
            total += s;
        return total;
    }

    void validate() const
    {
        if (truth.size() != model.dim()) throw ConfigError("truth has the wrong dimension for model " + model.name());
        if (!model.in_bounds(truth)) throw ConfigError("truth lies outside the parameter space");
        if (block_sizes.empty()) throw ConfigError("no blocks configured");
        for (auto s : block_sizes)
            if (s == 0) throw ConfigError("block sizes must be positive");
        if (M == 0) throw ConfigError("M must be positive");
        if (n_reps == 0) throw ConfigError("n_reps must be positive");
        if (alphas.empty()) throw ConfigError("alphas must be non-empty");
        for (std::size_t i = 0; i < alphas.size(); ++i) {
            if (!(alphas[i] > 0.0 && alphas[i] < 1.0)) throw ConfigError("alphas must lie in (0, 1)");
            if (i > 0 && !(alphas[i] > alphas[i - 1])) throw ConfigError("alphas must be sorted strictly ascending");
        }
        if (kinds.empty()) throw ConfigError("contour kinds must be non-empty");
        for (auto k : kinds) {
            if (k == ContourKind::ExponentialClosedForm && model.family() != Family::Exponential)
                throw ConfigError("kind exp_closed_form requires the exponential model");
            if (k == ContourKind::OracleFullData && !model.has_closed_form())
                throw ConfigError("kind oracle_mc requires the gaussian or exponential model");
            if (k == ContourKind::ValidImportance || k == ContourKind::ProfileMarginal)
                throw ConfigError("kind " + to_string(k) +
                                  " is not a coverage kind; use valid (marginals are reported for p > 1)");
        }
    }
};

namespace detail {

template <class T>
T required(const toml::table& t, const char* key, const std::string& where)
{
    const auto v = t[key].value<T>();
    if (!v) throw ConfigError(where + ": missing or mistyped key '" + key + "'");
    return *v;
}

inline std::vector<double> number_array(const toml::node_view<const toml::node>& node, const std::string& what)
{
    const auto* arr = node.as_array();
    if (!arr) throw ConfigError(what + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& el : *arr) {
        const auto v = el.value<double>();
        if (!v) throw ConfigError(what + ": expected an array of numbers");
        out.push_back(*v);
    }
    return out;
}

inline std::vector<std::size_t> size_array(const toml::node_view<const toml::node>& node, const std::string& what)
{
    const auto* arr = node.as_array();
    if (!arr) throw ConfigError(what + ": expected an array of positive integers");
    std::vector<std::size_t> out;
    for (const auto& el : *arr) {
        const auto v = el.value<std::int64_t>();
        if (!v || *v <= 0) throw ConfigError(what + ": expected an array of positive integers");
        out.push_back(static_cast<std::size_t>(*v));
    }
    return out;
}

inline std::size_t positive_size(const toml::table& t, const char* key, const std::string& where)
{
    const auto v = required<std::int64_t>(t, key, where);
    if (v <= 0) throw ConfigError(where + ": '" + key + "' must be positive");
    return static_cast<std::size_t>(v);
}

} // namespace detail

/// Model from a [model] table: family = gaussian | exponential | gk | stable,
/// plus tau2 (gaussian), c (gk), alpha (stable).
inline ModelSpec model_from_toml(const toml::table& t)
{
    const auto family = detail::required<std::string>(t, "family", "[model]");
    if (family == "gaussian") {
        const double tau2 = t["tau2"].value_or(1.0);
        if (!(tau2 > 0.0)) throw ConfigError("[model]: tau2 must be positive");
        return ModelSpec::gaussian_known_var(tau2);
    }
    if (family == "exponential") return ModelSpec::exponential();
    if (family == "gk") return ModelSpec::g_and_k(t["c"].value_or(0.8));
    if (family == "stable") {
        const double a = t["alpha"].value_or(1.5);
        if (!(a > 0.0 && a <= 2.0)) throw ConfigError("[model]: stable alpha must lie in (0, 2]");
        return ModelSpec::alpha_stable(a);
    }
    throw ConfigError("[model]: unknown family '" + family + "' (expected gaussian, exponential, gk or stable)");
}

inline ExperimentConfig config_from_toml(const toml::table& root)
{
    ExperimentConfig cfg;
    const auto* model = root["model"].as_table();
    if (!model) throw ConfigError("config: missing [model] table");
    cfg.model = model_from_toml(*model);

    const auto* ex = root["experiment"].as_table();
    if (!ex) throw ConfigError("config: missing [experiment] table");
    const std::string where = "[experiment]";
    const auto truth = detail::number_array((*ex)["truth"], where + " truth");
    cfg.truth = Eigen::Map<const Vector>(truth.data(), static_cast<int>(truth.size()));

    if (ex->contains("block_sizes")) {
        cfg.block_sizes = detail::size_array((*ex)["block_sizes"], where + " block_sizes");
    } else {
        const auto n = detail::positive_size(*ex, "n", where);
        const auto b = detail::positive_size(*ex, "B", where);
        if (b > n) throw ConfigError(where + ": B must not exceed n");
        cfg.block_sizes = balanced_block_sizes(n, b);
    }
    cfg.M = detail::positive_size(*ex, "M", where);
    cfg.n_reps = detail::positive_size(*ex, "n_reps", where);
    cfg.alphas = detail::number_array((*ex)["alphas"], where + " alphas");
    if (const auto* kinds = (*ex)["kinds"].as_array()) {
        for (const auto& k : *kinds) {
            const auto s = k.value<std::string>();
            if (!s) throw ConfigError(where + ": kinds must be strings");
            cfg.kinds.push_back(contour_kind_from_string(*s));
        }
    } else {
        cfg.kinds = {ContourKind::ValidAnchored, ContourKind::LargeN};
    }
    const auto seed = detail::required<std::int64_t>(*ex, "seed", where);
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.output_dir = (*ex)["output_dir"].value_or(std::string("results"));
    cfg.workers = static_cast<int>((*ex)["workers"].value_or(std::int64_t{0}));

    if (const auto* mg = root["merge"].as_table()) {
        if (mg->contains("n_schedule")) cfg.merge.n_schedule = detail::size_array((*mg)["n_schedule"], "[merge] n_schedule");
        if (mg->contains("block_weights"))
            cfg.merge.block_weights = detail::size_array((*mg)["block_weights"], "[merge] block_weights");
        if (mg->contains("M")) cfg.merge.M = detail::positive_size(*mg, "M", "[merge]");
        if (mg->contains("grid_points")) cfg.merge.grid_points = detail::positive_size(*mg, "grid_points", "[merge]");
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config_text(const std::string& text, const std::string& name = "config")
{
    try {
        return config_from_toml(toml::parse(text, name));
    } catch (const toml::parse_error& e) {
        throw ConfigError(name + ": " + std::string(e.description()));
    }
}

// ---------------------------------------------------------------------------
// Replicates
// ---------------------------------------------------------------------------

/// Per-replicate outcome: for every (kind, coordinate) row, containment and
/// length at each alpha, and the contour value at the truth.
struct ReplicateOutcome {
    bool skipped = false;
    std::vector<std::vector<char>> covered;
    std::vector<std::vector<double>> length;
    std::vector<double> value_at_truth;
};

struct CoverageRow {
    ContourKind kind;
    /// Empty for the joint row of a p > 1 model.
    std::optional<int> coordinate;
};

inline std::vector<CoverageRow> coverage_rows(const ExperimentConfig& cfg)
{
    std::vector<CoverageRow> rows;
    const int p = cfg.model.dim();
    for (auto k : cfg.kinds) {
        if (p == 1) {
            rows.push_back({k, 0});
            continue;
        }
        rows.push_back({k, std::nullopt});
        for (int q = 0; q < p; ++q)
            rows.push_back({k, q});
    }
    return rows;
}

namespace detail {

template <class ContourFor>
void fill_rows(const ExperimentConfig& cfg, const std::vector<CoverageRow>& rows, const Dataset& data,
               const AggregatedSummary& agg, ContourFor& contour_for, const RandomStream& valid_rng,
               ReplicateOutcome& out)
{
    const int p = cfg.model.dim();
    for (const auto& row : rows) {
        const bool marginal = row.coordinate && p > 1;
        const Vector at = marginal ? Vector::Constant(1, cfg.truth[*row.coordinate]) : cfg.truth;
        std::vector<char> cov;
        std::vector<double> len;
        if (row.kind == ContourKind::OracleFullData) {
            const double v = oracle_contour_mc(cfg.model, data, cfg.truth, cfg.M, valid_rng.split(StreamTag::Oracle, 0));
            for (double a : cfg.alphas) {
                cov.push_back(v > a);
                len.push_back(std::nan(""));
            }
            out.value_at_truth.push_back(v);
        } else {
            const Contour c = contour_for(row);
            for (double a : cfg.alphas) {
                const auto region = level_set(c, a);
                cov.push_back(region.contains(at));
                len.push_back(row.coordinate ? region.length() : std::nan(""));
            }
            out.value_at_truth.push_back(c.evaluate(at));
        }
        out.covered.push_back(std::move(cov));
        out.length.push_back(std::move(len));
    }
}

} // namespace detail

inline ReplicateOutcome run_replicate(const ExperimentConfig& cfg, const std::vector<CoverageRow>& rows,
                                      std::size_t rep)
{
    const RandomStream master(cfg.seed);
    RandomStream data_rng = master.split(StreamTag::Data, rep);
    RandomStream part_rng = master.split(StreamTag::Partition, rep);
    const RandomStream valid_rng = master.split(StreamTag::Validify, rep);

    ReplicateOutcome out;
    const Dataset data = sample(cfg.model, cfg.truth, cfg.n(), data_rng);
    AggregatedSummary agg;
    try {
        const auto blocks = partition_sizes(data, cfg.block_sizes, part_rng);
        std::vector<BlockSummary> summaries;
        for (const auto& b : blocks)
            summaries.push_back(summarize_block(cfg.model, b));
        agg = combine(std::move(summaries));
        if (!cfg.model.in_bounds(agg.theta_check)) throw OptimFailure("combined estimate outside the parameter space");
    } catch (const NumericalError&) {
        out.skipped = true;
        return out;
    }

    const int p = cfg.model.dim();
    std::optional<ValidificationSample> sample_v;
    auto contour_for = [&](const CoverageRow& row) -> Contour {
        switch (row.kind) {
        case ContourKind::LargeN:
            return row.coordinate && p > 1 ? make_large_n_profile(agg, *row.coordinate, {})
                                           : make_large_n_contour(agg, {});
        case ContourKind::ValidAnchored:
            if (!sample_v)
                sample_v = simulate_validification(cfg.model, agg.block_sizes(), agg.theta_check, cfg.M, valid_rng);
            return row.coordinate && p > 1 ? profile_contour(agg, *sample_v, *row.coordinate, {})
                                           : anchored_contour(agg, *sample_v, {});
        case ContourKind::ExponentialClosedForm: return make_exp_closed_form_contour(agg, {});
        default: throw DomainError("unsupported coverage kind");
        }
    };

    // A validification sample that exhausts its redraw budget skips the
    // replicate like a failed observed-data summary.
    try {
        detail::fill_rows(cfg, rows, data, agg, contour_for, valid_rng, out);
    } catch (const NumericalError&) {
        return ReplicateOutcome{true, {}, {}, {}};
    }
    return out;
}

struct CoverageTable {
    std::vector<CoverageRow> rows;
    std::vector<double> alphas;
    /// Percent, [row][alpha].
    std::vector<std::vector<double>> coverage;
    /// Mean region length x 100, [row][alpha]; NaN for joint rows of p > 1.
    std::vector<std::vector<double>> length_x100;
    std::size_t n_reps = 0;
    std::size_t skipped_replicates = 0;
    /// Contour value at the truth per row, sorted ascending, over used replicates.
    std::vector<std::vector<double>> values_at_truth;
};

inline CoverageTable run_coverage(const ExperimentConfig& cfg, int workers_requested = 0)
{
    cfg.validate();
    const unsigned workers = resolve_workers(workers_requested != 0 ? workers_requested : cfg.workers);
    const auto rows = coverage_rows(cfg);
    std::vector<ReplicateOutcome> outcomes(cfg.n_reps);
    parallel_for(cfg.n_reps, workers, [&](std::size_t r) { outcomes[r] = run_replicate(cfg, rows, r); });

    CoverageTable t;
    t.rows = rows;
    t.alphas = cfg.alphas;
    t.n_reps = cfg.n_reps;
    const std::size_t na = cfg.alphas.size();
    t.coverage.assign(rows.size(), std::vector<double>(na, 0.0));
    t.length_x100.assign(rows.size(), std::vector<double>(na, 0.0));
    t.values_at_truth.assign(rows.size(), {});
    for (const auto& o : outcomes) {
        if (o.skipped) {
            ++t.skipped_replicates;
            continue;
        }
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t a = 0; a < na; ++a) {
                t.coverage[r][a] += o.covered[r][a];
                t.length_x100[r][a] += o.length[r][a];
            }
            t.values_at_truth[r].push_back(o.value_at_truth[r]);
        }
    }
    const std::size_t used = cfg.n_reps - t.skipped_replicates;
    if (used == 0) throw NumericalError("run_coverage: every replicate was skipped");
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t a = 0; a < na; ++a) {
            t.coverage[r][a] *= 100.0 / static_cast<double>(used);
            t.length_x100[r][a] *= 100.0 / static_cast<double>(used);
        }
        std::sort(t.values_at_truth[r].begin(), t.values_at_truth[r].end());
    }
    return t;
}

inline std::string format_fixed(double x, int digits)
{
    if (std::isnan(x)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

inline std::string row_coordinate_name(const ModelSpec& model, const CoverageRow& row)
{
    return row.coordinate ? model.coordinate_names()[static_cast<std::size_t>(*row.coordinate)] : "joint";
}

/// Wide CSV: kind,coordinate,metric then one column per nominal level
/// 100(1 - alpha), ascending.
inline std::string coverage_csv(const ModelSpec& model, const CoverageTable& t)
{
    const std::size_t na = t.alphas.size();
    std::string out = "kind,coordinate,metric";
    for (std::size_t a = na; a-- > 0;)
        out += "," + format_fixed(100.0 * (1.0 - t.alphas[a]), 1);
    out += "\n";
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string head = to_string(t.rows[r].kind) + "," + row_coordinate_name(model, t.rows[r]);
        out += head + ",coverage";
        for (std::size_t a = na; a-- > 0;)
            out += "," + format_fixed(t.coverage[r][a], 2);
        out += "\n";
        if (!t.rows[r].coordinate || t.rows[r].kind == ContourKind::OracleFullData) continue;
        out += head + ",length_x100";
        for (std::size_t a = na; a-- > 0;)
            out += "," + format_fixed(t.length_x100[r][a], 2);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validity ECDF
// ---------------------------------------------------------------------------

/// sup_alpha {ECDF(alpha) - alpha} for a sorted sample in [0, 1], with
/// ECDF(alpha) = #{v <= alpha} / N.
inline double dkw_statistic(const std::vector<double>& sorted)
{
    const double n = static_cast<double>(sorted.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        sup = std::max(sup, static_cast<double>(i + 1) / n - sorted[i]);
    }
    return sup;
}

struct EcdfResult {
    CoverageRow row;
    std::vector<double> sorted_values;
    double dkw_statistic;
};

inline std::vector<EcdfResult> validity_ecdf(const CoverageTable& t)
{
    std::vector<EcdfResult> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        out.push_back({t.rows[r], t.values_at_truth[r], dkw_statistic(t.values_at_truth[r])});
    return out;
}

inline std::vector<EcdfResult> run_validity_ecdf(const ExperimentConfig& cfg, int workers_requested = 0)
{
    return validity_ecdf(run_coverage(cfg, workers_requested));
}

inline std::string ecdf_csv(const ModelSpec& model, const std::vector<EcdfResult>& results)
{
    std::string out = "kind,coordinate,rank,value\n";
    for (const auto& r : results)
        for (std::size_t i = 0; i < r.sorted_values.size(); ++i)
            out += to_string(r.row.kind) + "," + row_coordinate_name(model, r.row) + "," + std::to_string(i + 1) + "," +
                   format_fixed(r.sorted_values[i], 8) + "\n";
    return out;
}

inline std::string ecdf_summary_csv(const ModelSpec& model, const std::vector<EcdfResult>& results)
{
    std::string out = "kind,coordinate,n,dkw_statistic,dkw_band\n";
    for (const auto& r : results) {
        const double n = static_cast<double>(r.sorted_values.size());
        out += to_string(r.row.kind) + "," + row_coordinate_name(model, r.row) + "," +
               std::to_string(r.sorted_values.size()) + "," + format_fixed(r.dkw_statistic, 6) + "," +
               format_fixed(1.36 / std::sqrt(n), 6) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Merging
// ---------------------------------------------------------------------------

struct MergeRow {
    std::size_t n;
    std::vector<std::size_t> block_sizes;
    /// sup |pi_valid - pi_large_n| over the local grid.
    double valid_vs_large_n;
    /// sup |pi_large_n - pi_full| (full-data contour: closed form or exact Gaussian).
    double large_n_vs_full;
    double valid_vs_full;
};

/// Block sizes proportional to the weights with the remainder on the last block.
inline std::vector<std::size_t> weighted_block_sizes(std::size_t n, const std::vector<std::size_t>& weights)
{
    std::size_t total_w = 0;
    for (auto w : weights)
        total_w += w;
    if (total_w == 0) throw ConfigError("block weights must be positive");
    std::vector<std::size_t> sizes;
    std::size_t used = 0;
    for (std::size_t b = 0; b + 1 < weights.size(); ++b) {
        sizes.push_back(n * weights[b] / total_w);
        used += sizes.back();
    }
    sizes.push_back(n - used);
    for (auto s : sizes)
        if (s == 0) throw ConfigError("merge: n too small for the block weights");
    return sizes;
}

inline std::vector<MergeRow> run_merging_check(const ExperimentConfig& cfg, int workers_requested = 0)
{
    if (!cfg.model.has_closed_form())
        throw UnsupportedModel("merging check needs the gaussian or exponential model, got " + cfg.model.name());
    const unsigned workers = resolve_workers(workers_requested != 0 ? workers_requested : cfg.workers);
    const RandomStream master(cfg.seed);
    std::vector<MergeRow> rows;
    for (std::size_t i = 0; i < cfg.merge.n_schedule.size(); ++i) {
        const std::size_t n = cfg.merge.n_schedule[i];
        const auto sizes = weighted_block_sizes(n, cfg.merge.block_weights);
        RandomStream data_rng = master.split(StreamTag::Data, i);
        RandomStream part_rng = master.split(StreamTag::Partition, i);
        const Dataset data = sample(cfg.model, cfg.truth, n, data_rng);
        std::vector<BlockSummary> summaries;
        for (const auto& b : partition_sizes(data, sizes, part_rng))
            summaries.push_back(summarize_block(cfg.model, b));
        const AggregatedSummary agg = combine(std::move(summaries));

        const auto axis = default_axis(agg, 0, cfg.merge.grid_points, 4.0);
        auto grid = scalar_grid(axis);
        const auto sample_v = simulate_validification(cfg.model, sizes, agg.theta_check, cfg.merge.M,
                                                      master.split(StreamTag::Validify, i), {workers, false});
        const Contour valid = anchored_contour(agg, sample_v, grid);
        const Contour large = make_large_n_contour(agg, grid);

        MergeRow row{n, sizes, 0.0, 0.0, 0.0};
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double th = axis[g];
            double full;
            if (cfg.model.family() == Family::Exponential) {
                full = th > 0.0 ? exp_full_contour(exp_block_pairs(agg), th) : 0.0;
            } else {
                // Gaussian full-data contour 1 - F_1{n (theta - zbar)^2 / tau^2}.
                const double zbar = detail::mean_of(data);
                full = specfun::chisq_sf(1, static_cast<double>(n) * (th - zbar) * (th - zbar) / cfg.model.tau2());
            }
            row.valid_vs_large_n = std::max(row.valid_vs_large_n, std::abs(valid.values[g] - large.values[g]));
            row.large_n_vs_full = std::max(row.large_n_vs_full, std::abs(large.values[g] - full));
            row.valid_vs_full = std::max(row.valid_vs_full, std::abs(valid.values[g] - full));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string merge_csv(const std::vector<MergeRow>& rows)
{
    std::string out = "n,block_sizes,sup_valid_vs_large_n,sup_large_n_vs_full,sup_valid_vs_full\n";
    for (const auto& r : rows) {
        std::string sizes;
        for (auto s : r.block_sizes)
            sizes += (sizes.empty() ? "" : ";") + std::to_string(s);
        out += std::to_string(r.n) + "," + sizes + "," + format_fixed(r.valid_vs_large_n, 6) + "," +
               format_fixed(r.large_n_vs_full, 6) + "," + format_fixed(r.valid_vs_full, 6) + "\n";
    }
    return out;
}

} // namespace dncim
