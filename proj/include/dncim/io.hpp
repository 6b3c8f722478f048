#pragma once

// File formats:
//   data        one-column CSV with header `y`
//   parameters  JSON object keyed by coordinate name
//   summaries   JSON {"n", "theta_hat", "info"}; matrices are row-major nested arrays
//   contours    CSV (coordinate columns..., value) plus a JSON sidecar
//   regions     JSON rows {alpha, coordinate, lower, upper} plus a CSV mirror

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dncim/contours.hpp"
#include "dncim/error.hpp"
#include "dncim/inference.hpp"
#include "dncim/linalg.hpp"
#include "dncim/models.hpp"
#include "dncim/summaries.hpp"

namespace dncim::io {

using Json = nlohmann::json;

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw ConfigError("write to '" + path.string() + "' failed");
}

inline Json read_json(const std::filesystem::path& path)
{
    try {
        return Json::parse(read_text(path));
    } catch (const Json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

/// Shortest decimal text that round-trips the double.
inline std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& where)
{
    std::size_t begin = s.find_first_not_of(" \t\r");
    std::size_t end = s.find_last_not_of(" \t\r");
    if (begin == std::string::npos) throw ConfigError(where + ": empty numeric field");
    const std::string t = s.substr(begin, end - begin + 1);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ConfigError(where + ": cannot parse '" + t + "' as a number");
    return v;
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

inline Dataset parse_data_csv(const std::string& text, const std::string& name = "data")
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(name + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "y") throw ConfigError(name + ": expected header 'y', found '" + line + "'");
    Dataset data;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const double v = parse_double(line, name + " line " + std::to_string(row));
        if (!std::isfinite(v)) throw ConfigError(name + " line " + std::to_string(row) + ": non-finite value");
        data.push_back(v);
    }
    if (data.empty()) throw ConfigError(name + ": no observations");
    return data;
}

inline Dataset read_data_csv(const std::filesystem::path& path) { return parse_data_csv(read_text(path), path.string()); }

inline std::string data_csv(std::span<const double> data)
{
    std::string out = "y\n";
    for (double y : data)
        out += format_double(y) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Vectors, matrices, parameters
// ---------------------------------------------------------------------------

inline Json to_json(const Vector& v)
{
    Json j = Json::array();
    for (int i = 0; i < v.size(); ++i)
        j.push_back(v[i]);
    return j;
}

inline Json to_json(const Matrix& m)
{
    Json j = Json::array();
    for (int r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (int c = 0; c < m.cols(); ++c)
            row.push_back(m(r, c));
        j.push_back(std::move(row));
    }
    return j;
}

inline Vector vector_from_json(const Json& j, const std::string& what)
{
    if (j.is_number()) return Vector::Constant(1, j.get<double>());
    if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a non-empty numeric array");
    Vector v(static_cast<int>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(what + ": element " + std::to_string(i) + " is not a number");
        v[static_cast<int>(i)] = j[i].get<double>();
    }
    return v;
}

inline Matrix matrix_from_json(const Json& j, const std::string& what)
{
    if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a nested numeric array");
    const auto rows = j.size();
    Matrix m(static_cast<int>(rows), static_cast<int>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != rows) throw ConfigError(what + ": matrix must be square");
        for (std::size_t c = 0; c < rows; ++c) {
            if (!j[r][c].is_number()) throw ConfigError(what + ": non-numeric matrix entry");
            m(static_cast<int>(r), static_cast<int>(c)) = j[r][c].get<double>();
        }
    }
    return m;
}

inline Json parameters_to_json(const ModelSpec& model, const Vector& theta)
{
    Json j = Json::object();
    const auto& names = model.coordinate_names();
    for (int i = 0; i < theta.size(); ++i)
        j[names[static_cast<std::size_t>(i)]] = theta[i];
    return j;
}

inline Vector parameters_from_json(const ModelSpec& model, const Json& j)
{
    if (j.is_array() || j.is_number()) {
        Vector v = vector_from_json(j, "parameters");
        if (v.size() != model.dim()) throw ConfigError("parameters: wrong dimension for model " + model.name());
        return v;
    }
    if (!j.is_object()) throw ConfigError("parameters: expected an object keyed by coordinate name");
    Vector v(model.dim());
    const auto& names = model.coordinate_names();
    for (int i = 0; i < model.dim(); ++i) {
        const auto& key = names[static_cast<std::size_t>(i)];
        if (!j.contains(key) || !j[key].is_number()) throw ConfigError("parameters: missing numeric '" + key + "'");
        v[i] = j[key].get<double>();
    }
    return v;
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

inline Json to_json(const BlockSummary& s)
{
    return Json{{"n", s.n}, {"theta_hat", to_json(s.theta_hat)}, {"info", to_json(s.info)}};
}

inline BlockSummary block_summary_from_json(const Json& j)
{
    if (!j.is_object() || !j.contains("n") || !j.contains("theta_hat") || !j.contains("info"))
        throw ConfigError("block summary: expected keys n, theta_hat, info");
    if (!j["n"].is_number_unsigned() || j["n"].get<std::size_t>() == 0)
        throw ConfigError("block summary: n must be a positive integer");
    BlockSummary s;
    s.n = j["n"].get<std::size_t>();
    s.theta_hat = vector_from_json(j["theta_hat"], "block summary theta_hat");
    s.info = matrix_from_json(j["info"], "block summary info");
    if (s.info.rows() != s.theta_hat.size()) throw ConfigError("block summary: info and theta_hat disagree in size");
    return s;
}

inline Json to_json(const AggregatedSummary& agg)
{
    Json blocks = Json::array();
    for (const auto& b : agg.blocks)
        blocks.push_back(to_json(b));
    return Json{{"theta_check", to_json(agg.theta_check)}, {"total_info", to_json(agg.total_info)},
                {"blocks", std::move(blocks)}};
}

/// Re-combines the stored blocks, so the file cannot carry an inconsistent estimate.
inline AggregatedSummary aggregated_from_json(const Json& j)
{
    if (!j.is_object() || !j.contains("blocks") || !j["blocks"].is_array())
        throw ConfigError("aggregated summary: expected a 'blocks' array");
    std::vector<BlockSummary> blocks;
    for (const auto& b : j["blocks"])
        blocks.push_back(block_summary_from_json(b));
    return combine(std::move(blocks));
}

// ---------------------------------------------------------------------------
// Contours
// ---------------------------------------------------------------------------

inline std::string contour_csv(const Contour& c, const std::vector<std::string>& coordinate_names)
{
    std::string out;
    if (c.coordinate) {
        out += coordinate_names.at(static_cast<std::size_t>(*c.coordinate));
    } else {
        for (int j = 0; j < c.dim(); ++j)
            out += coordinate_names.at(static_cast<std::size_t>(j)) + ",";
        out.pop_back();
    }
    out += ",value\n";
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        for (int j = 0; j < c.grid[i].size(); ++j)
            out += format_double(c.grid[i][j]) + ",";
        out += format_double(c.values[i]) + "\n";
    }
    return out;
}

inline Json contour_sidecar(const Contour& c)
{
    Json j{{"kind", to_string(c.kind)}, {"center", to_json(c.center)}, {"info", to_json(c.info)}};
    j["coordinate"] = c.coordinate ? Json(*c.coordinate) : Json(nullptr);
    j["M"] = c.mc_size ? Json(*c.mc_size) : Json(nullptr);
    j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
    Json anchors = Json::array();
    for (const auto& a : c.anchors)
        anchors.push_back(Json{{"anchor", to_json(a.anchor)}, {"thresholds", a.thresholds}});
    j["anchors"] = std::move(anchors);
    if (!c.exp_blocks.empty()) {
        Json blocks = Json::array();
        for (const auto& [n, th] : c.exp_blocks)
            blocks.push_back(Json{{"n", n}, {"theta_hat", th}});
        j["exp_blocks"] = std::move(blocks);
    }
    return j;
}

/// Rebuild an evaluable contour (no grid) from its sidecar.
inline Contour contour_from_sidecar(const Json& j)
{
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("contour sidecar: missing 'kind'");
    Contour c;
    c.kind = contour_kind_from_string(j["kind"].get<std::string>());
    c.center = vector_from_json(j.at("center"), "contour center");
    c.info = matrix_from_json(j.at("info"), "contour info");
    if (j.contains("coordinate") && !j["coordinate"].is_null()) c.coordinate = j["coordinate"].get<int>();
    if (j.contains("M") && !j["M"].is_null()) c.mc_size = j["M"].get<std::size_t>();
    if (j.contains("seed") && !j["seed"].is_null()) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("anchors"))
        for (const auto& a : j["anchors"])
            c.anchors.push_back({vector_from_json(a.at("anchor"), "anchor"), a.at("thresholds").get<std::vector<double>>()});
    if (j.contains("exp_blocks"))
        for (const auto& b : j["exp_blocks"])
            c.exp_blocks.emplace_back(b.at("n").get<std::size_t>(), b.at("theta_hat").get<double>());
    if (!c.evaluable()) throw ConfigError("contour sidecar: kind " + to_string(c.kind) + " cannot be re-evaluated");
    return c;
}

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

inline Json region_rows(const ConfidenceRegion& r, const std::vector<std::string>& coordinate_names)
{
    Json rows = Json::array();
    for (std::size_t j = 0; j < r.intervals.size(); ++j) {
        const int coord = r.coordinate ? *r.coordinate : static_cast<int>(j);
        for (const auto& iv : r.intervals[j])
            rows.push_back(Json{{"alpha", r.alpha},
                                {"coordinate", coordinate_names.at(static_cast<std::size_t>(coord))},
                                {"lower", iv.lower},
                                {"upper", iv.upper}});
    }
    return rows;
}

inline std::string region_csv(const Json& rows)
{
    std::string out = "alpha,coordinate,lower,upper\n";
    for (const auto& r : rows)
        out += format_double(r["alpha"].get<double>()) + "," + r["coordinate"].get<std::string>() + "," +
               format_double(r["lower"].get<double>()) + "," + format_double(r["upper"].get<double>()) + "\n";
    return out;
}

/// FNV-1a of a byte string (config provenance).
inline std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes)
        h = (h ^ ch) * 0x100000001b3ULL;
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << v;
    return ss.str();
}

} // namespace dncim::io
