#pragma once

// JSON and CSV report writers. Key order is fixed so reruns are byte-identical.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "twistlab/config.hpp"
#include "twistlab/energy.hpp"
#include "twistlab/error.hpp"
#include "twistlab/verify.hpp"

namespace twistlab {

using Json = nlohmann::ordered_json;

inline Json to_json(const GridInfo& g) {
    return Json{{"a", g.a}, {"b", g.b}, {"n_r", g.n_r}, {"n_t", g.n_t}};
}

inline Json to_json(const EnergyReport& r) {
    Json j;
    j["name"] = r.name;
    j["value"] = r.value;
    Json terms = Json::object();
    for (const auto& [k, v] : r.terms) terms[k] = v;
    j["terms"] = terms;
    j["grid"] = to_json(r.grid);
    j["refinement_estimate"] = r.refinement_estimate ? Json(*r.refinement_estimate) : Json(nullptr);
    j["cross_check"] = r.cross_check ? Json(*r.cross_check) : Json(nullptr);
    j["decomposition_residual"] = r.decomposition_residual ? Json(*r.decomposition_residual) : Json(nullptr);
    j["warnings"] = r.warnings;
    return j;
}

inline Json to_json(const Check& c) {
    return Json{{"module", c.module},     {"criterion", c.criterion}, {"name", c.name},
                {"measured", c.measured}, {"relation", c.relation},   {"bound", c.bound},
                {"pass", c.pass}};
}

inline Json to_json(const ExperimentConfig& cfg) {
    Json j = Json::object();
    for (const auto& [k, v] : cfg.entries()) j[k] = v;
    return j;
}

/// Report envelope shared by every subcommand: command, seed and config first.
inline Json report_header(const std::string& command, const ExperimentConfig& cfg) {
    Json j;
    j["command"] = command;
    j["seed"] = cfg.seed;
    j["config"] = to_json(cfg);
    return j;
}

inline Json verify_json(const Verifier& v, const std::string& module) {
    Json j = report_header("verify", v.config());
    j["module"] = module.empty() ? "all" : module;
    std::size_t failures = 0;
    Json checks = Json::array();
    for (const auto& c : v.checks()) {
        checks.push_back(to_json(c));
        if (!c.pass) ++failures;
    }
    j["passed"] = failures == 0;
    j["failures"] = failures;
    j["checks"] = checks;
    return j;
}

// ---------------------------------------------------------------------------
// Output files

inline std::filesystem::path ensure_dir(const std::string& dir) {
    std::filesystem::path p(dir.empty() ? "." : dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw IoError("cannot create output directory '" + p.string() + "': " + ec.message());
    return p;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

/// Plot-ready two-column CSV.
inline void write_columns(const std::filesystem::path& path, const std::string& x_name, const std::string& y_name,
                          const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw InvalidArgument("column lengths differ");
    auto out = open_output(path);
    out << x_name << ',' << y_name << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) out << format_double(x[i]) << ',' << format_double(y[i]) << '\n';
}

} // namespace twistlab
