#pragma once

// Flat key = value experiment configuration.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "twistlab/error.hpp"
#include "twistlab/grid.hpp"
#include "twistlab/maps.hpp"

namespace twistlab {

struct ExperimentConfig {
    // Annulus for energies, distortion and the EL checks.
    double a = 1.0;
    double b = std::exp(1.0);
    int k_min = -3;
    int k_max = 3;
    std::size_t n_r = 257;
    std::size_t n_t = 256;

    // Flow-composed test suite.
    double suite_a = 1.0;
    double suite_b = 2.0;
    std::vector<double> epsilons{0.05, 0.1};
    std::vector<int> modes{1, 2, 3};
    std::vector<int> suite_k{-2, -1, 0, 1, 2};
    double T = 1.0;
    std::size_t steps = 200;
    Bump bump = Bump::sine_squared;
    std::size_t extra_maps = 2; ///< seeded random flow maps appended to the suite
    std::string map_file;       ///< symmetrise this map instead of the suite

    // Loop ODE.
    double loop_a = 1.0;
    double loop_b = 2.0;
    int loop_n = 4;
    int loop_k = 1;
    std::size_t loop_nodes = 1025;

    // Torus.
    double rho = 4.0;
    double torus_a = 0.5;
    int torus_k = 1;
    std::size_t n_s = 257;
    std::size_t n_psi = 256;
    std::vector<double> sweep_rho;
    std::vector<double> sweep_a;

    // Tolerances.
    double tol_energy = 1e-3;
    double tol_symmetrise = 1e-4;
    double tol_minimality = 1e-3;
    double tol_identity = 1e-3;
    double tol_jensen = 1e-3;
    double tol_coarea = 1e-2;
    double tol_duality = 1e-6;
    double el_order = 1.8;
    double el_floor_ratio = 0.5;
    double tol_loop = 1e-8;
    double tol_torus = 1e-6;
    double tol_torus_asymptotic = 1e-2;
    double cg_tol = 1e-10;

    std::uint64_t seed = 1;
    std::string out;

    void set(const std::string& key, const std::string& value);
    void validate() const;
    std::vector<std::pair<std::string, std::string>> entries() const;
};

namespace detail {
inline std::string trim(std::string s) {
    const char* ws = " \t\r\n";
    auto lo = s.find_first_not_of(ws);
    if (lo == std::string::npos) return {};
    auto hi = s.find_last_not_of(ws);
    return s.substr(lo, hi - lo + 1);
}

inline double config_double(const std::string& key, const std::string& v) {
    try {
        return parse_double(v);
    } catch (const IoError&) {
        throw ValidationError("config key '" + key + "': not a number: '" + v + "'");
    }
}

inline long long config_int(const std::string& key, const std::string& v) {
    double d = config_double(key, v);
    if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ValidationError("config key '" + key + "': not an integer: '" + v + "'");
    return static_cast<long long>(d);
}

inline std::size_t config_size(const std::string& key, const std::string& v) {
    long long n = config_int(key, v);
    if (n < 0) throw ValidationError("config key '" + key + "': must be non-negative");
    return static_cast<std::size_t>(n);
}

inline std::vector<std::string> config_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        if constexpr (std::is_floating_point_v<T>) {
            s += format_double(v[i]);
        } else {
            s += std::to_string(v[i]);
        }
    }
    return s;
}
} // namespace detail

inline void ExperimentConfig::set(const std::string& key, const std::string& value) {
    using namespace detail;
    auto dlist = [&](std::vector<double>& dst) {
        dst.clear();
        for (const auto& s : config_list(value)) dst.push_back(config_double(key, s));
    };
    auto ilist = [&](std::vector<int>& dst) {
        dst.clear();
        for (const auto& s : config_list(value)) dst.push_back(static_cast<int>(config_int(key, s)));
    };
    const std::map<std::string, std::function<void()>> setters{
        {"a", [&] { a = config_double(key, value); }},
        {"b", [&] { b = config_double(key, value); }},
        {"k_min", [&] { k_min = static_cast<int>(config_int(key, value)); }},
        {"k_max", [&] { k_max = static_cast<int>(config_int(key, value)); }},
        {"n_r", [&] { n_r = config_size(key, value); }},
        {"n_t", [&] { n_t = config_size(key, value); }},
        {"suite_a", [&] { suite_a = config_double(key, value); }},
        {"suite_b", [&] { suite_b = config_double(key, value); }},
        {"epsilons", [&] { dlist(epsilons); }},
        {"modes", [&] { ilist(modes); }},
        {"suite_k", [&] { ilist(suite_k); }},
        {"T", [&] { T = config_double(key, value); }},
        {"steps", [&] { steps = config_size(key, value); }},
        {"bump",
         [&] {
             if (value == "sine") {
                 bump = Bump::sine;
             } else if (value == "sine_squared") {
                 bump = Bump::sine_squared;
             } else {
                 throw ValidationError("config key 'bump': expected sine or sine_squared, got '" + value + "'");
             }
         }},
        {"extra_maps", [&] { extra_maps = config_size(key, value); }},
        {"map_file", [&] { map_file = value; }},
        {"loop_a", [&] { loop_a = config_double(key, value); }},
        {"loop_b", [&] { loop_b = config_double(key, value); }},
        {"loop_n", [&] { loop_n = static_cast<int>(config_int(key, value)); }},
        {"loop_k", [&] { loop_k = static_cast<int>(config_int(key, value)); }},
        {"loop_nodes", [&] { loop_nodes = config_size(key, value); }},
        {"rho", [&] { rho = config_double(key, value); }},
        {"torus_a", [&] { torus_a = config_double(key, value); }},
        {"torus_k", [&] { torus_k = static_cast<int>(config_int(key, value)); }},
        {"n_s", [&] { n_s = config_size(key, value); }},
        {"n_psi", [&] { n_psi = config_size(key, value); }},
        {"sweep_rho", [&] { dlist(sweep_rho); }},
        {"sweep_a", [&] { dlist(sweep_a); }},
        {"tol_energy", [&] { tol_energy = config_double(key, value); }},
        {"tol_symmetrise", [&] { tol_symmetrise = config_double(key, value); }},
        {"tol_minimality", [&] { tol_minimality = config_double(key, value); }},
        {"tol_identity", [&] { tol_identity = config_double(key, value); }},
        {"tol_jensen", [&] { tol_jensen = config_double(key, value); }},
        {"tol_coarea", [&] { tol_coarea = config_double(key, value); }},
        {"tol_duality", [&] { tol_duality = config_double(key, value); }},
        {"el_order", [&] { el_order = config_double(key, value); }},
        {"el_floor_ratio", [&] { el_floor_ratio = config_double(key, value); }},
        {"tol_loop", [&] { tol_loop = config_double(key, value); }},
        {"tol_torus", [&] { tol_torus = config_double(key, value); }},
        {"tol_torus_asymptotic", [&] { tol_torus_asymptotic = config_double(key, value); }},
        {"cg_tol", [&] { cg_tol = config_double(key, value); }},
        {"seed", [&] { seed = static_cast<std::uint64_t>(config_int(key, value)); }},
        {"out", [&] { out = value; }},
    };
    auto it = setters.find(key);
    if (it == setters.end()) throw ValidationError("unknown config key '" + key + "'");
    it->second();
}

inline void ExperimentConfig::validate() const {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw ValidationError(msg);
    };
    need(a > 0.0 && a < b && std::isfinite(b), "config keys 'a', 'b': need 0 < a < b");
    need(suite_a > 0.0 && suite_a < suite_b && std::isfinite(suite_b), "config keys 'suite_a', 'suite_b': need 0 < suite_a < suite_b");
    need(loop_a > 0.0 && loop_a < loop_b && std::isfinite(loop_b), "config keys 'loop_a', 'loop_b': need 0 < loop_a < loop_b");
    need(n_r >= 3, "config key 'n_r': need at least 3 radial nodes");
    need(n_t >= 8, "config key 'n_t': need at least 8 angular nodes");
    need(loop_nodes >= 2, "config key 'loop_nodes': need at least 2 nodes");
    need(loop_n >= 2, "config key 'loop_n': need n >= 2");
    need(T >= 0.0 && std::isfinite(T), "config key 'T': flow time must be non-negative");
    need(steps >= 1, "config key 'steps': need at least one step");
    for (int m : modes) need(m >= 1, "config key 'modes': angular modes must be >= 1");
    for (double e : epsilons) need(std::isfinite(e), "config key 'epsilons': amplitudes must be finite");
    need(rho > 1.0, "config key 'rho': rho must exceed 1 so the torus does not self-intersect");
    need(torus_a >= 0.0 && torus_a < 1.0, "config key 'torus_a': need 0 <= torus_a < 1");
    for (double r : sweep_rho) need(r > 1.0, "config key 'sweep_rho': rho must exceed 1 so the torus does not self-intersect");
    for (double s : sweep_a) need(s >= 0.0 && s < 1.0, "config key 'sweep_a': need 0 <= a < 1");
    need(n_s >= 5, "config key 'n_s': need at least 5 radial nodes");
    need(n_psi >= 8 && n_psi % 2 == 0, "config key 'n_psi': need an even count >= 8");
    const std::vector<std::pair<const char*, double>> tols{
        {"tol_energy", tol_energy},     {"tol_symmetrise", tol_symmetrise},
        {"tol_minimality", tol_minimality}, {"tol_identity", tol_identity},
        {"tol_jensen", tol_jensen},     {"tol_coarea", tol_coarea},
        {"tol_duality", tol_duality},   {"el_order", el_order},
        {"el_floor_ratio", el_floor_ratio}, {"tol_loop", tol_loop},
        {"tol_torus", tol_torus},       {"tol_torus_asymptotic", tol_torus_asymptotic},
        {"cg_tol", cg_tol}};
    for (const auto& [name, v] : tols) {
        need(v > 0.0 && std::isfinite(v), std::string("config key '") + name + "': tolerance must be positive");
    }
}

/// Every key with its current value, in a fixed order.
inline std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
    using detail::join;
    auto d = [](double v) { return format_double(v); };
    return {{"a", d(a)},
            {"b", d(b)},
            {"k_min", std::to_string(k_min)},
            {"k_max", std::to_string(k_max)},
            {"n_r", std::to_string(n_r)},
            {"n_t", std::to_string(n_t)},
            {"suite_a", d(suite_a)},
            {"suite_b", d(suite_b)},
            {"epsilons", join(epsilons)},
            {"modes", join(modes)},
            {"suite_k", join(suite_k)},
            {"T", d(T)},
            {"steps", std::to_string(steps)},
            {"bump", bump == Bump::sine ? "sine" : "sine_squared"},
            {"extra_maps", std::to_string(extra_maps)},
            {"map_file", map_file},
            {"loop_a", d(loop_a)},
            {"loop_b", d(loop_b)},
            {"loop_n", std::to_string(loop_n)},
            {"loop_k", std::to_string(loop_k)},
            {"loop_nodes", std::to_string(loop_nodes)},
            {"rho", d(rho)},
            {"torus_a", d(torus_a)},
            {"torus_k", std::to_string(torus_k)},
            {"n_s", std::to_string(n_s)},
            {"n_psi", std::to_string(n_psi)},
            {"sweep_rho", join(sweep_rho)},
            {"sweep_a", join(sweep_a)},
            {"tol_energy", d(tol_energy)},
            {"tol_symmetrise", d(tol_symmetrise)},
            {"tol_minimality", d(tol_minimality)},
            {"tol_identity", d(tol_identity)},
            {"tol_jensen", d(tol_jensen)},
            {"tol_coarea", d(tol_coarea)},
            {"tol_duality", d(tol_duality)},
            {"el_order", d(el_order)},
            {"el_floor_ratio", d(el_floor_ratio)},
            {"tol_loop", d(tol_loop)},
            {"tol_torus", d(tol_torus)},
            {"tol_torus_asymptotic", d(tol_torus_asymptotic)},
            {"cg_tol", d(cg_tol)},
            {"seed", std::to_string(seed)}};
}

/// Reads key = value lines; '#' starts a comment. Unknown keys are errors.
inline void apply_config(ExperimentConfig& cfg, std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        cfg.set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    ExperimentConfig cfg;
    apply_config(cfg, in);
    return cfg;
}

} // namespace twistlab
