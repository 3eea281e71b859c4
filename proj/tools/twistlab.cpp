// twistlab: batch runner for the twist-map experiments.
//
//   twistlab <energy|symmetrise|torus|el-check|loop-solve|verify>
//            [--config PATH] [--out DIR] [--seed N] [--resolution N_R,N_T]
//            [--module NAME] [--set key=value ...]
//
// Exit codes: 0 success, 1 invariant failure, 2 config or validation error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twistlab/twistlab.hpp"

namespace fs = std::filesystem;
using namespace twistlab;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_invariant = 1;
constexpr int exit_config = 2;

struct Options {
    std::string config_path;
    std::string out;
    std::string seed;
    std::string resolution;
    std::string module;
    std::vector<std::string> overrides;
};

ExperimentConfig build_config(const Options& o) {
    ExperimentConfig cfg;
    if (!o.config_path.empty()) cfg = load_config(o.config_path);
    for (const auto& kv : o.overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
        cfg.set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
    }
    if (!o.seed.empty()) cfg.set("seed", o.seed);
    if (!o.resolution.empty()) {
        auto parts = detail::config_list(o.resolution);
        if (parts.size() != 2) throw ValidationError("--resolution expects N_R,N_T");
        cfg.set("n_r", parts[0]);
        cfg.set("n_t", parts[1]);
    }
    if (!o.out.empty()) {
        cfg.out = o.out;
    } else if (cfg.out.empty()) {
        if (const char* env = std::getenv("TWISTLAB_OUT")) cfg.out = env;
    }
    cfg.validate();
    return cfg;
}

int run_energy(const ExperimentConfig& cfg) {
    auto dir = ensure_dir(cfg.out);
    AnnulusGrid g(cfg.a, cfg.b, cfg.n_r, cfg.n_t);
    Json j = report_header("energy", cfg);
    Json rows = Json::array();
    std::vector<double> ks, numeric;
    auto table = open_output(dir / "energy_table.csv");
    table << "k,numeric,closed_form,relative_error\n";
    bool ok = true;
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
        auto rep = energy_F(make_twist_2d(g, k).map);
        const double cf = energy_F_twist_closed_form(cfg.a, cfg.b, k);
        const double rel = std::abs(rep.value - cf) / cf;
        ok = ok && rel <= cfg.tol_energy;
        table << k << ',' << format_double(rep.value) << ',' << format_double(cf) << ',' << format_double(rel) << '\n';
        Json row = to_json(rep);
        row["k"] = k;
        row["closed_form"] = cf;
        row["relative_error"] = rel;
        rows.push_back(row);
        ks.push_back(k);
        numeric.push_back(rep.value);
    }
    j["reports"] = rows;
    j["passed"] = ok;
    write_json(dir / "energy_report.json", j);
    write_columns(dir / "energy_vs_k.csv", "k", "energy", ks, numeric);
    std::cout << "energy: " << rows.size() << " rows, " << (ok ? "all within tolerance" : "tolerance exceeded") << '\n';
    return ok ? exit_ok : exit_invariant;
}

struct SymRow {
    std::string label;
    int deg = 0;
    int deg_sym = 0;
    double F = 0.0;
    double F_sym = 0.0;
    bool pass = false;
};

SymRow symmetrise_row(const std::string& label, const PlanarMap& u, double tol) {
    EnergyOptions opt;
    opt.refinement_estimate = false;
    auto s = symmetrise(u);
    SymRow r{label, degree(u).k, degree(s.map).k, energy_F(u, opt).value, energy_F(s.map, opt).value, false};
    r.pass = r.deg == r.deg_sym && r.F_sym <= r.F * (1.0 + tol);
    return r;
}

int run_symmetrise(const ExperimentConfig& cfg) {
    auto dir = ensure_dir(cfg.out);
    std::vector<SymRow> rows;
    if (!cfg.map_file.empty()) {
        std::ifstream in(cfg.map_file);
        if (!in) throw IoError("cannot open map file '" + cfg.map_file + "'");
        PlanarMap u = read_map_csv(in);
        u.validate();
        rows.push_back(symmetrise_row(fs::path(cfg.map_file).filename().string(), u, cfg.tol_symmetrise));
    } else {
        Verifier v(cfg);
        for (const auto& s : v.suite()) rows.push_back(symmetrise_row(s.label, s.map, cfg.tol_symmetrise));
    }
    Json j = report_header("symmetrise", cfg);
    Json arr = Json::array();
    auto table = open_output(dir / "symmetrise.csv");
    table << "map,deg_before,deg_after,energy_before,energy_after,margin,pass\n";
    std::vector<double> idx, margins;
    bool ok = true;
    for (std::size_t q = 0; q < rows.size(); ++q) {
        const auto& r = rows[q];
        const double margin = (r.F - r.F_sym) / r.F;
        ok = ok && r.pass;
        arr.push_back(Json{{"map", r.label},
                           {"deg_before", r.deg},
                           {"deg_after", r.deg_sym},
                           {"energy_before", r.F},
                           {"energy_after", r.F_sym},
                           {"margin", margin},
                           {"pass", r.pass}});
        table << '"' << r.label << "\"," << r.deg << ',' << r.deg_sym << ',' << format_double(r.F) << ','
              << format_double(r.F_sym) << ',' << format_double(margin) << ',' << (r.pass ? "true" : "false") << '\n';
        idx.push_back(static_cast<double>(q));
        margins.push_back(margin);
    }
    j["rows"] = arr;
    j["passed"] = ok;
    write_json(dir / "symmetrise.json", j);
    write_columns(dir / "symmetrise_margins.csv", "map", "margin", idx, margins);
    std::cout << "symmetrise: " << rows.size() << " maps, " << (ok ? "suite passed" : "suite failed") << '\n';
    return ok ? exit_ok : exit_invariant;
}

Json torus_run(const ExperimentConfig& cfg, double rho, double a, const fs::path* dir, bool& ok) {
    TorusSpec spec{rho, a, cfg.torus_k};
    spec.validate();
    TorusSolveOptions opt;
    opt.tol = cfg.cg_tol;
    auto sol = solve_torus_bvp(spec, cfg.n_s, cfg.n_psi, opt);
    auto en = torus_twist_energy(sol.field);
    auto uq = torus_uniqueness_check(sol.field);
    auto curl = curl_condition_residual(sol.field);
    Json j;
    j["rho"] = rho;
    j["a"] = a;
    j["k"] = cfg.torus_k;
    j["iterations"] = sol.iterations;
    j["residual"] = sol.residual;
    j["energy"] = en.value;
    j["curl_residual_max"] = curl.max_residual;
    j["energy_report"] = to_json(en);
    j["uniqueness"] = Json{{"inner_flux", uq.inner_flux},
                           {"outer_flux", uq.outer_flux},
                           {"flux_balance", uq.flux_balance},
                           {"dirichlet", uq.dirichlet},
                           {"energy_flux_gap", uq.energy_flux_gap},
                           {"max_principle_excess", uq.max_principle_excess}};
    bool pass = uq.max_principle_excess <= 0.0;
    if (spec.solid()) {
        double sup = 0.0;
        for (double x : sol.field.g) sup = std::max(sup, std::abs(x - two_pi * spec.k));
        j["sup_deviation"] = sup;
        pass = pass && sup <= cfg.tol_torus;
    } else {
        pass = pass && uq.flux_balance <= cfg.tol_torus && uq.energy_flux_gap <= cfg.tol_torus;
    }
    j["passed"] = pass;
    ok = ok && pass;
    if (dir) {
        auto field_out = open_output(*dir / "torus_field.csv");
        write_toroidal_csv(field_out, sol.field);
        auto curl_out = open_output(*dir / "torus_curl.csv");
        curl_out << "mu,x3,residual\n";
        for (std::size_t i = 0; i < sol.field.n_s; ++i)
            for (std::size_t jj = 0; jj < sol.field.n_psi; ++jj)
                curl_out << format_double(sol.field.mu(i, jj)) << ',' << format_double(sol.field.x3(i, jj)) << ','
                         << format_double(curl.residual[sol.field.index(i, jj)]) << '\n';
        std::vector<double> s, g;
        for (std::size_t i = 0; i < sol.field.n_s; ++i) {
            s.push_back(sol.field.s(i));
            g.push_back(sol.field.at(i, 0));
        }
        write_columns(*dir / "torus_profile.csv", "s", "g", s, g);
    }
    return j;
}

int run_torus(const ExperimentConfig& cfg) {
    auto dir = ensure_dir(cfg.out);
    Json j = report_header("torus", cfg);
    bool ok = true;
    j["solve"] = torus_run(cfg, cfg.rho, cfg.torus_a, &dir, ok);
    if (!cfg.sweep_rho.empty() || !cfg.sweep_a.empty()) {
        auto rhos = cfg.sweep_rho.empty() ? std::vector<double>{cfg.rho} : cfg.sweep_rho;
        auto as = cfg.sweep_a.empty() ? std::vector<double>{cfg.torus_a} : cfg.sweep_a;
        Json sweep = Json::array();
        auto table = open_output(dir / "torus_sweep.csv");
        table << "rho,a,energy,curl_residual_max,flux_balance,energy_flux_gap\n";
        for (double rho : rhos) {
            for (double a : as) {
                Json row = torus_run(cfg, rho, a, nullptr, ok);
                table << format_double(rho) << ',' << format_double(a) << ','
                      << format_double(row["energy"].get<double>()) << ','
                      << format_double(row["curl_residual_max"].get<double>()) << ','
                      << format_double(row["uniqueness"]["flux_balance"].get<double>()) << ','
                      << format_double(row["uniqueness"]["energy_flux_gap"].get<double>()) << '\n';
                sweep.push_back(row);
            }
        }
        j["sweep"] = sweep;
    }
    j["passed"] = ok;
    write_json(dir / "torus_report.json", j);
    std::cout << "torus: " << (ok ? "checks passed" : "checks failed") << '\n';
    return ok ? exit_ok : exit_invariant;
}

Json el_json(const ELResidual& r) {
    return Json{{"max_curl", r.max_curl},
                {"path_defect", r.path_defect},
                {"path_defect_all", r.path_defect_all},
                {"pressure_path_gap", r.pressure_path_gap},
                {"interior_path_gap", r.interior_path_gap},
                {"interior_area", r.interior_area},
                {"max_field", r.max_field}};
}

int run_el_check(const ExperimentConfig& cfg) {
    auto dir = ensure_dir(cfg.out);
    AnnulusGrid g(cfg.a, cfg.b, cfg.n_r, cfg.n_t);
    auto twist = el_residual(make_twist_2d(g, 1).map);
    auto linear = el_residual(map_from_profile(g, linear_profile(cfg.a, cfg.b, 1, cfg.n_r)));
    Json j = report_header("el-check", cfg);
    j["twist_1"] = el_json(twist);
    j["linear_profile"] = el_json(linear);
    Json refine = Json::array();
    std::vector<double> h, defect;
    for (std::size_t n_r : {129, 257, 513, 1025}) {
        AnnulusGrid gg(cfg.a, cfg.b, n_r, n_r - 1);
        auto r = el_residual(make_twist_2d(gg, 1).map);
        refine.push_back(Json{{"n_r", n_r}, {"path_defect", r.path_defect}, {"max_curl", r.max_curl}});
        h.push_back(gg.h_r());
        defect.push_back(r.path_defect);
    }
    j["twist_refinement"] = refine;
    write_json(dir / "el_check.json", j);
    write_columns(dir / "el_path_defect.csv", "h", "path_defect", h, defect);
    std::cout << "el-check: twist path defect " << format_double(twist.path_defect) << ", linear profile "
              << format_double(linear.path_defect) << '\n';
    return exit_ok;
}

int run_loop_solve(const ExperimentConfig& cfg) {
    auto dir = ensure_dir(cfg.out);
    auto sol = solve_loop_ode(cfg.loop_a, cfg.loop_b, cfg.loop_n, cfg.loop_k, cfg.loop_nodes);
    double err = 0.0;
    for (std::size_t i = 0; i < sol.profile.size(); ++i)
        err = std::max(err, std::abs(sol.profile.g[i] - loop_angle_closed_form(cfg.loop_a, cfg.loop_b, cfg.loop_n,
                                                                               cfg.loop_k, sol.profile.r(i))));
    Json j = report_header("loop-solve", cfg);
    j["c"] = sol.c;
    j["loop_energy"] = loop_energy(sol.profile);
    j["closed_form_max_error"] = err;
    if (cfg.loop_n % 2 == 0) j["el_algebra_residual"] = check_twist_el_algebra(sol.profile).max_residual;
    const bool ok = err <= cfg.tol_loop;
    j["passed"] = ok;
    write_json(dir / "loop_solve.json", j);
    write_columns(dir / "loop_profile.csv", "r", "g", sol.profile.radii(), sol.profile.g);
    std::cout << "loop-solve: max error vs closed form " << format_double(err) << '\n';
    return ok ? exit_ok : exit_invariant;
}

int run_verify_command(const ExperimentConfig& cfg, const std::string& module) {
    auto dir = ensure_dir(cfg.out);
    Verifier v(cfg);
    run_verify(v, module);
    write_json(dir / "verify.json", verify_json(v, module));
    std::size_t failures = 0;
    for (const auto& c : v.checks()) {
        if (c.pass) continue;
        ++failures;
        std::cerr << "FAIL [" << c.module << "] " << c.name << ": measured " << format_double(c.measured) << ' '
                  << c.relation << ' ' << format_double(c.bound) << '\n';
    }
    std::cout << "verify: " << v.checks().size() << " checks, " << failures << " failed\n";
    return failures == 0 ? exit_ok : exit_invariant;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"twistlab: twist maps, symmetrisation and Euler-Lagrange checks on annuli and tori"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config_path, "flat key = value config file");
    app.add_option("--out", o.out, "output directory (default $TWISTLAB_OUT, then .)");
    app.add_option("--seed", o.seed, "seed for the sampled flow maps");
    app.add_option("--resolution", o.resolution, "annulus grid N_R,N_T");
    app.add_option("--module", o.module, "verify only this module");
    app.add_option("--set", o.overrides, "override a config key: key=value");

    auto* energy = app.add_subcommand("energy", "twist energies against the closed form");
    auto* sym = app.add_subcommand("symmetrise", "symmetrise the flow-composed suite or map_file");
    auto* torus = app.add_subcommand("torus", "solve the torus angle problem");
    auto* el = app.add_subcommand("el-check", "Euler-Lagrange residuals on the annulus");
    auto* loop = app.add_subcommand("loop-solve", "solve the loop ODE");
    auto* verify = app.add_subcommand("verify", "run every invariant and acceptance check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        const ExperimentConfig cfg = build_config(o);
        if (!o.module.empty() && !verify->parsed())
            throw ValidationError("--module only applies to verify");
        if (energy->parsed()) return run_energy(cfg);
        if (sym->parsed()) return run_symmetrise(cfg);
        if (torus->parsed()) return run_torus(cfg);
        if (el->parsed()) return run_el_check(cfg);
        if (loop->parsed()) return run_loop_solve(cfg);
        if (verify->parsed()) return run_verify_command(cfg, o.module);
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_invariant;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_config;
}
