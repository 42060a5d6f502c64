#include "feec/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "feec/adapt.hpp"

namespace feec {

namespace {

struct RunConfig {
    std::string domain = "square";
    std::string mesh_file;
    std::string field = "sinsin";
    std::string field_table;
    double theta = 0.5;
    double eps = 1e-3;
    int max_iters = 50;
    double delta = 0.25;
    double beta = 1.0;
    std::vector<double> beta_grid = {0.01, 0.1, 1.0, 10.0};
    int ref_depth = 2;
    int levels = 5;
    std::string out_dir = ".";
};

Mesh config_mesh(const RunConfig& cfg) {
    if (!cfg.mesh_file.empty()) return Mesh::load_json(cfg.mesh_file);
    return Mesh::builtin(domain_from_name(cfg.domain));
}

/// Piecewise-constant data given per element of the initial mesh, evaluated by
/// point location (initial meshes are small, a linear scan is fine).
ScalarOnMesh tabulated_field(const Mesh& mesh0, std::vector<double> values) {
    if (static_cast<int>(values.size()) != mesh0.triangle_count())
        throw std::invalid_argument("tabulated data length does not match the initial mesh");
    return [mesh0, values = std::move(values)](int, Vec2 p) {
        int best = 0;
        double best_viol = std::numeric_limits<double>::max();
        for (int t = 0; t < mesh0.triangle_count(); ++t) {
            const auto& tv = mesh0.tri(t).v;
            const Vec2 a = mesh0.vertex(tv[0]), b = mesh0.vertex(tv[1]), c = mesh0.vertex(tv[2]);
            const double area = signed_area(a, b, c);
            const double l0 = signed_area(p, b, c) / area;
            const double l1 = signed_area(a, p, c) / area;
            const double l2 = 1 - l0 - l1;
            const double viol = -std::min({l0, l1, l2});
            if (viol < best_viol) {
                best_viol = viol;
                best = t;
            }
            if (viol <= 1e-12) return values[t];
        }
        return values[best];
    };
}

ScalarOnMesh config_field(const RunConfig& cfg, const Mesh& mesh0) {
    if (!cfg.field_table.empty()) {
        std::ifstream in(cfg.field_table);
        if (!in) throw std::invalid_argument("cannot open data table: " + cfg.field_table);
        try {
            nlohmann::json j;
            in >> j;
            return tabulated_field(mesh0, j.at("values").get<std::vector<double>>());
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("malformed data table " + cfg.field_table + ": " + e.what());
        }
    }
    return builtin_field(cfg.field);
}

void write_manifest(const RunConfig& cfg, const std::string& command, const std::string& path) {
    nlohmann::json j;
    j["command"] = command;
    j["domain"] = cfg.mesh_file.empty() ? cfg.domain : cfg.mesh_file;
    j["f"] = cfg.field_table.empty() ? cfg.field : cfg.field_table;
    j["theta"] = cfg.theta;
    j["eps"] = cfg.eps;
    j["max_iters"] = cfg.max_iters;
    j["delta"] = cfg.delta;
    j["beta"] = cfg.beta;
    j["beta_grid"] = cfg.beta_grid;
    j["ref_depth"] = cfg.ref_depth;
    std::ofstream out(path);
    out << j.dump(1) << "\n";
}

void write_report(const Report& report, const std::string& path) {
    nlohmann::json j;
    char buf[64];
    for (const auto& [name, value] : report) {
        if (!std::isfinite(value)) {
            j[name] = value > 0 ? "inf" : (value < 0 ? "-inf" : "nan");
            continue;
        }
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        j[name] = nlohmann::json::parse(buf);
    }
    std::ofstream out(path);
    out << j.dump(1) << "\n";
}

int cmd_adapt(const RunConfig& cfg) {
    const Mesh mesh0 = config_mesh(cfg);
    const ScalarOnMesh f = config_field(cfg, mesh0);

    AmfemParams params;
    params.theta = cfg.theta;
    params.eps = cfg.eps;
    params.max_iters = cfg.max_iters;
    params.delta = cfg.delta;
    params.beta_q = cfg.beta;
    params.ref_depth = cfg.ref_depth;
    const AmfemResult result = amfem(mesh0, f, params);

    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    result.history.save_csv((dir / "history.csv").string());
    result.mesh.save_json((dir / "final_mesh.json").string());
    write_manifest(cfg, "adapt", (dir / "manifest.json").string());

    std::printf("iterations: %zu  cells: %d  eta: %.6g\n", result.history.records.size(),
                result.mesh.triangle_count(), std::sqrt(result.history.records.back().eta_sq));
    if (result.history.records.size() >= 3) {
        std::printf("rate error vs dofs: %+.3f\n",
                    fit_rate(result.history, RateAxis::dofs, RateQuantity::error));
        std::printf("rate eta   vs dofs: %+.3f\n",
                    fit_rate(result.history, RateAxis::dofs, RateQuantity::eta));
    }
    if (!result.history.reached_tolerance)
        std::printf("warning: iteration cap reached before eta <= eps\n");
    return 0;
}

int cmd_verify(const RunConfig& cfg, const std::string& suite) {
    const Mesh mesh0 = config_mesh(cfg);
    const ScalarOnMesh f = config_field(cfg, mesh0);

    std::vector<VerifyOutcome> outcomes;
    std::vector<std::string> names;
    const bool all = (suite == "all");
    const bool needs_matrix = all || suite == "stability" || suite == "quasi" || suite == "bounds";

    if (needs_matrix) {
        // constants are calibrated on the coarsest pair, which must sit past
        // the preasymptotic regime of the raw builtin meshes
        const RunMatrix matrix = build_run_matrix(uniform_refine(mesh0, 2), f, cfg.levels, cfg.ref_depth);
        if (all || suite == "stability") {
            outcomes.push_back(verify_discrete_stability(matrix));
            names.push_back("stability");
        }
        if (all || suite == "quasi") {
            outcomes.push_back(verify_quasi_orthogonality(matrix));
            names.push_back("quasi");
        }
        if (all || suite == "bounds") {
            outcomes.push_back(verify_upper_bounds(matrix, f));
            names.push_back("bounds");
            outcomes.push_back(verify_estimator_continuity(matrix, f));
            names.push_back("continuity");
        }
    }
    if (all || suite == "harmonics") {
        outcomes.push_back(verify_harmonics());
        names.push_back("harmonics");
    }
    if (all || suite == "marking") {
        outcomes.push_back(verify_marking());
        names.push_back("marking");
    }
    if (outcomes.empty()) {
        std::cerr << "unknown suite: " << suite << "\n";
        return 1;
    }

    Report merged;
    bool pass = true;
    std::string first_failure;
    for (size_t i = 0; i < outcomes.size(); ++i) {
        merged.insert(outcomes[i].report.begin(), outcomes[i].report.end());
        std::printf("%-12s %s\n", names[i].c_str(), outcomes[i].pass ? "PASS" : "FAIL");
        if (!outcomes[i].pass && pass) {
            pass = false;
            first_failure = outcomes[i].first_failure;
        }
    }
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    write_report(merged, (dir / "report.json").string());

    if (!pass) {
        std::cerr << "verification failed: " << first_failure << "\n";
        return 2;
    }
    return 0;
}

int cmd_rates(const std::vector<std::string>& files) {
    std::vector<std::pair<double, double>> slopes;
    for (const auto& file : files) {
        const ConvergenceHistory h = ConvergenceHistory::load_csv(file);
        const double se = fit_rate(h, RateAxis::dofs, RateQuantity::error);
        const double sn = fit_rate(h, RateAxis::dofs, RateQuantity::eta);
        slopes.emplace_back(se, sn);
        std::printf("%s: error slope %+.3f, eta slope %+.3f\n", file.c_str(), se, sn);
    }
    if (files.size() == 2) {
        std::printf("slope difference (second - first): error %+.3f, eta %+.3f\n",
                    slopes[1].first - slopes[0].first, slopes[1].second - slopes[0].second);
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Adaptive mixed finite elements on the discrete de Rham complex"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_common = [&cfg](CLI::App* cmd) {
        cmd->add_option("--domain", cfg.domain,
                        "builtin domain: square, lshape, square_one_hole, square_two_holes");
        cmd->add_option("--mesh", cfg.mesh_file, "mesh JSON file (overrides --domain)");
        cmd->add_option("--f", cfg.field, "data function: const1, sinsin, linex, signstep");
        cmd->add_option("--f-table", cfg.field_table,
                        "JSON with per-element data on the initial mesh: {\"values\": [...]}");
        cmd->add_option("--out", cfg.out_dir, "output directory");
        cmd->add_option("--ref-depth", cfg.ref_depth, "surrogate reference depth (uniform halvings)")
            ->check(CLI::Range(1, 6));
    };

    CLI::App* adapt = app.add_subcommand("adapt", "run the adaptive loop, write history/mesh/manifest");
    add_common(adapt);
    adapt->add_option("--theta", cfg.theta, "marking parameter in (0,1]")
        ->check(CLI::Range(1e-12, 1.0));
    adapt->add_option("--eps", cfg.eps, "stop when eta <= eps")->check(CLI::PositiveNumber);
    adapt->add_option("--max-iters", cfg.max_iters, "iteration cap")->check(CLI::Range(0, 1000));
    adapt->add_option("--delta", cfg.delta, "quasi-error weight for the q column");
    adapt->add_option("--beta", cfg.beta, "estimator weight for the q column");
    adapt->add_option("--beta-grid", cfg.beta_grid, "candidate estimator weights, recorded in the manifest");

    CLI::App* verify = app.add_subcommand("verify", "run a verification suite, write report.json");
    add_common(verify);
    std::string suite = "all";
    verify->add_option("--suite", suite, "stability, quasi, bounds, harmonics, marking, all");
    verify->add_option("--levels", cfg.levels, "levels in the nested run matrix")
        ->check(CLI::Range(2, 8));

    CLI::App* rates = app.add_subcommand("rates", "print convergence slopes of history CSV files");
    std::vector<std::string> files;
    rates->add_option("files", files, "history CSV files")->required()->expected(1, 8);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (adapt->parsed()) return cmd_adapt(cfg);
        if (verify->parsed()) return cmd_verify(cfg, suite);
        if (rates->parsed()) return cmd_rates(files);
    } catch (const solve_failure& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace feec
