#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wkam/pipeline.hpp"
#include "wkam/verify.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::string scenario;
    long long seed = -1;
};

wkam::RunConfig resolve_config(const CommonOpts& opts) {
    wkam::RunConfig cfg;
    if (!opts.config_path.empty()) cfg = wkam::load_config(opts.config_path);
    if (!opts.scenario.empty()) {
        wkam::scenario_by_name(opts.scenario);
        cfg.scenario = opts.scenario;
    }
    if (!opts.out_dir.empty()) cfg.outputs = opts.out_dir;
    if (opts.seed >= 0) cfg.seed = opts.seed;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration");
    cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", opts.seed, "seed for random initial data (overrides config)");
    cmd->add_option("--scenario", opts.scenario,
                    "builtin scenario name (overrides config): free, pendulum, double-well, "
                    "pendulum-tmod");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weak-KAM toolkit: min-plus action kernels, critical values, barriers, "
                 "static classes, and Lax-Oleinik dynamics on the circle"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string plot_kind;
    int represent_x0 = -1;

    CLI::App* cmd_kernel = app.add_subcommand("kernel", "build and export the action kernels");
    CLI::App* cmd_cv = app.add_subcommand("critical-value", "estimate the critical constant");
    CLI::App* cmd_barriers = app.add_subcommand("barriers", "compute the liminf and chain barriers");
    CLI::App* cmd_classes = app.add_subcommand("classes", "Aubry set, minimizing nodes, classes");
    CLI::App* cmd_evolve = app.add_subcommand("evolve", "evolve random initial data and certify");
    CLI::App* cmd_represent =
        app.add_subcommand("represent", "representation demo: envelopes and round trips");
    CLI::App* cmd_verify = app.add_subcommand("verify", "run the full invariant battery");
    CLI::App* cmd_plot = app.add_subcommand("plot-data", "emit plot-ready CSV files");
    for (CLI::App* c : {cmd_kernel, cmd_cv, cmd_barriers, cmd_classes, cmd_evolve, cmd_represent,
                        cmd_verify, cmd_plot})
        add_common(c, opts);
    cmd_plot->add_option("--kind", plot_kind,
                         "barrier-heatmap | orbit-waterfall | convergence | classes")
        ->required();
    cmd_represent->add_option("--x0", represent_x0,
                              "base node for the extremal envelopes (default: first "
                              "representative)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        wkam::RunConfig cfg = resolve_config(opts);
        namespace fs = std::filesystem;
        fs::path dir(cfg.outputs);

        if (cmd_plot->parsed()) {
            fs::path out = wkam::emit_plot_data(cfg, plot_kind);
            std::cout << "wrote " << out.string() << "\n";
            return 0;
        }
        if (cmd_verify->parsed()) {
            wkam::VerificationReport rep = wkam::verify(cfg);
            fs::create_directories(dir);
            wkam::write_json(dir / "report.json", rep.to_json());
            for (const auto& e : rep.entries)
                std::cout << (e.status == "pass"   ? "[pass] "
                              : e.status == "fail" ? "[FAIL] "
                                                   : "[skip] ")
                          << e.name << "  measured=" << wkam::format_double(e.measured)
                          << " tol=" << wkam::format_double(e.tolerance)
                          << (e.detail.empty() ? "" : "  (" + e.detail + ")") << "\n";
            std::cout << (rep.all_passed() ? "all checks passed" : "some checks FAILED") << "\n";
            return rep.all_passed() ? 0 : 1;
        }

        wkam::SystemBundle s = wkam::build_system(cfg);
        fs::create_directories(dir);

        if (cmd_kernel->parsed()) {
            wkam::write_kernel_stage(s);
            std::cout << "kernel: " << cfg.n_x << " nodes, " << cfg.n_sub
                      << " substeps, kappa1=" << s.cv.kappa1 << "\n";
            return 0;
        }
        if (cmd_cv->parsed()) {
            wkam::write_kernel_stage(s);
            nlohmann::json cv{{"alpha0_karp", s.cv.alpha0_karp},
                              {"alpha0_subadditive", s.cv.alpha0_subadditive},
                              {"alpha0_bisection", s.cv.alpha0_bisection},
                              {"kappa1", s.cv.kappa1},
                              {"n_terms", s.cv.n_terms},
                              {"bisection_tol", s.cv.bisection_tol},
                              {"boundary_velocity_hits", s.cv.boundary_velocity_hits},
                              {"m_seq", s.cv.m_seq},
                              {"M_seq", s.cv.M_seq}};
            wkam::write_json(dir / "critical_value.json", cv);
            std::cout << "alpha0: karp=" << wkam::format_double(s.cv.alpha0_karp)
                      << " subadditive=" << wkam::format_double(s.cv.alpha0_subadditive)
                      << " bisection=" << wkam::format_double(s.cv.alpha0_bisection) << "\n";
            return 0;
        }

        // the remaining stages write the full bundle prefix they need
        wkam::write_bundle(s);
        if (cmd_barriers->parsed()) {
            std::cout << "barriers: h_inf" << (s.barriers.h_inf_exact ? " (exact period)" :
                                               " (running-min fallback)")
                      << ", " << s.barriers.mather_nodes.size() << " minimizing nodes\n";
        } else if (cmd_classes->parsed()) {
            std::cout << "classes: " << s.aubry.classes.classes.size()
                      << " static classes over " << s.aubry.mather.nodes.size()
                      << " minimizing nodes (aubry " << s.aubry.aubry_nodes.size() << ")\n";
        } else if (cmd_evolve->parsed()) {
            nlohmann::json oj = wkam::read_json(dir / "orbits.json");
            std::cout << "evolved " << oj.at("orbits").size() << " orbits to horizon "
                      << s.horizon << "\n";
        } else if (cmd_represent->parsed()) {
            const auto& reps = s.aubry.classes.representatives;
            int x0 = represent_x0 >= 0 ? represent_x0 : reps.front();
            wkam::ExtremalSolutions ext = wkam::extremal_solutions(s.barriers.k, reps, x0);
            std::vector<wkam::ValueFunction> inits = wkam::seeded_initial_data(cfg, 1);
            wkam::OmegaCertificate cert =
                wkam::certify_omega_member(s.b, inits[0], s.horizon, cfg.matrix_tol);
            nlohmann::json rj{{"x0", x0},
                              {"v_plus", ext.v_plus},
                              {"v_minus", ext.v_minus},
                              {"representatives", reps}};
            if (cert.certified) {
                double rt = wkam::roundtrip_check(cert.cycle.front(), s.barriers.k, reps, 1e-6);
                rj["roundtrip_deviation"] = rt;
                rj["orbit_period"] = cert.period;
            } else {
                rj["roundtrip_deviation"] = nullptr;
            }
            wkam::write_json(dir / "represent.json", rj);
            std::cout << "representation demo written (x0=" << x0 << ")\n";
        }
        return 0;
    } catch (const wkam::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case wkam::ErrorKind::Usage:
            case wkam::ErrorKind::Config: return 2;
            default: return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
