#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "wkam/barriers.hpp"
#include "wkam/config.hpp"
#include "wkam/io.hpp"
#include "wkam/kernel.hpp"
#include "wkam/semigroup.hpp"

namespace wkam {

/// Everything the stages share for one configured system.
struct SystemBundle {
    RunConfig cfg;
    PeriodKernel kernel;
    CriticalValueReport cv;
    TropicalMatrix b;  // normalized period kernel
    BarrierSet barriers;
    AubryDecomposition aubry;
    int horizon = 0;
    double class_tol = 0.0;
};

inline SystemBundle build_system(const RunConfig& cfg) {
    SystemBundle s;
    s.cfg = cfg;
    CircleGrid grid(cfg.n_x);
    TimeGrid tgrid(cfg.n_sub);
    s.kernel = build_period_kernel(cfg.lagrangian(), grid, tgrid);
    s.cv = critical_value(s.kernel, grid, std::max(2, cfg.n_max_powers), cfg.bisection_tol);
    s.b = normalize(s.kernel.matrix, s.cv.alpha0_karp);

    BarrierOptions opt;
    opt.n_max_powers = cfg.n_max_powers;
    opt.matrix_tol = cfg.matrix_tol;
    opt.class_tol = cfg.class_tol;
    auto [bs, ad] = compute_barriers(s.kernel, s.cv.alpha0_karp, opt);
    s.barriers = std::move(bs);
    s.aubry = std::move(ad);
    s.horizon = cfg.omega_horizon > 0 ? cfg.omega_horizon : omega_horizon(s.aubry.mather.cyclicity);
    s.class_tol = effective_class_tol(opt, cfg.n_x);
    return s;
}

/// Deterministic random initial data for orbit studies.
inline std::vector<ValueFunction> seeded_initial_data(const RunConfig& cfg, int count,
                                                      double scale = 1.0) {
    std::mt19937_64 rng(static_cast<uint64_t>(cfg.seed));
    std::uniform_real_distribution<double> unit(-scale, scale);
    std::vector<ValueFunction> out;
    for (int k = 0; k < count; ++k) {
        ValueFunction u;
        u.n_sub = cfg.n_sub;
        u.values.resize(cfg.n_x);
        for (double& x : u.values) x = unit(rng);
        out.push_back(std::move(u));
    }
    return out;
}

struct OrbitStudy {
    OrbitRecord orbit;
    Recurrence recurrence;
};

inline OrbitStudy study_orbit(const SystemBundle& s, const ValueFunction& u0) {
    OrbitStudy st;
    st.orbit = evolve(s.b, u0, s.horizon);
    st.recurrence = detect_recurrence(st.orbit, s.cfg.matrix_tol);
    if (st.recurrence.found) {
        st.orbit.transient = st.recurrence.transient;
        st.orbit.period = st.recurrence.period;
    }
    return st;
}

namespace detail {

inline void write_orbit_csv(const std::filesystem::path& path, const OrbitRecord& orbit,
                            const CircleGrid& grid) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open " + path.string() + " for writing");
    out << "period,sup_increment";
    for (int i = 0; i < grid.n_x; ++i) out << ",v" << i;
    out << '\n';
    for (size_t n = 0; n < orbit.snapshots.size(); ++n) {
        out << n << ',' << format_double(n == 0 ? 0.0 : orbit.sup_increments[n - 1]);
        for (double v : orbit.snapshots[n].values) out << ',' << format_double(v);
        out << '\n';
    }
}

inline nlohmann::json classes_to_json(const StaticClasses& sc) {
    nlohmann::json j;
    j["classes"] = sc.classes;
    j["representatives"] = sc.representatives;
    nlohmann::json borderline = nlohmann::json::array();
    for (auto& [a, b, d] : sc.borderline) borderline.push_back({a, b, d});
    j["borderline"] = std::move(borderline);
    return j;
}

}  // namespace detail

/// Kernel artifacts: CSV plus a JSON twin carrying the metadata and the
/// matrix as a flat array.
inline void write_kernel_stage(const SystemBundle& s) {
    namespace fs = std::filesystem;
    fs::path dir(s.cfg.outputs);
    fs::create_directories(dir);
    write_matrix_csv(dir / "kernel.csv", s.kernel.matrix);
    nlohmann::json kj{{"scenario", s.cfg.scenario_label()},
                      {"n_x", s.cfg.n_x},
                      {"n_sub", s.cfg.n_sub},
                      {"v_max", s.cfg.lagrangian().v_max},
                      {"kappa1", s.cv.kappa1},
                      {"boundary_velocity_hits", s.kernel.boundary_velocity_hits},
                      {"csv", "kernel.csv"},
                      {"matrix", matrix_to_json(s.kernel.matrix)}};
    write_json(dir / "kernel.json", kj);
}

/// Writes the full artifact bundle into cfg.outputs. Deterministic for a
/// fixed config and seed. Returns the output directory.
inline std::filesystem::path write_bundle(const SystemBundle& s, int n_orbits = 4) {
    namespace fs = std::filesystem;
    const RunConfig& cfg = s.cfg;
    fs::path dir(cfg.outputs);
    fs::create_directories(dir / "orbits");
    CircleGrid grid(cfg.n_x);

    write_kernel_stage(s);

    nlohmann::json cv{{"alpha0_karp", s.cv.alpha0_karp},
                      {"alpha0_subadditive", s.cv.alpha0_subadditive},
                      {"alpha0_bisection", s.cv.alpha0_bisection},
                      {"kappa1", s.cv.kappa1},
                      {"n_terms", s.cv.n_terms},
                      {"bisection_tol", s.cv.bisection_tol},
                      {"boundary_velocity_hits", s.cv.boundary_velocity_hits},
                      {"m_seq", s.cv.m_seq},
                      {"M_seq", s.cv.M_seq}};
    write_json(dir / "critical_value.json", cv);

    write_matrix_csv(dir / "h_inf.csv", s.barriers.h_inf);
    write_matrix_csv(dir / "k_bar.csv", s.barriers.k);
    write_matrix_csv(dir / "h_under.csv", s.barriers.h_under);
    nlohmann::json bj{{"alpha0", s.barriers.alpha0},
                      {"h_inf_exact", s.barriers.h_inf_exact},
                      {"mather_nodes", s.barriers.mather_nodes},
                      {"matrix_tol", cfg.matrix_tol},
                      {"h_inf", matrix_to_json(s.barriers.h_inf)},
                      {"k_bar", matrix_to_json(s.barriers.k)},
                      {"h_under", matrix_to_json(s.barriers.h_under)},
                      {"files", {{"h_inf", "h_inf.csv"}, {"k_bar", "k_bar.csv"},
                                 {"h_under", "h_under.csv"}}}};
    nlohmann::json hn = nlohmann::json::object();
    for (auto& [n, h] : s.barriers.h_n_inf) {
        std::string name = "h_" + std::to_string(n) + "_inf.csv";
        write_matrix_csv(dir / name, h);
        hn[std::to_string(n)] = name;
    }
    bj["files"]["h_n_inf"] = std::move(hn);
    write_json(dir / "barriers.json", bj);

    nlohmann::json cj;
    cj["aubry_nodes"] = s.aubry.aubry_nodes;
    cj["mather_nodes"] = s.aubry.mather.nodes;
    nlohmann::json lengths = nlohmann::json::object();
    for (auto& [node, len] : s.aubry.mather.cycle_lengths) lengths[std::to_string(node)] = len;
    cj["cycle_lengths"] = std::move(lengths);
    cj["cyclicity"] = s.aubry.mather.cyclicity;
    cj["static_classes"] = detail::classes_to_json(s.aubry.classes);
    nlohmann::json ncl = nlohmann::json::object();
    for (auto& [n, sc] : s.aubry.n_classes) ncl[std::to_string(n)] = detail::classes_to_json(sc);
    cj["n_static_classes"] = std::move(ncl);
    cj["class_tol"] = s.class_tol;
    cj["matrix_tol"] = cfg.matrix_tol;
    cj["containment_violations"] = s.aubry.containment_violations;
    nlohmann::json coords = nlohmann::json::array();
    for (int i = 0; i < cfg.n_x; ++i) coords.push_back(grid.node(i));
    cj["node_coordinates"] = std::move(coords);
    write_json(dir / "classes.json", cj);

    nlohmann::json oj = nlohmann::json::array();
    std::vector<ValueFunction> inits = seeded_initial_data(cfg, n_orbits);
    for (int k = 0; k < n_orbits; ++k) {
        OrbitStudy st = study_orbit(s, inits[k]);
        std::string name = "orbit_" + std::to_string(k) + ".csv";
        detail::write_orbit_csv(dir / "orbits" / name, st.orbit, grid);
        nlohmann::json rec{{"file", "orbits/" + name},
                           {"certified", st.recurrence.found},
                           {"min_return", st.recurrence.min_return}};
        if (st.recurrence.found) {
            rec["transient"] = st.recurrence.transient;
            rec["period"] = st.recurrence.period;
        }
        oj.push_back(std::move(rec));
    }
    write_json(dir / "orbits.json", nlohmann::json{{"orbits", std::move(oj)},
                                                   {"horizon", s.horizon},
                                                   {"tol", cfg.matrix_tol}});
    return dir;
}

/// Plot-data emission: plain CSVs with a header row, one per kind, plus a
/// sidecar schema describing the columns.
inline std::filesystem::path emit_plot_data(const RunConfig& cfg, const std::string& kind) {
    namespace fs = std::filesystem;
    fs::path dir(cfg.outputs);
    CircleGrid grid(cfg.n_x);
    nlohmann::json schema;
    fs::path out;

    if (kind == "barrier-heatmap") {
        TropicalMatrix h = read_matrix_csv(dir / "h_inf.csv");
        out = dir / "plot_barrier_heatmap.csv";
        std::ofstream f(out);
        f << "i,j,value\n";
        for (int i = 0; i < h.dim(); ++i)
            for (int j = 0; j < h.dim(); ++j)
                f << i << ',' << j << ',' << format_double(h(i, j)) << '\n';
        schema["columns"] = {"i (source node)", "j (target node)", "barrier value"};
    } else if (kind == "orbit-waterfall") {
        nlohmann::json orbits = read_json(dir / "orbits.json");
        out = dir / "plot_orbit_waterfall.csv";
        std::ofstream f(out);
        f << "orbit,period,x,value\n";
        int idx = 0;
        for (const auto& rec : orbits.at("orbits")) {
            std::ifstream in(dir / rec.at("file").get<std::string>());
            std::string line;
            std::getline(in, line);  // header
            int period = 0;
            while (std::getline(in, line)) {
                std::stringstream ss(line);
                std::string tok;
                std::getline(ss, tok, ',');  // period index
                std::getline(ss, tok, ',');  // sup increment
                int node = 0;
                while (std::getline(ss, tok, ','))
                    f << idx << ',' << period << ',' << format_double(grid.node(node++)) << ','
                      << tok << '\n';
                ++period;
            }
            ++idx;
        }
        schema["columns"] = {"orbit id", "period index", "node coordinate", "value"};
    } else if (kind == "convergence") {
        nlohmann::json orbits = read_json(dir / "orbits.json");
        out = dir / "plot_convergence.csv";
        std::ofstream f(out);
        f << "orbit,period,sup_increment\n";
        int idx = 0;
        for (const auto& rec : orbits.at("orbits")) {
            std::ifstream in(dir / rec.at("file").get<std::string>());
            std::string line;
            std::getline(in, line);
            int period = 0;
            while (std::getline(in, line)) {
                std::stringstream ss(line);
                std::string tok;
                std::getline(ss, tok, ',');
                std::getline(ss, tok, ',');
                f << idx << ',' << period << ',' << tok << '\n';
                ++period;
            }
            ++idx;
        }
        schema["columns"] = {"orbit id", "period index", "sup-norm increment"};
    } else if (kind == "classes") {
        nlohmann::json cj = read_json(dir / "classes.json");
        out = dir / "plot_classes.csv";
        std::ofstream f(out);
        f << "node,x,class\n";
        const auto& classes = cj.at("static_classes").at("classes");
        for (size_t c = 0; c < classes.size(); ++c)
            for (int node : classes[c])
                f << node << ',' << format_double(grid.node(node)) << ',' << c << '\n';
        schema["columns"] = {"mather node", "node coordinate", "class id"};
    } else {
        throw Error(ErrorKind::Usage,
                    "plot-data: unknown kind \"" + kind +
                        "\" (known: barrier-heatmap, orbit-waterfall, convergence, classes)");
    }
    schema["kind"] = kind;
    schema["file"] = out.filename().string();
    write_json(dir / ("plot_" + kind + "_schema.json"), schema);
    return out;
}

}  // namespace wkam
