#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <variant>

#include <json.hpp>

#include "wkam/errors.hpp"
#include "wkam/io.hpp"
#include "wkam/model.hpp"

namespace wkam {

/// Run configuration. Every field has a documented default; unknown JSON
/// keys are rejected rather than ignored.
struct RunConfig {
    std::variant<std::string, LagrangianSpec> scenario = std::string("pendulum");
    int n_x = 128;
    int n_sub = 16;
    std::optional<double> v_max;  // empty: scenario default

    double matrix_tol = 1e-9;
    double class_tol = 0.0;       // 0: 10 * matrix_tol * n_x
    double bisection_tol = 1e-4;

    int n_max_powers = 512;
    int omega_horizon = 0;        // 0: 16 * cyclicity, floored at 512, capped at 4096

    std::string outputs = "out";
    long long seed = 12345;

    LagrangianSpec lagrangian() const {
        if (std::holds_alternative<std::string>(scenario)) {
            LagrangianSpec spec = scenario_by_name(std::get<std::string>(scenario));
            if (v_max) spec.v_max = *v_max;
            return spec;
        }
        LagrangianSpec spec = std::get<LagrangianSpec>(scenario);
        if (v_max) spec.v_max = *v_max;
        return spec;
    }

    std::string scenario_label() const {
        if (std::holds_alternative<std::string>(scenario)) return std::get<std::string>(scenario);
        return "inline";
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw config_error("config: unknown key \"" + it.key() + "\" in " + where);
}

inline PotentialSpec potential_from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"kind", "fourier_cos", "fourier_sin", "time_modulation", "v_max"},
                        "scenario");
    if (j.value("kind", "mechanical") != std::string("mechanical"))
        throw config_error("config: inline scenario kind must be \"mechanical\"");
    PotentialSpec pot;
    if (j.contains("fourier_cos")) pot.fourier_cos = j["fourier_cos"].get<std::vector<double>>();
    if (j.contains("fourier_sin")) pot.fourier_sin = j["fourier_sin"].get<std::vector<double>>();
    if (j.contains("time_modulation")) {
        const auto& tm = j["time_modulation"];
        reject_unknown_keys(tm, {"amplitude", "harmonic"}, "scenario.time_modulation");
        int harmonic = tm.at("harmonic").get<int>();
        if (harmonic < 1) throw config_error("config: time_modulation.harmonic must be >= 1");
        pot.time_modulation = {tm.at("amplitude").get<double>(), harmonic};
    }
    return pot;
}

inline nlohmann::json potential_to_json(const LagrangianSpec& spec) {
    const PotentialSpec& pot = spec.potential();
    nlohmann::json j{{"kind", "mechanical"}};
    j["fourier_cos"] = pot.fourier_cos;
    j["fourier_sin"] = pot.fourier_sin;
    if (pot.time_modulation)
        j["time_modulation"] = {{"amplitude", pot.time_modulation->first},
                                {"harmonic", pot.time_modulation->second}};
    j["v_max"] = spec.v_max;
    return j;
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(
        j, {"scenario", "grid", "tolerances", "horizons", "outputs", "seeds"}, "config");
    RunConfig cfg;

    if (j.contains("scenario")) {
        if (j["scenario"].is_string()) {
            std::string name = j["scenario"].get<std::string>();
            scenario_by_name(name);  // validate now, fail with the field name
            cfg.scenario = name;
        } else if (j["scenario"].is_object()) {
            const auto& sj = j["scenario"];
            std::optional<double> vm;
            if (sj.contains("v_max")) vm = sj["v_max"].get<double>();
            cfg.scenario = mechanical_lagrangian(detail::potential_from_json(sj), vm);
        } else {
            throw config_error("config: scenario must be a name or an inline object");
        }
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        detail::reject_unknown_keys(g, {"n_x", "n_sub", "v_max"}, "grid");
        if (g.contains("n_x")) cfg.n_x = g["n_x"].get<int>();
        if (g.contains("n_sub")) cfg.n_sub = g["n_sub"].get<int>();
        if (g.contains("v_max")) cfg.v_max = g["v_max"].get<double>();
    }
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        detail::reject_unknown_keys(t, {"matrix_tol", "class_tol", "bisection_tol"}, "tolerances");
        if (t.contains("matrix_tol")) cfg.matrix_tol = t["matrix_tol"].get<double>();
        if (t.contains("class_tol")) cfg.class_tol = t["class_tol"].get<double>();
        if (t.contains("bisection_tol")) cfg.bisection_tol = t["bisection_tol"].get<double>();
    }
    if (j.contains("horizons")) {
        const auto& h = j["horizons"];
        detail::reject_unknown_keys(h, {"n_max_powers", "omega_horizon"}, "horizons");
        if (h.contains("n_max_powers")) cfg.n_max_powers = h["n_max_powers"].get<int>();
        if (h.contains("omega_horizon")) cfg.omega_horizon = h["omega_horizon"].get<int>();
    }
    if (j.contains("outputs")) cfg.outputs = j["outputs"].get<std::string>();
    if (j.contains("seeds")) cfg.seed = j["seeds"].get<long long>();

    if (cfg.n_x < 2) throw config_error("config: grid.n_x must be >= 2");
    if (cfg.n_sub < 1) throw config_error("config: grid.n_sub must be >= 1");
    if (cfg.v_max && *cfg.v_max <= 0.0) throw config_error("config: grid.v_max must be positive");
    if (cfg.matrix_tol <= 0.0) throw config_error("config: tolerances.matrix_tol must be positive");
    if (cfg.class_tol < 0.0) throw config_error("config: tolerances.class_tol must be >= 0");
    if (cfg.bisection_tol <= 0.0)
        throw config_error("config: tolerances.bisection_tol must be positive");
    if (cfg.n_max_powers < 2) throw config_error("config: horizons.n_max_powers must be >= 2");
    if (cfg.omega_horizon < 0) throw config_error("config: horizons.omega_horizon must be >= 0");
    return cfg;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    if (std::holds_alternative<std::string>(cfg.scenario))
        j["scenario"] = std::get<std::string>(cfg.scenario);
    else
        j["scenario"] = detail::potential_to_json(std::get<LagrangianSpec>(cfg.scenario));
    j["grid"] = {{"n_x", cfg.n_x}, {"n_sub", cfg.n_sub}};
    if (cfg.v_max) j["grid"]["v_max"] = *cfg.v_max;
    j["tolerances"] = {{"matrix_tol", cfg.matrix_tol},
                       {"class_tol", cfg.class_tol},
                       {"bisection_tol", cfg.bisection_tol}};
    j["horizons"] = {{"n_max_powers", cfg.n_max_powers}, {"omega_horizon", cfg.omega_horizon}};
    j["outputs"] = cfg.outputs;
    j["seeds"] = cfg.seed;
    return j;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    nlohmann::json j = read_json(path);
    if (!j.is_object()) throw config_error("config: top level must be a JSON object");
    return config_from_json(j);
}

}  // namespace wkam
