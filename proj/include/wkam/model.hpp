#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wkam/errors.hpp"

namespace wkam {

/// Wraps a coordinate into [0, 1).
inline double wrap_unit(double x) {
    double y = x - std::floor(x);
    return (y >= 1.0) ? y - 1.0 : y;
}

/// Distance on the unit circle, in [0, 1/2].
inline double circle_distance(double x, double y) {
    double d = std::abs(wrap_unit(x) - wrap_unit(y));
    return std::min(d, 1.0 - d);
}

/// Uniform spatial grid x_i = i / n_x on the unit circle.
struct CircleGrid {
    int n_x;
    static constexpr double diameter = 0.5;

    explicit CircleGrid(int nodes) : n_x(nodes) {
        if (n_x < 2) throw config_error("CircleGrid: n_x must be >= 2");
    }

    double node(int i) const { return static_cast<double>(i) / n_x; }
    double spacing() const { return 1.0 / n_x; }
    double distance(int i, int j) const { return circle_distance(node(i), node(j)); }
    int cell_distance(int i, int j) const {
        int d = std::abs(i - j) % n_x;
        return std::min(d, n_x - d);
    }
};

/// Substep times t_k = k / n_sub tiling one period.
struct TimeGrid {
    int n_sub;

    explicit TimeGrid(int substeps) : n_sub(substeps) {
        if (n_sub < 1) throw config_error("TimeGrid: n_sub must be >= 1");
    }

    double dt() const { return 1.0 / n_sub; }
    double time(int k) const { return static_cast<double>(k) / n_sub; }
};

/// Spatial potential as a finite Fourier series, optionally multiplied by
/// (1 + amplitude * cos(2 pi harmonic t)).
struct PotentialSpec {
    std::vector<double> fourier_cos;  // coefficient m multiplies cos(2 pi m x), m >= 0
    std::vector<double> fourier_sin;  // coefficient m multiplies sin(2 pi (m+1) x)
    std::optional<std::pair<double, int>> time_modulation;

    double spatial(double x) const {
        constexpr double tau = 2.0 * std::numbers::pi;
        double v = 0.0;
        for (size_t m = 0; m < fourier_cos.size(); ++m)
            v += fourier_cos[m] * std::cos(tau * static_cast<double>(m) * x);
        for (size_t m = 0; m < fourier_sin.size(); ++m)
            v += fourier_sin[m] * std::sin(tau * static_cast<double>(m + 1) * x);
        return v;
    }

    double operator()(double t, double x) const {
        double v = spatial(x);
        if (time_modulation) {
            constexpr double tau = 2.0 * std::numbers::pi;
            v *= 1.0 + time_modulation->first * std::cos(tau * time_modulation->second * t);
        }
        return v;
    }

    /// Upper bound on |V| from the coefficient sums.
    double max_abs_bound() const {
        double s = 0.0;
        for (double c : fourier_cos) s += std::abs(c);
        for (double c : fourier_sin) s += std::abs(c);
        if (time_modulation) s *= 1.0 + std::abs(time_modulation->first);
        return s;
    }
};

/// Tabulated Lagrangian samples: bilinear in (x, v), nearest substep in t.
struct TabulatedLagrangian {
    int n_t = 1;         // substep samples per period
    int n_x = 2;         // spatial samples on the circle
    double v_min = -1.0;
    double v_max_grid = 1.0;
    int n_v = 2;         // velocity samples, inclusive of both ends
    std::vector<double> values;  // [t][x][v] row-major

    double sample(int it, int ix, int iv) const {
        return values[(static_cast<size_t>(it) * n_x + ix) * n_v + iv];
    }

    double eval(double t, double x, double v) const {
        int it = static_cast<int>(std::floor(wrap_unit(t) * n_t + 0.5)) % n_t;
        double fx = wrap_unit(x) * n_x;
        int ix = static_cast<int>(std::floor(fx));
        double ax = fx - ix;
        int ix1 = (ix + 1) % n_x;

        double clamped = std::clamp(v, v_min, v_max_grid);
        double fv = (clamped - v_min) / (v_max_grid - v_min) * (n_v - 1);
        int iv = std::min(static_cast<int>(std::floor(fv)), n_v - 2);
        double av = fv - iv;

        double lo = (1 - ax) * sample(it, ix, iv) + ax * sample(it, ix1, iv);
        double hi = (1 - ax) * sample(it, ix, iv + 1) + ax * sample(it, ix1, iv + 1);
        return (1 - av) * lo + av * hi;
    }
};

/// Time-periodic Lagrangian on the circle. Mechanical means
/// L(t,x,v) = v^2/2 - V(t,x); evaluation is restricted to |v| <= v_max.
struct LagrangianSpec {
    std::variant<PotentialSpec, TabulatedLagrangian> kind;
    double v_max;

    bool is_mechanical() const { return std::holds_alternative<PotentialSpec>(kind); }
    const PotentialSpec& potential() const { return std::get<PotentialSpec>(kind); }
};

/// Default velocity truncation: 4 * sqrt(1 + max|V|). Mechanical energy
/// estimates put minimizers well inside this bound.
inline double default_v_max(const PotentialSpec& potential) {
    return 4.0 * std::sqrt(1.0 + potential.max_abs_bound());
}

inline LagrangianSpec mechanical_lagrangian(PotentialSpec potential,
                                            std::optional<double> v_max = std::nullopt) {
    double vm = v_max ? *v_max : default_v_max(potential);
    if (vm <= 0.0) throw config_error("LagrangianSpec: v_max must be positive");
    return LagrangianSpec{std::move(potential), vm};
}

/// L(t, x, v) with t, x taken modulo 1.
inline double eval_lagrangian(const LagrangianSpec& spec, double t, double x, double v) {
    if (std::abs(v) > spec.v_max)
        throw numeric_error("eval_lagrangian: |v| = " + std::to_string(std::abs(v)) +
                            " exceeds v_max = " + std::to_string(spec.v_max));
    if (spec.is_mechanical()) return 0.5 * v * v - spec.potential()(wrap_unit(t), wrap_unit(x));
    return std::get<TabulatedLagrangian>(spec.kind).eval(t, x, v);
}

struct LegendreResult {
    double value = 0.0;
    bool boundary_maximizer = false;  // argmax hit a p-grid endpoint: widen the grid
};

/// max over the sampled p-grid of p*v - H(p). Used to cross-check mechanical
/// specs against their Hamiltonians.
inline LegendreResult legendre_transform(const std::vector<double>& p_grid,
                                         const std::vector<double>& h_values, double v) {
    if (p_grid.size() != h_values.size() || p_grid.size() < 2)
        throw config_error("legendre_transform: p grid and samples must match, size >= 2");
    LegendreResult out;
    out.value = -std::numeric_limits<double>::infinity();
    size_t argmax = 0;
    for (size_t i = 0; i < p_grid.size(); ++i) {
        double cand = p_grid[i] * v - h_values[i];
        if (cand > out.value) {
            out.value = cand;
            argmax = i;
        }
    }
    out.boundary_maximizer = (argmax == 0 || argmax + 1 == p_grid.size());
    return out;
}

/// Named scenario registry; the names are part of the CLI contract.
inline std::vector<std::pair<std::string, LagrangianSpec>> builtin_scenarios() {
    std::vector<std::pair<std::string, LagrangianSpec>> out;
    out.emplace_back("free", mechanical_lagrangian(PotentialSpec{}));
    out.emplace_back("pendulum", mechanical_lagrangian(PotentialSpec{{0.0, 1.0}, {}, {}}));
    out.emplace_back("double-well", mechanical_lagrangian(PotentialSpec{{0.0, 0.0, 1.0}, {}, {}}));
    out.emplace_back("pendulum-tmod",
                     mechanical_lagrangian(PotentialSpec{{0.0, 1.0}, {}, {{0.5, 1}}}));
    return out;
}

inline LagrangianSpec scenario_by_name(const std::string& name) {
    for (auto& [n, spec] : builtin_scenarios())
        if (n == name) return spec;
    throw config_error("unknown scenario \"" + name +
                       "\" (known: free, pendulum, double-well, pendulum-tmod)");
}

}  // namespace wkam
