#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wkam/errors.hpp"
#include "wkam/model.hpp"
#include "wkam/tropical.hpp"

namespace wkam {

/// One-substep action kernel: entry (i,j) covers [t_k, t_k + dt].
struct SubstepKernel {
    TropicalMatrix matrix;
    int substep_index = 0;
    long long boundary_velocity_hits = 0;  // minimizers within one grid hop of v_max
};

/// Discrete action over the substep [t_k, t_k+dt]: midpoint rule in both
/// time and space, minimized over integer windings with |v| <= v_max.
inline SubstepKernel build_substep_kernel(const LagrangianSpec& model, const CircleGrid& grid,
                                          const TimeGrid& tgrid, int k) {
    if (k < 0 || k >= tgrid.n_sub)
        throw logic_error("build_substep_kernel: substep index out of range");
    const double dt = tgrid.dt();
    const double t_mid = tgrid.time(k) + 0.5 * dt;
    const double reach = model.v_max * dt;
    const double v_cell = grid.spacing() / dt;  // velocity of a one-cell hop

    SubstepKernel out{TropicalMatrix(grid.n_x), k, 0};
    for (int i = 0; i < grid.n_x; ++i) {
        const double xi = grid.node(i);
        for (int j = 0; j < grid.n_x; ++j) {
            const double base = grid.node(j) - xi;
            const int w_lo = static_cast<int>(std::ceil(-reach - base - 1e-15));
            const int w_hi = static_cast<int>(std::floor(reach - base + 1e-15));
            double best = kUnreachable;
            double best_v = 0.0;
            for (int w = w_lo; w <= w_hi; ++w) {
                const double disp = base + w;
                const double v = disp / dt;
                if (std::abs(v) > model.v_max) continue;
                const double x_mid = wrap_unit(xi + 0.5 * disp);
                const double cand = dt * eval_lagrangian(model, t_mid, x_mid, v);
                if (cand < best) {
                    best = cand;
                    best_v = v;
                }
            }
            out.matrix(i, j) = best;
            if (is_reachable(best) && std::abs(best_v) > model.v_max - v_cell)
                ++out.boundary_velocity_hits;
        }
    }
    return out;
}

/// One-period kernel: tropical product of the substep kernels in time order,
/// plus the reachability metadata the critical-value stage relies on.
struct PeriodKernel {
    TropicalMatrix matrix;
    std::vector<SubstepKernel> substeps;
    long long boundary_velocity_hits = 0;
};

inline TropicalMatrix compose_substep_matrices(const std::vector<SubstepKernel>& substeps) {
    if (substeps.empty()) throw logic_error("compose_period_kernel: no substeps");
    TropicalMatrix acc = substeps.front().matrix;
    for (size_t k = 1; k < substeps.size(); ++k) {
        if (substeps[k].matrix.dim() != acc.dim())
            throw logic_error("compose_period_kernel: dimension mismatch");
        acc = mp_product(acc, substeps[k].matrix);
    }
    return acc;
}

inline PeriodKernel compose_period_kernel(std::vector<SubstepKernel> substeps) {
    for (const auto& s : substeps)
        for (int i = 0; i < s.matrix.dim(); ++i)
            if (s.matrix.row_all_unreachable(i))
                throw numeric_error("compose_period_kernel: substep " +
                                    std::to_string(s.substep_index) + " has an all-unreachable row " +
                                    std::to_string(i) + " (v_max too small for the grid)");
    PeriodKernel out;
    out.matrix = compose_substep_matrices(substeps);
    for (const auto& s : substeps) out.boundary_velocity_hits += s.boundary_velocity_hits;
    out.substeps = std::move(substeps);
    for (int i = 0; i < out.matrix.dim(); ++i)
        if (out.matrix.row_all_unreachable(i) || out.matrix.col_all_unreachable(i))
            throw numeric_error("compose_period_kernel: node " + std::to_string(i) +
                                " unreachable over a full period");
    return out;
}

inline PeriodKernel build_period_kernel(const LagrangianSpec& model, const CircleGrid& grid,
                                        const TimeGrid& tgrid) {
    std::vector<SubstepKernel> substeps;
    substeps.reserve(tgrid.n_sub);
    for (int k = 0; k < tgrid.n_sub; ++k)
        substeps.push_back(build_substep_kernel(model, grid, tgrid, k));
    return compose_period_kernel(std::move(substeps));
}

/// Discrete minimizing trajectory: one grid node per substep boundary.
struct MinimizingPath {
    std::vector<int> nodes;
    double total_action = 0.0;
};

/// Recovers a minimizing node sequence for the composed kernel entry (i,j)
/// by forward/backward dynamic programming. Ties pick the smallest
/// intermediate node index, which makes golden-file tests deterministic.
inline MinimizingPath extract_minimizing_path(const std::vector<SubstepKernel>& substeps, int i,
                                              int j) {
    if (substeps.empty()) throw logic_error("extract_minimizing_path: no substeps");
    const int n = substeps.front().matrix.dim();
    const int steps = static_cast<int>(substeps.size());

    // forward[k][z]: min action i -> z over substeps 0..k-1
    std::vector<std::vector<double>> forward(steps + 1, std::vector<double>(n, kUnreachable));
    forward[0][i] = 0.0;
    for (int k = 0; k < steps; ++k)
        for (int u = 0; u < n; ++u) {
            if (!is_reachable(forward[k][u])) continue;
            for (int v = 0; v < n; ++v) {
                double cand = tropical_add(forward[k][u], substeps[k].matrix(u, v));
                if (cand < forward[k + 1][v]) forward[k + 1][v] = cand;
            }
        }
    if (!is_reachable(forward[steps][j]))
        throw numeric_error("extract_minimizing_path: node " + std::to_string(j) +
                            " unreachable from " + std::to_string(i));

    // backward[k][z]: min action z -> j over substeps k..end
    std::vector<std::vector<double>> backward(steps + 1, std::vector<double>(n, kUnreachable));
    backward[steps][j] = 0.0;
    for (int k = steps - 1; k >= 0; --k)
        for (int u = 0; u < n; ++u) {
            double best = kUnreachable;
            for (int v = 0; v < n; ++v) {
                double cand = tropical_add(substeps[k].matrix(u, v), backward[k + 1][v]);
                best = std::min(best, cand);
            }
            backward[k][u] = best;
        }

    const double total = forward[steps][j];
    MinimizingPath path;
    path.nodes.push_back(i);
    path.total_action = total;
    int cur = i;
    double spent = 0.0;
    for (int k = 0; k < steps; ++k) {
        int chosen = -1;
        for (int v = 0; v < n; ++v) {
            double through = tropical_add(tropical_add(spent, substeps[k].matrix(cur, v)),
                                          backward[k + 1][v]);
            if (is_reachable(through) && std::abs(through - total) <= 1e-12) {
                chosen = v;
                break;  // smallest index first
            }
        }
        if (chosen < 0) throw logic_error("extract_minimizing_path: broken DP chain");
        spent = tropical_add(spent, substeps[k].matrix(cur, chosen));
        cur = chosen;
        path.nodes.push_back(cur);
    }
    return path;
}

/// Empirical Lipschitz constant of a kernel: largest adjacent-node
/// difference over the grid spacing, rows and columns both.
inline double kernel_lipschitz_estimate(const TropicalMatrix& a, const CircleGrid& grid) {
    if (a.dim() != grid.n_x) throw logic_error("kernel_lipschitz_estimate: dimension mismatch");
    const double h = grid.spacing();
    double kappa = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        const int i2 = (i + 1) % a.dim();
        for (int j = 0; j < a.dim(); ++j) {
            if (is_reachable(a(i, j)) && is_reachable(a(i2, j)))
                kappa = std::max(kappa, std::abs(a(i, j) - a(i2, j)) / h);
            if (is_reachable(a(j, i)) && is_reachable(a(j, i2)))
                kappa = std::max(kappa, std::abs(a(j, i) - a(j, i2)) / h);
        }
    }
    return kappa;
}

}  // namespace wkam
