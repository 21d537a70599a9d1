#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "wkam/barriers.hpp"
#include "wkam/errors.hpp"
#include "wkam/kernel.hpp"
#include "wkam/tropical.hpp"

namespace wkam {

/// Grid function under evolution; the time tag is the substep offset into
/// the current period (tag / n_sub is the rational time modulo 1).
struct ValueFunction {
    std::vector<double> values;
    int substep_tag = 0;
    int n_sub = 1;

    int dim() const { return static_cast<int>(values.size()); }
};

inline double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double sup_dist(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw logic_error("sup_dist: dimension mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Largest adjacent-node difference over the grid spacing.
inline double lipschitz_seminorm(const std::vector<double>& values, const CircleGrid& grid) {
    if (static_cast<int>(values.size()) != grid.n_x)
        throw logic_error("lipschitz_seminorm: dimension mismatch");
    double m = 0.0;
    for (int i = 0; i < grid.n_x; ++i)
        m = std::max(m, std::abs(values[(i + 1) % grid.n_x] - values[i]) / grid.spacing());
    return m;
}

/// One full normalized period: (Tu)(x) = min_y u(y) + B(y, x).
inline ValueFunction apply_T(const TropicalMatrix& b, const ValueFunction& u) {
    if (u.dim() != b.dim()) throw logic_error("apply_T: dimension mismatch");
    return ValueFunction{mp_vec_product(u.values, b), u.substep_tag, u.n_sub};
}

/// One substep with its share of the normalization: alpha0 * dt is added so
/// that a full period accumulates exactly alpha0.
inline ValueFunction apply_substep(const SubstepKernel& step, double alpha0, int n_sub,
                                   const ValueFunction& u) {
    ValueFunction out{mp_vec_product(u.values, step.matrix), (u.substep_tag + 1) % n_sub, n_sub};
    const double shift = alpha0 / n_sub;
    for (double& x : out.values) x += shift;
    return out;
}

/// Orbit of a value function under the full-period operator.
struct OrbitRecord {
    ValueFunction initial;
    std::vector<ValueFunction> snapshots;          // u_0 .. u_n at integer times
    std::vector<ValueFunction> substep_snapshots;  // optional intra-period states
    std::optional<int> transient;
    std::optional<int> period;
    std::vector<double> sup_increments;            // ||u_{n+1} - u_n||
};

inline OrbitRecord evolve(const TropicalMatrix& b, const ValueFunction& u0, int n_periods) {
    if (n_periods < 1) throw config_error("evolve: n_periods must be >= 1");
    OrbitRecord orbit;
    orbit.initial = u0;
    orbit.snapshots.push_back(u0);
    for (int n = 0; n < n_periods; ++n) {
        ValueFunction next = apply_T(b, orbit.snapshots.back());
        orbit.sup_increments.push_back(sup_dist(next.values, orbit.snapshots.back().values));
        orbit.snapshots.push_back(std::move(next));
    }
    return orbit;
}

/// Substep-resolved evolution over the raw kernel, normalized per substep.
inline OrbitRecord evolve_substeps(const PeriodKernel& kernel, double alpha0,
                                   const ValueFunction& u0, int n_periods) {
    if (n_periods < 1) throw config_error("evolve: n_periods must be >= 1");
    const int n_sub = static_cast<int>(kernel.substeps.size());
    OrbitRecord orbit;
    orbit.initial = u0;
    orbit.snapshots.push_back(u0);
    ValueFunction cur = u0;
    cur.n_sub = n_sub;
    for (int n = 0; n < n_periods; ++n) {
        for (int k = 0; k < n_sub; ++k) {
            cur = apply_substep(kernel.substeps[k], alpha0, n_sub, cur);
            orbit.substep_snapshots.push_back(cur);
        }
        orbit.sup_increments.push_back(sup_dist(cur.values, orbit.snapshots.back().values));
        orbit.snapshots.push_back(cur);
    }
    return orbit;
}

struct Recurrence {
    bool found = false;
    int transient = 0;
    int period = 0;
    double min_return = kUnreachable;  // smallest return distance seen when not found
};

/// Smallest (transient + period) with ||u_{m+p} - u_m|| <= tol; ties prefer
/// the smaller transient. Snapshots are indexed from 0.
inline Recurrence detect_recurrence(const OrbitRecord& orbit, double tol) {
    const auto& snaps = orbit.snapshots;
    if (snaps.size() < 3) return Recurrence{};
    Recurrence rec;
    for (size_t n = 1; n < snaps.size(); ++n)
        for (size_t m = 0; m < n; ++m) {
            double d = sup_dist(snaps[n].values, snaps[m].values);
            rec.min_return = std::min(rec.min_return, d);
            if (d <= tol) {
                rec.found = true;
                rec.transient = static_cast<int>(m);
                rec.period = static_cast<int>(n - m);
                return rec;
            }
        }
    return rec;
}

/// A certified non-wandering element: one detected eventual cycle of the
/// orbit, exported by member.
struct OmegaCertificate {
    bool certified = false;
    int transient = 0;
    int period = 0;
    std::vector<ValueFunction> cycle;
    double min_return = kUnreachable;
};

/// Horizon for certification: 16 periods per unit of critical cyclicity,
/// floored at 512 periods (transients dominate short cyclicities) and
/// capped at 4096.
inline int omega_horizon(long long cyclicity_lcm) {
    long long h = 16LL * std::max(1LL, cyclicity_lcm);
    h = std::max(h, 512LL);
    return static_cast<int>(std::min(h, 4096LL));
}

inline OmegaCertificate certify_omega_member(const TropicalMatrix& b, const ValueFunction& u0,
                                             int horizon, double tol) {
    OrbitRecord orbit = evolve(b, u0, horizon);
    Recurrence rec = detect_recurrence(orbit, tol);
    OmegaCertificate cert;
    cert.min_return = rec.min_return;
    if (!rec.found) return cert;
    cert.certified = true;
    cert.transient = rec.transient;
    cert.period = rec.period;
    for (int t = rec.transient; t < rec.transient + rec.period; ++t)
        cert.cycle.push_back(orbit.snapshots[t]);
    return cert;
}

/// max over j <= j_max of | ||T^j v - T^j w|| - ||v - w|| |.
inline double isometry_check(const ValueFunction& v, const ValueFunction& w,
                             const TropicalMatrix& b, int j_max) {
    double base = sup_dist(v.values, w.values);
    double worst = 0.0;
    ValueFunction tv = v, tw = w;
    for (int j = 1; j <= j_max; ++j) {
        tv = apply_T(b, tv);
        tw = apply_T(b, tw);
        worst = std::max(worst, std::abs(sup_dist(tv.values, tw.values) - base));
    }
    return worst;
}

/// Backward step inside a detected cycle: the member w with Tw = v.
inline ValueFunction inverse_on_omega(const ValueFunction& v,
                                      const std::vector<ValueFunction>& cycle,
                                      const TropicalMatrix& b, double tol) {
    const int p = static_cast<int>(cycle.size());
    if (p == 0) throw logic_error("inverse_on_omega: empty cycle");
    int at = -1;
    for (int t = 0; t < p; ++t)
        if (sup_dist(cycle[t].values, v.values) <= tol) { at = t; break; }
    if (at < 0) throw numeric_error("inverse_on_omega: function is not a member of the cycle");
    const ValueFunction& w = cycle[(at + p - 1) % p];
    if (sup_dist(apply_T(b, w).values, v.values) > 10.0 * tol + 1e-12)
        throw numeric_error("inverse_on_omega: cycle is not closed under the operator");
    return w;
}

/// Representation: v(x) = min over domain nodes y of psi(y) + k(y, x).
/// Refuses maps that violate the domination premise.
inline ValueFunction represent(const DominatedMap& psi, const TropicalMatrix& k, double tol) {
    DominationCheck dc = check_domination(psi, k, tol);
    if (!dc.ok)
        throw numeric_error("represent: domination violated by " +
                            std::to_string(dc.max_violation) + " at pair (" +
                            std::to_string(dc.witness.first) + ", " +
                            std::to_string(dc.witness.second) + ")");
    const int n = k.dim();
    ValueFunction v;
    v.values.assign(n, kUnreachable);
    for (size_t a = 0; a < psi.domain_nodes.size(); ++a) {
        const int y = psi.domain_nodes[a];
        for (int x = 0; x < n; ++x)
            v.values[x] = std::min(v.values[x], tropical_add(psi.values[a], k(y, x)));
    }
    for (double x : v.values)
        if (!is_reachable(x)) throw numeric_error("represent: barrier row leaves gaps");
    return v;
}

/// Same infimum taken over a larger node set (the full proxy), with psi
/// extended along the barrier; equality with `represent` is a consistency
/// check, not a faster path.
inline ValueFunction represent_full_proxy(const DominatedMap& psi, const TropicalMatrix& k,
                                          const std::vector<int>& proxy_nodes, double tol) {
    ValueFunction base = represent(psi, k, tol);
    DominatedMap extended;
    extended.barrier_name = psi.barrier_name;
    extended.domain_nodes = proxy_nodes;
    for (int y : proxy_nodes) extended.values.push_back(base.values[y]);
    return represent(extended, k, 10.0 * tol);
}

/// n-periodic representation through the n-liminf barrier.
inline ValueFunction represent_n(const DominatedMap& psi, const TropicalMatrix& h_n_inf,
                                 double tol) {
    return represent(psi, h_n_inf, tol);
}

/// ||represent(v restricted to the representatives) - v||.
inline double roundtrip_check(const ValueFunction& v, const TropicalMatrix& k,
                              const std::vector<int>& representatives, double tol) {
    DominatedMap psi;
    psi.barrier_name = "k";
    psi.domain_nodes = representatives;
    for (int y : representatives) psi.values.push_back(v.values[y]);
    ValueFunction back = represent(psi, k, tol);
    return sup_dist(back.values, v.values);
}

struct UniquenessCheck {
    bool premise_met = false;   // the two members agree on the proxy nodes
    bool pass = false;          // premise met and global agreement follows
    double proxy_max_diff = 0.0;
    double global_max_diff = 0.0;
};

/// Members agreeing on the proxy nodes must agree everywhere; the global
/// budget scales the proxy tolerance by (1 + dim * eps_budget).
inline UniquenessCheck uniqueness_check(const ValueFunction& u, const ValueFunction& v,
                                        const std::vector<int>& mather_nodes, double tol,
                                        double eps_budget = 1e-2) {
    UniquenessCheck out;
    for (int y : mather_nodes)
        out.proxy_max_diff = std::max(out.proxy_max_diff, std::abs(u.values[y] - v.values[y]));
    out.global_max_diff = sup_dist(u.values, v.values);
    out.premise_met = out.proxy_max_diff <= tol;
    out.pass = !out.premise_met ||
               out.global_max_diff <= tol * (1.0 + u.dim() * eps_budget);
    return out;
}

struct RecurrenceSpeedReport {
    bool uniform_cycles = true;
    int cycle_length = 0;            // L, when uniform
    double max_recurrence_dev = 0.0; // max_n ||T^{nL} v - v||
    int orbit_period = 0;
    long long cycle_lcm = 1;
    bool period_divides_lcm = false;
};

/// Certified members recur along multiples of the uniform proxy cycle
/// length; in all cases the orbit period divides the cycle-length lcm.
/// Callers assert max_recurrence_dev against their tolerance.
inline RecurrenceSpeedReport recurrence_speed_check(const OmegaCertificate& cert,
                                                    const MatherProxy& proxy,
                                                    const TropicalMatrix& b,
                                                    int n_checks = 4) {
    if (!cert.certified) throw logic_error("recurrence_speed_check: member not certified");
    RecurrenceSpeedReport rep;
    rep.orbit_period = cert.period;

    long long lcm = 1;
    int first_len = -1;
    for (auto& [node, len] : proxy.cycle_lengths) {
        lcm = std::lcm(lcm, static_cast<long long>(len));
        if (first_len < 0) first_len = len;
        else if (len != first_len) rep.uniform_cycles = false;
    }
    rep.cycle_lcm = lcm;
    rep.period_divides_lcm = (lcm % cert.period == 0);

    if (rep.uniform_cycles && first_len > 0) {
        rep.cycle_length = first_len;
        const ValueFunction& v = cert.cycle.front();
        ValueFunction cur = v;
        for (int n = 1; n <= n_checks; ++n) {
            for (int t = 0; t < first_len; ++t) cur = apply_T(b, cur);
            rep.max_recurrence_dev =
                std::max(rep.max_recurrence_dev, sup_dist(cur.values, v.values));
        }
    }
    return rep;
}

}  // namespace wkam
