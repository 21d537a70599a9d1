#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "wkam/errors.hpp"
#include "wkam/kernel.hpp"
#include "wkam/model.hpp"
#include "wkam/tropical.hpp"

namespace wkam {

/// The critical constant with three estimators and the subadditive
/// bracket diagnostics m_n (min entries) and M_n (max entries).
struct CriticalValueReport {
    double alpha0_karp = 0.0;        // authoritative: minus the minimum cycle mean
    double alpha0_subadditive = 0.0; // midpoint of [-M_n/n, -m_n/n] at the final n
    double alpha0_bisection = 0.0;   // boundedness bisection per the drift characterization
    std::vector<double> m_seq;       // m_1..m_n of the raw kernel powers
    std::vector<double> M_seq;
    double kappa1 = 0.0;             // empirical Lipschitz constant of the kernel
    double bisection_tol = 0.0;
    int n_terms = 0;
    long long boundary_velocity_hits = 0;
};

namespace detail {

/// The estimators bracket the critical constant only when every component
/// of the finite-arc digraph carries cycles of the same minimal mean.
/// Strongly connected kernels satisfy this trivially; diagonal kernels
/// (every node a rest cycle) do as well.
inline void require_bracketable(const TropicalMatrix& a) {
    if (is_strongly_connected(a)) return;
    int n_comps = 0;
    std::vector<int> comp = strongly_connected_components(a, n_comps);
    std::vector<TropicalMatrix> subs;
    std::vector<std::vector<int>> members(n_comps);
    for (int v = 0; v < a.dim(); ++v) members[comp[v]].push_back(v);
    double lo = kUnreachable, hi = -kUnreachable;
    for (int c = 0; c < n_comps; ++c) {
        const auto& nodes = members[c];
        TropicalMatrix sub(static_cast<int>(nodes.size()));
        for (size_t i = 0; i < nodes.size(); ++i)
            for (size_t j = 0; j < nodes.size(); ++j)
                sub(static_cast<int>(i), static_cast<int>(j)) = a(nodes[i], nodes[j]);
        double mean;
        try {
            mean = min_mean_cycle(sub).lambda;
        } catch (const Error&) {
            throw numeric_error("critical_value: kernel component without a cycle");
        }
        lo = std::min(lo, mean);
        hi = std::max(hi, mean);
    }
    if (hi - lo > 1e-9)
        throw numeric_error("critical_value: kernel components disagree on the cycle mean "
                            "(disconnected kernel)");
}

/// Drift test for a candidate constant c: iterate the column-minima vector
/// of (A + c)^n and watch for an escape from the bounded band.
/// Returns -1 (drifts down: c too small), +1 (drifts up), 0 (bounded to cap).
///
/// Fast path: once some lag L makes u_{n+L} - u_n a constant vector, the
/// iterate is an additive eigenvector and that constant equals L times the
/// minimum cycle mean of A + c, which settles the drift sign immediately.
inline int bisection_drift(const TropicalMatrix& a, double c, double threshold, long long cap) {
    TropicalMatrix b = a.shifted(c);
    const int dim = a.dim();
    constexpr int kMaxLag = 4;
    std::vector<std::vector<double>> history{std::vector<double>(dim, 0.0)};

    for (long long n = 1; n <= cap; ++n) {
        std::vector<double> u = mp_vec_product(history.back(), b);
        double lo = kUnreachable, hi = -kUnreachable;
        for (double x : u) {
            if (!is_reachable(x)) continue;
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        if (lo < -threshold) return -1;
        if (hi > threshold) return +1;

        for (int lag = 1; lag <= kMaxLag && lag <= static_cast<int>(history.size()); ++lag) {
            const std::vector<double>& prev = history[history.size() - lag];
            double delta = u[0] - prev[0];
            bool constant = true;
            for (int i = 1; i < dim && constant; ++i)
                constant = std::abs((u[i] - prev[i]) - delta) <= 1e-13;
            if (constant) {
                double per_period = delta / lag;
                if (per_period < -1e-13) return -1;
                if (per_period > 1e-13) return +1;
                return 0;
            }
        }
        history.push_back(std::move(u));
        if (history.size() > kMaxLag + 1) history.erase(history.begin());
    }
    return 0;
}

}  // namespace detail

/// Computes the critical constant three ways. The Karp route is exact on the
/// discrete model; the subadditive route reports the bracket midpoint after
/// n_terms powers; the bisection route searches for the unique shift that
/// keeps normalized powers bounded.
inline CriticalValueReport critical_value(const PeriodKernel& kernel, const CircleGrid& grid,
                                          int n_terms, double bisection_tol) {
    const TropicalMatrix& a = kernel.matrix;
    detail::require_bracketable(a);
    if (n_terms < 2) throw config_error("critical_value: n_terms must be >= 2");
    if (bisection_tol <= 0.0) throw config_error("critical_value: bisection_tol must be positive");

    CriticalValueReport rep;
    rep.n_terms = n_terms;
    rep.bisection_tol = bisection_tol;
    rep.boundary_velocity_hits = kernel.boundary_velocity_hits;
    rep.kappa1 = kernel_lipschitz_estimate(a, grid);
    rep.alpha0_karp = -min_mean_cycle(a).lambda;

    rep.m_seq.reserve(n_terms);
    rep.M_seq.reserve(n_terms);
    TropicalMatrix power = a;
    rep.m_seq.push_back(power.min_finite_entry());
    rep.M_seq.push_back(power.max_finite_entry());
    for (int n = 2; n <= n_terms; ++n) {
        power = mp_product(power, a);
        rep.m_seq.push_back(power.min_finite_entry());
        rep.M_seq.push_back(power.max_finite_entry());
    }
    rep.alpha0_subadditive = -(rep.m_seq.back() + rep.M_seq.back()) / (2.0 * n_terms);

    // Boundedness bisection. The band threshold follows the uniform
    // oscillation bound of the normalized powers; the probe horizon is
    // extended far enough that any drift above bisection_tol must escape
    // the band before the cap, so every probe is decidable.
    const double threshold = 4.0 * rep.kappa1 * CircleGrid::diameter + 1.0;
    const long long base_cap = 8LL * a.dim();
    const long long cap = std::max(base_cap,
                                   static_cast<long long>(std::ceil(
                                       (threshold + 2.0 * rep.kappa1 * CircleGrid::diameter + 1.0) /
                                       bisection_tol)));
    double lo = -rep.M_seq.front() - bisection_tol;
    double hi = -rep.m_seq.front() + bisection_tol;
    double result = 0.5 * (lo + hi);
    while (hi - lo > bisection_tol) {
        double mid = 0.5 * (lo + hi);
        int drift = detail::bisection_drift(a, mid, threshold, cap);
        if (drift < 0) lo = mid;
        else if (drift > 0) hi = mid;
        else { result = mid; break; }  // bounded to the cap: |mid - alpha0| < tol
        result = 0.5 * (lo + hi);
    }
    rep.alpha0_bisection = result;
    return rep;
}

/// B(i,j) = A(i,j) + alpha0 on finite entries; the result has minimum cycle
/// mean zero when alpha0 is the critical constant.
inline TropicalMatrix normalize(const TropicalMatrix& a, double alpha0) {
    return a.shifted(alpha0);
}

/// A barrier matrix plus how it was obtained. `exact` is false only when the
/// power sequence never revisited itself within the horizon and the running
/// entrywise minimum was used instead (a flagged approximation of the liminf).
struct PeierlsBarrier {
    TropicalMatrix h;
    bool exact = true;
    PowerPeriodReport detection;
};

/// Entrywise minimum over one eventual period of the normalized powers.
inline PeierlsBarrier peierls_barrier(const TropicalMatrix& b, int n_max, double tol) {
    PowerPeriodReport rep = detect_power_period(b, n_max, tol);
    PeierlsBarrier out{TropicalMatrix(b.dim()), rep.found, rep};
    if (rep.found) {
        out.h = rep.cycle.front();
        for (size_t t = 1; t < rep.cycle.size(); ++t)
            for (int i = 0; i < b.dim(); ++i)
                for (int j = 0; j < b.dim(); ++j)
                    out.h(i, j) = std::min(out.h(i, j), rep.cycle[t](i, j));
    } else {
        out.h = rep.running_min;
    }
    return out;
}

/// Liminf along multiples of n: the barrier of B^n.
inline PeierlsBarrier n_peierls_barrier(const TropicalMatrix& b, int n, int n_max, double tol) {
    if (n < 1) throw config_error("n_peierls_barrier: n must be >= 1");
    return peierls_barrier(n == 1 ? b : mp_power(b, n), n_max, tol);
}

/// Nodes with vanishing self-barrier.
inline std::vector<int> aubry_set(const TropicalMatrix& h_inf, double tol) {
    std::vector<int> out;
    for (int i = 0; i < h_inf.dim(); ++i) {
        double d = h_inf(i, i);
        if (is_reachable(d) && d < -tol)
            throw numeric_error("aubry_set: negative self-barrier at node " + std::to_string(i) +
                                " (normalization off?)");
        if (is_reachable(d) && std::abs(d) <= tol) out.push_back(i);
    }
    return out;
}

/// Critical-graph stand-in for the projected minimizing set: nodes on
/// minimum-mean cycles of the period kernel, with witnessing cycle lengths.
struct MatherProxy {
    double lambda = 0.0;
    std::vector<int> nodes;
    std::map<int, int> cycle_lengths;
    long long cyclicity = 1;
};

inline MatherProxy mather_proxy(const PeriodKernel& kernel, double tol) {
    MinMeanCycle mmc = min_mean_cycle(kernel.matrix);
    CriticalGraph g = critical_graph(kernel.matrix, mmc.lambda, tol);
    return MatherProxy{mmc.lambda, g.nodes, g.cycle_lengths, g.cyclicity};
}

/// Discretization diagnostic: proxy nodes whose self-barrier fails to vanish.
inline std::vector<int> aubry_containment_violations(const MatherProxy& proxy,
                                                     const TropicalMatrix& h_inf, double tol) {
    std::vector<int> bad;
    for (int v : proxy.nodes) {
        double d = h_inf(v, v);
        if (!is_reachable(d) || std::abs(d) > tol) bad.push_back(v);
    }
    return bad;
}

/// Per-node recurrence barrier rows and their chain closure. Rows live in
/// dim x dim matrices whose non-proxy rows stay unreachable.
struct GeneralizedBarrier {
    std::vector<int> mather_nodes;
    TropicalMatrix h_under;  // row x: liminf along multiples of the cycle length of x
    TropicalMatrix k;        // chain infimum over proxy-node chains, one final free hop
    bool exact = true;
    std::map<int, PeierlsBarrier> per_length;  // cycle length -> barrier of B^length
};

/// Builds the recurrence barrier rows (one eventual-period liminf per
/// distinct cycle length) and closes them over proxy-node chains.
inline GeneralizedBarrier generalized_barrier(const TropicalMatrix& b, const MatherProxy& proxy,
                                              int n_max, double tol) {
    if (proxy.nodes.empty()) throw numeric_error("generalized_barrier: empty proxy node set");
    const int n = b.dim();
    GeneralizedBarrier out{proxy.nodes, TropicalMatrix(n), TropicalMatrix(n), true, {}};

    std::set<int> lengths;
    for (int v : proxy.nodes) lengths.insert(proxy.cycle_lengths.at(v));
    for (int len : lengths) {
        PeierlsBarrier pb = n_peierls_barrier(b, len, n_max, tol);
        out.exact = out.exact && pb.exact;
        out.per_length.emplace(len, std::move(pb));
    }
    for (int v : proxy.nodes) {
        const TropicalMatrix& h = out.per_length.at(proxy.cycle_lengths.at(v)).h;
        for (int j = 0; j < n; ++j) out.h_under(v, j) = h(v, j);
    }

    // chain closure over the proxy-node submatrix, then one final hop
    const int m = static_cast<int>(proxy.nodes.size());
    TropicalMatrix sub(m);
    for (int a = 0; a < m; ++a)
        for (int c = 0; c < m; ++c) sub(a, c) = out.h_under(proxy.nodes[a], proxy.nodes[c]);
    TropicalMatrix chains = mp_closure_with_zero_diag(sub);
    for (int a = 0; a < m; ++a) {
        const int x = proxy.nodes[a];
        for (int j = 0; j < n; ++j) {
            double best = kUnreachable;
            for (int c = 0; c < m; ++c)
                best = std::min(best, tropical_add(chains(a, c), out.h_under(proxy.nodes[c], j)));
            out.k(x, j) = best;
        }
    }
    return out;
}

/// Square matrix indexed by an explicit node subset.
struct LabeledMatrix {
    std::vector<int> nodes;
    TropicalMatrix values;

    int index_of(int node) const {
        for (size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i] == node) return static_cast<int>(i);
        throw logic_error("LabeledMatrix: node " + std::to_string(node) + " not present");
    }
};

/// Symmetrized barrier d(x,y) = k(x,y) + k(y,x) on the given nodes.
inline LabeledMatrix pseudometric(const TropicalMatrix& k, const std::vector<int>& nodes) {
    const int m = static_cast<int>(nodes.size());
    LabeledMatrix d{nodes, TropicalMatrix(m)};
    for (int a = 0; a < m; ++a)
        for (int c = 0; c < m; ++c)
            d.values(a, c) = tropical_add(k(nodes[a], nodes[c]), k(nodes[c], nodes[a]));
    return d;
}

struct StaticClasses {
    std::vector<std::vector<int>> classes;   // node ids, each class sorted
    std::vector<int> representatives;        // smallest node id per class
    std::vector<std::tuple<int, int, double>> borderline;  // pairs inside (tol, 10 tol)
};

/// Connected components of the graph {d <= class_tol}; values just above the
/// threshold are reported as tolerance-sensitive.
inline StaticClasses static_classes(const LabeledMatrix& d, double class_tol) {
    const int m = static_cast<int>(d.nodes.size());
    std::vector<int> comp(m, -1);
    int n_comp = 0;
    for (int s = 0; s < m; ++s) {
        if (comp[s] != -1) continue;
        std::vector<int> stack{s};
        comp[s] = n_comp;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < m; ++v) {
                if (comp[v] != -1) continue;
                double w = d.values(u, v);
                if (is_reachable(w) && w <= class_tol) {
                    comp[v] = n_comp;
                    stack.push_back(v);
                }
            }
        }
        ++n_comp;
    }
    StaticClasses out;
    out.classes.resize(n_comp);
    for (int a = 0; a < m; ++a) out.classes[comp[a]].push_back(d.nodes[a]);
    for (auto& cls : out.classes) {
        std::sort(cls.begin(), cls.end());
        out.representatives.push_back(cls.front());
    }
    for (int a = 0; a < m; ++a)
        for (int c = a + 1; c < m; ++c) {
            double w = d.values(a, c);
            if (is_reachable(w) && w > class_tol && w < 10.0 * class_tol)
                out.borderline.emplace_back(d.nodes[a], d.nodes[c], w);
        }
    return out;
}

/// A scalar map on a node set together with the barrier it claims to obey.
struct DominatedMap {
    std::vector<int> domain_nodes;
    std::vector<double> values;
    std::string barrier_name;

    double value_at(int node) const {
        for (size_t i = 0; i < domain_nodes.size(); ++i)
            if (domain_nodes[i] == node) return values[i];
        throw logic_error("DominatedMap: node " + std::to_string(node) + " not in domain");
    }
};

struct DominationCheck {
    bool ok = true;
    double max_violation = -kUnreachable;  // max of psi(y) - psi(x) - f(x,y)
    std::pair<int, int> witness{-1, -1};
};

/// max over pairs of psi(y) - psi(x) - f(x,y); ok iff it stays below tol.
inline DominationCheck check_domination(const DominatedMap& psi, const TropicalMatrix& f,
                                        double tol) {
    DominationCheck out;
    const auto& X = psi.domain_nodes;
    for (size_t a = 0; a < X.size(); ++a)
        for (size_t c = 0; c < X.size(); ++c) {
            double fxy = f(X[a], X[c]);
            if (!is_reachable(fxy))
                throw numeric_error("check_domination: barrier unreachable inside the domain");
            double gap = psi.values[c] - psi.values[a] - fxy;
            if (gap > out.max_violation) {
                out.max_violation = gap;
                out.witness = {X[a], X[c]};
            }
        }
    out.ok = out.max_violation <= tol;
    return out;
}

struct ExtremalSolutions {
    std::vector<double> v_plus;
    std::vector<double> v_minus;
};

/// Largest and smallest recurrent solutions vanishing at x0:
/// v_plus = k(x0, .) and v_minus = min over representatives y of
/// -k(y, x0) + k(y, .). With a single class the two envelopes coincide.
inline ExtremalSolutions extremal_solutions(const TropicalMatrix& k,
                                            const std::vector<int>& representatives, int x0) {
    const int n = k.dim();
    ExtremalSolutions out;
    out.v_plus.resize(n);
    out.v_minus.resize(n);
    for (int j = 0; j < n; ++j) {
        out.v_plus[j] = k(x0, j);
        double best = kUnreachable;
        for (int y : representatives)
            best = std::min(best, tropical_add(-k(y, x0), k(y, j)));
        out.v_minus[j] = best;
    }
    return out;
}

/// Everything the barrier stage produces for one system.
struct BarrierSet {
    double alpha0 = 0.0;
    TropicalMatrix h_inf;
    bool h_inf_exact = true;
    std::map<int, TropicalMatrix> h_n_inf;
    TropicalMatrix h_under;  // rows at proxy nodes
    TropicalMatrix k;        // rows at proxy nodes
    std::vector<int> mather_nodes;
};

struct AubryDecomposition {
    std::vector<int> aubry_nodes;
    MatherProxy mather;
    StaticClasses classes;                  // from the symmetrized generalized barrier
    std::map<int, StaticClasses> n_classes; // n -> partition of the n-vanishing proxy nodes
    std::vector<int> containment_violations;
};

struct BarrierOptions {
    int n_max_powers = 512;
    double matrix_tol = 1e-9;
    double class_tol = 0.0;          // 0: use 10 * matrix_tol * dim
    std::vector<int> barrier_n;      // extra n for the n-liminf barriers; empty: cycle lengths
};

inline double effective_class_tol(const BarrierOptions& opt, int dim) {
    return opt.class_tol > 0.0 ? opt.class_tol : 10.0 * opt.matrix_tol * dim;
}

/// Full barrier stage: normalize, liminf barriers, recurrence rows, chain
/// closure, classes. The critical constant comes from the Karp estimator.
inline std::pair<BarrierSet, AubryDecomposition> compute_barriers(const PeriodKernel& kernel,
                                                                  double alpha0,
                                                                  const BarrierOptions& opt) {
    BarrierSet bs;
    bs.alpha0 = alpha0;
    TropicalMatrix b = normalize(kernel.matrix, alpha0);

    MatherProxy proxy = mather_proxy(kernel, opt.matrix_tol);
    PeierlsBarrier hb = peierls_barrier(b, opt.n_max_powers, opt.matrix_tol);
    bs.h_inf = hb.h;
    bs.h_inf_exact = hb.exact;

    GeneralizedBarrier gb = generalized_barrier(b, proxy, opt.n_max_powers, opt.matrix_tol);
    bs.h_under = gb.h_under;
    bs.k = gb.k;
    bs.mather_nodes = proxy.nodes;
    for (auto& [len, pb] : gb.per_length) bs.h_n_inf.emplace(len, pb.h);
    for (int n : opt.barrier_n)
        if (!bs.h_n_inf.count(n))
            bs.h_n_inf.emplace(n, n_peierls_barrier(b, n, opt.n_max_powers, opt.matrix_tol).h);

    AubryDecomposition ad;
    ad.mather = proxy;
    ad.aubry_nodes = aubry_set(bs.h_inf, opt.matrix_tol);
    ad.containment_violations = aubry_containment_violations(proxy, bs.h_inf, opt.matrix_tol);

    const double class_tol = effective_class_tol(opt, kernel.matrix.dim());
    ad.classes = static_classes(pseudometric(bs.k, proxy.nodes), class_tol);
    for (auto& [n, h_n] : bs.h_n_inf) {
        std::vector<int> m_n;
        for (int v : proxy.nodes)
            if (std::abs(h_n(v, v)) <= opt.matrix_tol) m_n.push_back(v);
        if (!m_n.empty()) ad.n_classes.emplace(n, static_classes(pseudometric(h_n, m_n), class_tol));
    }
    return {std::move(bs), std::move(ad)};
}

}  // namespace wkam
