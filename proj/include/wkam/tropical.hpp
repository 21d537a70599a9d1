#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wkam/errors.hpp"

namespace wkam {

/// Unreachable sentinel of the (min,+) semiring. Absorbing under +,
/// neutral under min. Never produced by arithmetic overflow: additions
/// are guarded so that finite + finite stays finite.
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

inline bool is_reachable(double w) { return w != kUnreachable; }

/// Guarded tropical "multiplication" (ordinary +).
inline double tropical_add(double a, double b) {
    if (!is_reachable(a) || !is_reachable(b)) return kUnreachable;
    return a + b;
}

/// Dense square matrix over R u {+inf} under (min,+).
class TropicalMatrix {
public:
    TropicalMatrix() : dim_(0) {}

    explicit TropicalMatrix(int dim, double fill = kUnreachable)
        : dim_(dim), entries_(static_cast<size_t>(dim) * dim, fill) {
        if (dim < 1) throw logic_error("TropicalMatrix: dim must be positive");
        check_no_nan();
    }

    TropicalMatrix(int dim, std::vector<double> entries)
        : dim_(dim), entries_(std::move(entries)) {
        if (dim < 1 || entries_.size() != static_cast<size_t>(dim) * dim)
            throw logic_error("TropicalMatrix: entry count does not match dim");
        check_no_nan();
    }

    /// Tropical identity: 0 on the diagonal, unreachable elsewhere.
    static TropicalMatrix identity(int dim) {
        TropicalMatrix m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 0.0;
        return m;
    }

    static TropicalMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        int n = static_cast<int>(rows.size());
        TropicalMatrix m(n);
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(rows[i].size()) != n)
                throw logic_error("TropicalMatrix::from_rows: ragged rows");
            for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
        }
        m.check_no_nan();
        return m;
    }

    int dim() const { return dim_; }

    double operator()(int i, int j) const { return entries_[idx(i, j)]; }
    double& operator()(int i, int j) { return entries_[idx(i, j)]; }

    const std::vector<double>& entries() const { return entries_; }

    bool row_all_unreachable(int i) const {
        for (int j = 0; j < dim_; ++j)
            if (is_reachable((*this)(i, j))) return false;
        return true;
    }

    bool col_all_unreachable(int j) const {
        for (int i = 0; i < dim_; ++i)
            if (is_reachable((*this)(i, j))) return false;
        return true;
    }

    double min_finite_entry() const {
        double m = kUnreachable;
        for (double e : entries_)
            if (is_reachable(e)) m = std::min(m, e);
        return m;
    }

    double max_finite_entry() const {
        double m = -kUnreachable;
        bool any = false;
        for (double e : entries_)
            if (is_reachable(e)) { m = std::max(m, e); any = true; }
        return any ? m : kUnreachable;
    }

    double max_abs_finite_entry() const {
        double m = 0.0;
        for (double e : entries_)
            if (is_reachable(e)) m = std::max(m, std::abs(e));
        return m;
    }

    /// Adds a constant to every finite entry (unreachable stays unreachable).
    TropicalMatrix shifted(double c) const {
        TropicalMatrix out(*this);
        for (double& e : out.entries_)
            if (is_reachable(e)) e += c;
        return out;
    }

private:
    size_t idx(int i, int j) const { return static_cast<size_t>(i) * dim_ + j; }

    void check_no_nan() const {
        for (double e : entries_)
            if (std::isnan(e)) throw logic_error("TropicalMatrix: NaN entry");
    }

    int dim_;
    std::vector<double> entries_;
};

/// Max absolute entrywise difference; a mismatch between reachable and
/// unreachable counts as +inf.
inline double max_abs_diff(const TropicalMatrix& a, const TropicalMatrix& b) {
    if (a.dim() != b.dim()) throw logic_error("max_abs_diff: dimension mismatch");
    double d = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) {
            double x = a(i, j), y = b(i, j);
            bool fx = is_reachable(x), fy = is_reachable(y);
            if (fx != fy) return kUnreachable;
            if (fx) d = std::max(d, std::abs(x - y));
        }
    return d;
}

inline bool approx_equal(const TropicalMatrix& a, const TropicalMatrix& b, double tol) {
    return max_abs_diff(a, b) <= tol;
}

/// C(i,j) = min_k A(i,k) + B(k,j).
inline TropicalMatrix mp_product(const TropicalMatrix& a, const TropicalMatrix& b) {
    if (a.dim() != b.dim()) throw logic_error("mp_product: dimension mismatch");
    const int n = a.dim();
    TropicalMatrix c(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const double aik = a(i, k);
            if (!is_reachable(aik)) continue;
            for (int j = 0; j < n; ++j) {
                const double cand = tropical_add(aik, b(k, j));
                if (cand < c(i, j)) c(i, j) = cand;
            }
        }
    }
    return c;
}

/// Row vector times matrix: out(j) = min_i u(i) + A(i,j).
inline std::vector<double> mp_vec_product(const std::vector<double>& u, const TropicalMatrix& a) {
    if (static_cast<int>(u.size()) != a.dim())
        throw logic_error("mp_vec_product: dimension mismatch");
    const int n = a.dim();
    std::vector<double> out(n, kUnreachable);
    for (int i = 0; i < n; ++i) {
        if (!is_reachable(u[i])) continue;
        for (int j = 0; j < n; ++j) {
            const double cand = tropical_add(u[i], a(i, j));
            if (cand < out[j]) out[j] = cand;
        }
    }
    return out;
}

/// n-fold tropical power by repeated squaring.
inline TropicalMatrix mp_power(const TropicalMatrix& a, long long n) {
    if (n < 1) throw logic_error("mp_power: exponent must be >= 1");
    TropicalMatrix base = a;
    std::optional<TropicalMatrix> acc;
    while (n > 0) {
        if (n & 1) acc = acc ? mp_product(*acc, base) : base;
        n >>= 1;
        if (n > 0) base = mp_product(base, base);
    }
    return *acc;
}

namespace detail {

/// Strongly connected components of the finite-arc digraph (iterative Tarjan).
/// Returns component id per node; ids are in reverse topological order.
inline std::vector<int> strongly_connected_components(const TropicalMatrix& a, int& n_comps) {
    const int n = a.dim();
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (is_reachable(a(i, j))) adj[i].push_back(j);

    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    int next_index = 0;
    n_comps = 0;

    struct Frame { int v; size_t child; };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> call;
        call.push_back({root, 0});
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.child < adj[f.v].size()) {
                int w = adj[f.v][f.child++];
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                if (low[f.v] == index[f.v]) {
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        comp[w] = n_comps;
                        if (w == f.v) break;
                    }
                    ++n_comps;
                }
                int v = f.v;
                call.pop_back();
                if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
        }
    }
    return comp;
}

}  // namespace detail

/// True when every node reaches every other node through finite arcs.
inline bool is_strongly_connected(const TropicalMatrix& a) {
    int n_comps = 0;
    detail::strongly_connected_components(a, n_comps);
    return n_comps == 1;
}

struct MinMeanCycle {
    double lambda = kUnreachable;
    std::vector<int> cycle;  // node sequence, first node not repeated at the end
};

/// All-pairs chain infimum over paths of length 1..dim (Floyd-Warshall order).
/// Throws when some cycle has mean below -1e-9 (the infimum would be -inf).
inline TropicalMatrix mp_closure(const TropicalMatrix& a) {
    const int n = a.dim();
    TropicalMatrix d = a;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
            const double dik = d(i, k);
            if (!is_reachable(dik)) continue;
            for (int j = 0; j < n; ++j) {
                const double cand = tropical_add(dik, d(k, j));
                if (cand < d(i, j)) d(i, j) = cand;
            }
        }
    for (int i = 0; i < n; ++i)
        if (is_reachable(d(i, i)) && d(i, i) < -1e-9)
            throw numeric_error("mp_closure: negative-mean cycle (weight " +
                                std::to_string(d(i, i)) + " at node " + std::to_string(i) + ")");
    return d;
}

/// Closure admitting zero-length chains: min(closure(A), identity).
inline TropicalMatrix mp_closure_with_zero_diag(const TropicalMatrix& a) {
    TropicalMatrix d = mp_closure(a);
    for (int i = 0; i < d.dim(); ++i) d(i, i) = std::min(d(i, i), 0.0);
    return d;
}

namespace detail {

/// Floyd-Warshall with path reconstruction ("next hop" convention).
inline std::pair<TropicalMatrix, std::vector<int>> closure_with_parents(const TropicalMatrix& a) {
    const int n = a.dim();
    TropicalMatrix d = a;
    std::vector<int> next(static_cast<size_t>(n) * n, -1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (is_reachable(a(i, j))) next[static_cast<size_t>(i) * n + j] = j;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
            const double dik = d(i, k);
            if (!is_reachable(dik)) continue;
            for (int j = 0; j < n; ++j) {
                const double cand = tropical_add(dik, d(k, j));
                if (cand < d(i, j)) {
                    d(i, j) = cand;
                    next[static_cast<size_t>(i) * n + j] = next[static_cast<size_t>(i) * n + k];
                }
            }
        }
    return {d, next};
}

inline std::vector<int> reconstruct_path(const std::vector<int>& next, int n, int from, int to) {
    std::vector<int> path{from};
    int cur = from;
    while (cur != to) {
        cur = next[static_cast<size_t>(cur) * n + to];
        if (cur < 0 || static_cast<int>(path.size()) > n + 1)
            throw logic_error("reconstruct_path: broken parent chain");
        path.push_back(cur);
    }
    return path;
}

}  // namespace detail

/// Minimum cycle mean by Karp's recurrence, run per strongly connected
/// component; the witness cycle is recovered from a closure of A - lambda.
inline MinMeanCycle min_mean_cycle(const TropicalMatrix& a) {
    const int n = a.dim();
    int n_comps = 0;
    std::vector<int> comp = detail::strongly_connected_components(a, n_comps);

    double lambda = kUnreachable;
    for (int c = 0; c < n_comps; ++c) {
        std::vector<int> nodes;
        for (int v = 0; v < n; ++v)
            if (comp[v] == c) nodes.push_back(v);
        const int m = static_cast<int>(nodes.size());
        // A single node forms a cycle only through a finite self-loop.
        if (m == 1) {
            double self = a(nodes[0], nodes[0]);
            if (is_reachable(self)) lambda = std::min(lambda, self);
            continue;
        }
        std::vector<int> local(n, -1);
        for (int i = 0; i < m; ++i) local[nodes[i]] = i;

        // D[k][v] = min weight of a walk with exactly k arcs from source 0.
        std::vector<std::vector<double>> D(m + 1, std::vector<double>(m, kUnreachable));
        D[0][0] = 0.0;
        for (int k = 1; k <= m; ++k)
            for (int u = 0; u < m; ++u) {
                if (!is_reachable(D[k - 1][u])) continue;
                for (int v = 0; v < m; ++v) {
                    const double w = a(nodes[u], nodes[v]);
                    if (!is_reachable(w)) continue;
                    const double cand = D[k - 1][u] + w;
                    if (cand < D[k][v]) D[k][v] = cand;
                }
            }
        for (int v = 0; v < m; ++v) {
            if (!is_reachable(D[m][v])) continue;
            double worst = -kUnreachable;
            for (int k = 0; k < m; ++k) {
                if (!is_reachable(D[k][v])) continue;
                worst = std::max(worst, (D[m][v] - D[k][v]) / (m - k));
            }
            lambda = std::min(lambda, worst);
        }
    }
    if (!is_reachable(lambda))
        throw numeric_error("min_mean_cycle: no finite cycle exists (acyclic kernel)");

    // Witness: a tight arc (i,j) plus the shortest way back in A - lambda.
    MinMeanCycle out;
    out.lambda = lambda;
    TropicalMatrix b = a.shifted(-lambda);
    auto [dist, next] = detail::closure_with_parents(b);
    double best = kUnreachable;
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (!is_reachable(b(i, j))) continue;
            const double back = (i == j) ? 0.0 : dist(j, i);
            const double total = tropical_add(b(i, j), back);
            if (total < best) { best = total; bi = i; bj = j; }
        }
    if (bi < 0) throw logic_error("min_mean_cycle: witness extraction failed");
    if (bi == bj) {
        out.cycle = {bi};
    } else {
        out.cycle = {bi};
        std::vector<int> back = detail::reconstruct_path(next, n, bj, bi);
        for (size_t t = 0; t + 1 < back.size(); ++t) out.cycle.push_back(back[t]);
    }
    return out;
}

struct CriticalGraph {
    double lambda = 0.0;
    std::vector<int> nodes;                    // nodes on some minimum-mean cycle
    std::vector<std::pair<int, int>> arcs;     // arcs on such cycles
    std::map<int, int> cycle_lengths;          // node -> shortest critical cycle through it
    long long cyclicity = 1;                   // lcm over critical SCCs of their member cycle lengths
};

/// Arcs (i,j) such that B(i,j) plus the shortest chain back from j to i is
/// ~zero in B = A - lambda; those are exactly the arcs on minimum-mean cycles.
inline CriticalGraph critical_graph(const TropicalMatrix& a, double lambda, double tol) {
    const int n = a.dim();
    TropicalMatrix b = a.shifted(-lambda);
    TropicalMatrix back = mp_closure_with_zero_diag(b);

    CriticalGraph g;
    g.lambda = lambda;
    std::vector<std::vector<int>> adj(n);
    std::vector<bool> is_node(n, false);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (!is_reachable(b(i, j))) continue;
            const double closing = tropical_add(b(i, j), back(j, i));
            if (is_reachable(closing) && closing <= tol) {
                g.arcs.emplace_back(i, j);
                adj[i].push_back(j);
                is_node[i] = is_node[j] = true;
            }
        }
    for (int v = 0; v < n; ++v)
        if (is_node[v]) g.nodes.push_back(v);

    // Shortest critical cycle through each node via BFS on the critical arcs.
    for (int s : g.nodes) {
        std::vector<int> dist(n, -1);
        std::vector<int> queue{s};
        dist[s] = 0;
        size_t head = 0;
        int best = -1;
        while (head < queue.size()) {
            int u = queue[head++];
            for (int v : adj[u]) {
                if (v == s) {
                    int len = dist[u] + 1;
                    if (best < 0 || len < best) best = len;
                    continue;
                }
                if (dist[v] == -1) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if (best < 0) throw logic_error("critical_graph: node without a witnessing cycle");
        g.cycle_lengths[s] = best;
    }

    // Cyclicity: lcm of member cycle lengths per critical SCC, lcm over SCCs.
    if (!g.nodes.empty()) {
        TropicalMatrix crit(n);
        for (auto [i, j] : g.arcs) crit(i, j) = 0.0;
        int n_comps = 0;
        std::vector<int> comp = detail::strongly_connected_components(crit, n_comps);
        std::map<int, long long> comp_lcm;
        for (int v : g.nodes) {
            long long len = g.cycle_lengths.at(v);
            auto it = comp_lcm.find(comp[v]);
            if (it == comp_lcm.end()) comp_lcm[comp[v]] = len;
            else it->second = std::lcm(it->second, len);
        }
        long long total = 1;
        for (auto& [c, l] : comp_lcm) total = std::lcm(total, l);
        g.cyclicity = total;
    }
    return g;
}

struct PowerPeriodReport {
    bool found = false;
    int transient = 0;                  // smallest t with B^(t+p) = B^t, powers indexed from 1
    int period = 0;
    std::vector<TropicalMatrix> cycle;  // B^transient .. B^(transient+period-1)
    TropicalMatrix running_min;         // fallback liminf estimate when not found
    int n_used = 0;
};

/// Detects eventual periodicity of the powers of a mean-zero matrix by
/// storing them and comparing entrywise. The smallest (transient + period)
/// wins, ties broken by the smaller transient.
inline PowerPeriodReport detect_power_period(const TropicalMatrix& b, int n_max, double tol) {
    if (n_max < 2) throw logic_error("detect_power_period: n_max must be >= 2");
    const double max_abs = b.max_abs_finite_entry();
    const double bound = b.dim() * max_abs + 1.0;

    std::vector<TropicalMatrix> powers;
    powers.push_back(b);
    PowerPeriodReport rep;
    for (int n = 2; n <= n_max; ++n) {
        TropicalMatrix p = mp_product(powers.back(), b);
        // Mean-zero powers of a strongly connected matrix stay within
        // dim * max|B|; drifting past that signals a nonzero cycle mean.
        double lo = p.min_finite_entry();
        double hi = p.max_finite_entry();
        if ((is_reachable(lo) && lo < -(bound + 10.0 * tol * n)) ||
            (is_reachable(hi) && hi > bound + 10.0 * tol * n))
            throw numeric_error("detect_power_period: powers diverge (cycle mean not zero?)");
        for (int m = n - 1; m >= 1; --m) {
            if (approx_equal(powers[m - 1], p, tol)) {
                rep.found = true;
                rep.transient = m;
                rep.period = n - m;
                for (int t = m; t < n; ++t) rep.cycle.push_back(powers[t - 1]);
                rep.n_used = n;
                return rep;
            }
        }
        powers.push_back(std::move(p));
    }
    // Not found: report the running entrywise min over the last half window.
    rep.n_used = n_max;
    int start = std::max(0, static_cast<int>(powers.size()) - n_max / 2);
    TropicalMatrix acc = powers[start];
    for (size_t t = start + 1; t < powers.size(); ++t)
        for (int i = 0; i < acc.dim(); ++i)
            for (int j = 0; j < acc.dim(); ++j)
                acc(i, j) = std::min(acc(i, j), powers[t](i, j));
    rep.running_min = acc;
    return rep;
}

}  // namespace wkam
