#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support/brute.hpp"
#include "wkam/barriers.hpp"

using namespace wkam;
using Catch::Approx;

namespace {

PeriodKernel matrix_kernel(const TropicalMatrix& a) {
    PeriodKernel pk;
    pk.matrix = a;
    pk.substeps = {SubstepKernel{a, 0}};
    return pk;
}

const TropicalMatrix kGolden = TropicalMatrix::from_rows({{4, 1}, {2, 3}});

struct System {
    PeriodKernel kernel;
    CriticalValueReport cv;
    BarrierSet barriers;
    AubryDecomposition aubry;
};

System make_system(const std::string& scenario, int n_x, int n_sub, int n_terms = 64) {
    System s;
    CircleGrid grid(n_x);
    s.kernel = build_period_kernel(scenario_by_name(scenario), grid, TimeGrid(n_sub));
    s.cv = critical_value(s.kernel, grid, n_terms, 1e-4);
    auto [bs, ad] = compute_barriers(s.kernel, s.cv.alpha0_karp, BarrierOptions{});
    s.barriers = std::move(bs);
    s.aubry = std::move(ad);
    return s;
}

const System& pendulum64() {
    static System s = make_system("pendulum", 64, 8);
    return s;
}

const System& doublewell64() {
    static System s = make_system("double-well", 64, 8);
    return s;
}

const System& free64() {
    static System s = make_system("free", 64, 8);
    return s;
}

}  // namespace

TEST_CASE("critical_value golden kernel", "[barriers]") {
    CriticalValueReport rep = critical_value(matrix_kernel(kGolden), CircleGrid(2), 400, 1e-4);
    CHECK(rep.alpha0_karp == -1.5);
    CHECK(std::abs(rep.alpha0_bisection - rep.alpha0_karp) <= rep.bisection_tol);
    CHECK(std::abs(rep.alpha0_subadditive - rep.alpha0_karp) <=
          4.0 * rep.kappa1 * CircleGrid::diameter / rep.n_terms);
    // subadditive bracket: m_n <= -alpha0 n <= M_n for every recorded n
    for (size_t n = 1; n <= rep.m_seq.size(); ++n) {
        CHECK(rep.m_seq[n - 1] <= -rep.alpha0_karp * n + 1e-9);
        CHECK(rep.M_seq[n - 1] >= -rep.alpha0_karp * n - 1e-9);
        CHECK(rep.M_seq[n - 1] - rep.m_seq[n - 1] <=
              2.0 * rep.kappa1 * CircleGrid::diameter + 1e-9);
    }
}

TEST_CASE("critical_value trivial and error cases", "[barriers]") {
    CriticalValueReport id = critical_value(matrix_kernel(TropicalMatrix::identity(3)),
                                            CircleGrid(3), 16, 1e-6);
    CHECK(id.alpha0_karp == 0.0);
    CHECK(id.alpha0_subadditive == 0.0);
    CHECK(std::abs(id.alpha0_bisection) <= 1e-6);

    // components with different cycle means cannot share one critical constant
    TropicalMatrix disconnected(2);
    disconnected(0, 0) = 1.0;
    disconnected(1, 1) = 2.0;
    CHECK_THROWS_AS(critical_value(matrix_kernel(disconnected), CircleGrid(2), 16, 1e-6), Error);
}

TEST_CASE("critical_value of the free particle vanishes", "[barriers]") {
    CHECK(std::abs(free64().cv.alpha0_karp) <= 1e-3);
    // at the default truncation the antipodal one-substep hop sits exactly
    // on the velocity cap, and the counter reports it
    CHECK(free64().cv.boundary_velocity_hits == 512);
}

TEST_CASE("normalize shifts finite entries", "[barriers]") {
    TropicalMatrix b = normalize(kGolden, -1.5);
    CHECK(approx_equal(b, TropicalMatrix::from_rows({{2.5, -0.5}, {0.5, 1.5}}), 1e-15));
    CHECK(std::abs(min_mean_cycle(b).lambda) <= 1e-9);
    CHECK(approx_equal(normalize(kGolden, 0.0), kGolden, 0.0));
    CHECK(approx_equal(normalize(TropicalMatrix::identity(4), 0.0), TropicalMatrix::identity(4), 0.0));
}

TEST_CASE("peierls_barrier golden and identity", "[barriers]") {
    TropicalMatrix b = normalize(kGolden, -1.5);
    PeierlsBarrier pb = peierls_barrier(b, 64, 1e-12);
    REQUIRE(pb.exact);
    CHECK(approx_equal(pb.h, TropicalMatrix::from_rows({{0, -0.5}, {0.5, 0}}), 1e-12));
    // weak-KAM fixed point in matrix form: h ox B = h
    CHECK(max_abs_diff(mp_product(pb.h, b), pb.h) <= 1e-12);

    PeierlsBarrier id = peierls_barrier(TropicalMatrix::identity(3), 16, 1e-12);
    CHECK(approx_equal(id.h, TropicalMatrix::identity(3), 0.0));
}

TEST_CASE("n_peierls_barrier golden", "[barriers]") {
    TropicalMatrix b = normalize(kGolden, -1.5);
    PeierlsBarrier two = n_peierls_barrier(b, 2, 64, 1e-12);
    REQUIRE(two.exact);
    CHECK(approx_equal(two.h, TropicalMatrix::from_rows({{0, 1}, {2, 0}}), 1e-12));

    PeierlsBarrier one = n_peierls_barrier(b, 1, 64, 1e-12);
    CHECK(approx_equal(one.h, peierls_barrier(b, 64, 1e-12).h, 0.0));

    PeierlsBarrier id = n_peierls_barrier(TropicalMatrix::identity(3), 5, 16, 1e-12);
    CHECK(approx_equal(id.h, TropicalMatrix::identity(3), 0.0));

    // liminf along a subsequence dominates the full liminf
    PeierlsBarrier full = peierls_barrier(b, 64, 1e-12);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(two.h(i, j) >= full.h(i, j) - 1e-12);
}

TEST_CASE("aubry_set and mather_proxy on the golden kernel", "[barriers]") {
    TropicalMatrix h = peierls_barrier(normalize(kGolden, -1.5), 64, 1e-12).h;
    CHECK(aubry_set(h, 1e-9) == std::vector<int>{0, 1});

    MatherProxy proxy = mather_proxy(matrix_kernel(kGolden), 1e-9);
    CHECK(proxy.nodes == std::vector<int>{0, 1});
    CHECK(proxy.cycle_lengths.at(0) == 2);
    CHECK(proxy.cycle_lengths.at(1) == 2);
    CHECK(aubry_containment_violations(proxy, h, 1e-9).empty());

    TropicalMatrix negative_diag = TropicalMatrix::identity(2).shifted(-1.0);
    CHECK_THROWS_AS(aubry_set(negative_diag, 1e-9), Error);
}

TEST_CASE("mather_proxy trivial cases", "[barriers]") {
    MatherProxy id = mather_proxy(matrix_kernel(TropicalMatrix::identity(4)), 1e-9);
    CHECK(id.nodes == std::vector<int>{0, 1, 2, 3});
    for (int v = 0; v < 4; ++v) CHECK(id.cycle_lengths.at(v) == 1);
    CHECK(id.cyclicity == 1);
}

TEST_CASE("pendulum structure: equilibrium node carries everything", "[barriers]") {
    const System& s = pendulum64();
    CHECK(s.cv.alpha0_karp == Approx(1.0).margin(1e-9));  // max of the potential
    CHECK(s.aubry.mather.nodes == std::vector<int>{0});
    CHECK(s.aubry.mather.cycle_lengths.at(0) == 1);
    CHECK(s.aubry.mather.cyclicity == 1);

    REQUIRE(s.barriers.h_inf_exact);
    // the aubry set contains the equilibrium node
    auto aubry = s.aubry.aubry_nodes;
    CHECK(std::find(aubry.begin(), aubry.end(), 0) != aubry.end());
    CHECK(s.aubry.containment_violations.empty());
    CHECK(s.aubry.classes.classes.size() == 1);
    CHECK(s.aubry.classes.representatives == std::vector<int>{0});
}

TEST_CASE("double-well structure: two wells, two classes", "[barriers]") {
    const System& s = doublewell64();
    CHECK(s.cv.alpha0_karp == Approx(1.0).margin(1e-9));
    CHECK(s.aubry.mather.nodes == std::vector<int>{0, 32});
    CHECK(s.aubry.classes.classes.size() == 2);
    CHECK(s.aubry.classes.representatives == std::vector<int>{0, 32});
    // the wells are separated by a genuinely positive barrier both ways
    CHECK(s.barriers.k(0, 32) > 0.1);
    CHECK(s.barriers.k(32, 0) > 0.1);
}

TEST_CASE("free particle: every node is minimizing, classes are lattice-split singletons",
          "[barriers]") {
    const System& s = free64();
    CHECK(static_cast<int>(s.aubry.mather.nodes.size()) == 64);
    CHECK(static_cast<int>(s.aubry.aubry_nodes.size()) == 64);
    // one-cell hop cost sets a positive floor under the pseudometric, so the
    // exact discrete classes are singletons at the default tolerance
    const double hop = 8.0 / (2.0 * 64.0 * 64.0);
    LabeledMatrix d = pseudometric(s.barriers.k, s.aubry.mather.nodes);
    CHECK(d.values(0, 1) == Approx(2.0 * hop).margin(1e-12));
    CHECK(s.aubry.classes.classes.size() == 64);
    // a tolerance above the lattice floor merges the circle into one class
    StaticClasses merged = static_classes(d, 8.0 / 64.0);
    CHECK(merged.classes.size() == 1);
}

TEST_CASE("generalized_barrier golden", "[barriers]") {
    TropicalMatrix b = normalize(kGolden, -1.5);
    MatherProxy proxy = mather_proxy(matrix_kernel(kGolden), 1e-9);
    GeneralizedBarrier gb = generalized_barrier(b, proxy, 64, 1e-12);
    REQUIRE(gb.exact);
    CHECK(gb.k(0, 0) == Approx(0.0).margin(1e-12));
    CHECK(gb.k(0, 1) == Approx(1.0).margin(1e-12));
    CHECK(gb.k(1, 0) == Approx(2.0).margin(1e-12));
    CHECK(gb.k(1, 1) == Approx(0.0).margin(1e-12));

    TropicalMatrix h_inf = peierls_barrier(b, 64, 1e-12).h;
    for (int x : proxy.nodes)
        for (int j = 0; j < 2; ++j) {
            CHECK(h_inf(x, j) <= gb.k(x, j) + 1e-12);       // sandwich, lower
            CHECK(gb.k(x, j) <= gb.h_under(x, j) + 1e-12);  // sandwich, upper
        }
}

TEST_CASE("generalized_barrier with a single proxy node", "[barriers]") {
    // one minimizing self-loop: the chain infimum collapses to a single row
    TropicalMatrix a = TropicalMatrix::from_rows({{0.0, 1.0}, {1.0, 0.5}});
    MatherProxy proxy = mather_proxy(matrix_kernel(a), 1e-9);
    REQUIRE(proxy.nodes == std::vector<int>{0});
    GeneralizedBarrier gb = generalized_barrier(a, proxy, 64, 1e-12);
    TropicalMatrix h_inf = peierls_barrier(a, 64, 1e-12).h;
    for (int j = 0; j < 2; ++j) CHECK(gb.k(0, j) == Approx(h_inf(0, j)).margin(1e-12));
}

TEST_CASE("pseudometric golden values and axioms", "[barriers]") {
    TropicalMatrix b = normalize(kGolden, -1.5);
    MatherProxy proxy = mather_proxy(matrix_kernel(kGolden), 1e-9);
    GeneralizedBarrier gb = generalized_barrier(b, proxy, 64, 1e-12);
    LabeledMatrix d = pseudometric(gb.k, proxy.nodes);
    CHECK(d.values(0, 1) == Approx(3.0).margin(1e-12));
    CHECK(d.values(1, 0) == Approx(3.0).margin(1e-12));
    CHECK(std::abs(d.values(0, 0)) <= 1e-12);
    CHECK(std::abs(d.values(1, 1)) <= 1e-12);

    // d_2 from the 2-liminf barrier
    TropicalMatrix h2 = n_peierls_barrier(b, 2, 64, 1e-12).h;
    LabeledMatrix d2 = pseudometric(h2, {0, 1});
    CHECK(d2.values(0, 1) == Approx(3.0).margin(1e-12));
}

TEST_CASE("static_classes golden and warning band", "[barriers]") {
    TropicalMatrix b = normalize(kGolden, -1.5);
    MatherProxy proxy = mather_proxy(matrix_kernel(kGolden), 1e-9);
    LabeledMatrix d = pseudometric(generalized_barrier(b, proxy, 64, 1e-12).k, proxy.nodes);

    StaticClasses sc = static_classes(d, 1e-6);
    CHECK(sc.classes.size() == 2);
    CHECK(sc.representatives == std::vector<int>{0, 1});
    CHECK(sc.borderline.empty());

    // threshold just below the value 3 lands in the sensitivity band
    StaticClasses sensitive = static_classes(d, 0.5);
    CHECK(sensitive.classes.size() == 2);
    REQUIRE(sensitive.borderline.size() == 1);
    CHECK(std::get<2>(sensitive.borderline[0]) == Approx(3.0));

    StaticClasses merged = static_classes(d, 3.5);
    CHECK(merged.classes.size() == 1);
}

TEST_CASE("check_domination golden examples", "[barriers]") {
    TropicalMatrix k = TropicalMatrix::from_rows({{0, 1}, {2, 0}});

    DominationCheck zero = check_domination(DominatedMap{{0, 1}, {0.0, 0.0}, "k"}, k, 1e-12);
    CHECK(zero.ok);

    DominationCheck boundary = check_domination(DominatedMap{{0, 1}, {0.0, 1.0}, "k"}, k, 1e-12);
    CHECK(boundary.ok);
    CHECK(boundary.max_violation == Approx(0.0).margin(1e-12));

    DominationCheck broken = check_domination(DominatedMap{{0, 1}, {0.0, 1.5}, "k"}, k, 1e-12);
    CHECK_FALSE(broken.ok);
    CHECK(broken.max_violation == Approx(0.5));
    CHECK(broken.witness == std::pair<int, int>{0, 1});
}

TEST_CASE("extremal_solutions golden", "[barriers]") {
    TropicalMatrix k = TropicalMatrix::from_rows({{0, 1}, {2, 0}});
    ExtremalSolutions ext = extremal_solutions(k, {0, 1}, 0);
    CHECK(ext.v_plus == std::vector<double>{0.0, 1.0});
    CHECK(ext.v_minus == std::vector<double>{0.0, -2.0});

    // single-class system: both envelopes coincide
    ExtremalSolutions single = extremal_solutions(k, {0}, 0);
    CHECK(single.v_plus == single.v_minus);
}

TEST_CASE("barrier structure invariants on the pendulum", "[barriers][property]") {
    const System& s = pendulum64();
    const TropicalMatrix& h = s.barriers.h_inf;
    TropicalMatrix b = normalize(s.kernel.matrix, s.barriers.alpha0);

    // weak-KAM fixed point of every row
    CHECK(max_abs_diff(mp_product(h, b), h) <= 1e-9);
    // diag nonnegative, zero on the proxy
    for (int i = 0; i < h.dim(); ++i) CHECK(h(i, i) >= -1e-9);
    for (int v : s.aubry.mather.nodes) CHECK(std::abs(h(v, v)) <= 1e-9);
    // triangle inequality
    for (int i = 0; i < h.dim(); ++i)
        for (int k = 0; k < h.dim(); ++k)
            for (int j = 0; j < h.dim(); ++j)
                CHECK(h(i, j) <= tropical_add(h(i, k), h(k, j)) + 1e-9);
    // sandwich and diagonal of the chain barrier
    for (int x : s.barriers.mather_nodes) {
        CHECK(std::abs(s.barriers.k(x, x)) <= 1e-9);
        for (int j = 0; j < h.dim(); ++j) {
            CHECK(h(x, j) <= s.barriers.k(x, j) + 1e-9);
            CHECK(s.barriers.k(x, j) <= s.barriers.h_under(x, j) + 1e-9);
        }
    }
}

TEST_CASE("recurrence-sequence choice does not move the chain barrier",
          "[barriers][property]") {
    // doubling every recurrence length leaves the closed barrier unchanged
    std::mt19937_64 rng(62);
    for (int trial = 0; trial < 8; ++trial) {
        TropicalMatrix a = brute::random_strongly_connected(rng, 8, 0.0, 4.0, 0.45);
        double lambda = min_mean_cycle(a).lambda;
        TropicalMatrix b = a.shifted(-lambda);
        MatherProxy proxy = mather_proxy(matrix_kernel(a), 1e-9);

        GeneralizedBarrier gb = generalized_barrier(b, proxy, 256, 1e-9);
        MatherProxy doubled = proxy;
        for (auto& [node, len] : doubled.cycle_lengths) len *= 2;
        GeneralizedBarrier gb2 = generalized_barrier(b, doubled, 256, 1e-9);
        if (!gb.exact || !gb2.exact) continue;
        for (int x : proxy.nodes)
            for (int j = 0; j < a.dim(); ++j)
                CHECK(gb.k(x, j) == Approx(gb2.k(x, j)).margin(1e-9));
    }
}
