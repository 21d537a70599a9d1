#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "support/brute.hpp"
#include "wkam/tropical.hpp"

using namespace wkam;

namespace {

const TropicalMatrix kGolden = TropicalMatrix::from_rows({{4, 1}, {2, 3}});
const TropicalMatrix kGoldenNormalized = TropicalMatrix::from_rows({{2.5, -0.5}, {0.5, 1.5}});

}  // namespace

TEST_CASE("mp_product identity and absorbing rows", "[tropical]") {
    TropicalMatrix b = TropicalMatrix::from_rows({{0.5, kUnreachable}, {-1.0, 2.0}});
    CHECK(approx_equal(mp_product(TropicalMatrix::identity(2), b), b, 0.0));
    CHECK(approx_equal(mp_product(b, TropicalMatrix::identity(2)), b, 0.0));

    TropicalMatrix with_dead_row = TropicalMatrix::from_rows({{kUnreachable, kUnreachable}, {1.0, 0.0}});
    TropicalMatrix prod = mp_product(with_dead_row, b);
    CHECK(with_dead_row.row_all_unreachable(0));
    CHECK(prod.row_all_unreachable(0));
}

TEST_CASE("mp_product against hand-enumerated sums", "[tropical]") {
    TropicalMatrix a = TropicalMatrix::from_rows({{0, 3}, {1, 0}});
    TropicalMatrix sq = mp_product(a, a);
    CHECK(approx_equal(sq, a, 1e-15));  // idempotent example

    TropicalMatrix s = TropicalMatrix::from_rows({{0, 1}, {2, 0}});
    TropicalMatrix ss = mp_product(s, s);
    CHECK(approx_equal(ss, brute::power_by_walks(s, 2), 1e-15));
    CHECK(ss(0, 0) == 0.0);
    CHECK(ss(0, 1) == 1.0);
    CHECK(ss(1, 0) == 2.0);
    CHECK(ss(1, 1) == 0.0);
}

TEST_CASE("mp_power examples and squaring/iteration agreement", "[tropical]") {
    CHECK(approx_equal(mp_power(kGolden, 1), kGolden, 0.0));

    TropicalMatrix sq = mp_power(kGolden, 2);
    CHECK(sq(0, 0) == 3.0);
    CHECK(sq(0, 1) == 4.0);
    CHECK(sq(1, 0) == 5.0);
    CHECK(sq(1, 1) == 3.0);

    CHECK(approx_equal(mp_power(TropicalMatrix::identity(3), 7), TropicalMatrix::identity(3), 0.0));

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        TropicalMatrix a = brute::random_strongly_connected(rng, 6, -1.0, 3.0, 0.4);
        TropicalMatrix iter = a;
        for (int n = 2; n <= 9; ++n) {
            iter = mp_product(iter, a);
            CHECK(max_abs_diff(iter, mp_power(a, n)) <= 1e-12);
        }
    }
}

TEST_CASE("associativity on random matrices", "[tropical][property]") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        TropicalMatrix a = brute::random_strongly_connected(rng, 8, -2.0, 5.0, 0.3);
        TropicalMatrix b = brute::random_strongly_connected(rng, 8, -2.0, 5.0, 0.3);
        TropicalMatrix c = brute::random_strongly_connected(rng, 8, -2.0, 5.0, 0.3);
        CHECK(max_abs_diff(mp_product(mp_product(a, b), c), mp_product(a, mp_product(b, c))) <=
              1e-12);
    }
}

TEST_CASE("mp_closure examples, idempotence, and negative cycle", "[tropical]") {
    TropicalMatrix a = TropicalMatrix::from_rows({{0, 1}, {2, 0}});
    CHECK(approx_equal(mp_closure(a), a, 1e-15));

    TropicalMatrix b = TropicalMatrix::from_rows({{0, 5}, {1, 0}});
    TropicalMatrix cb = mp_closure(b);
    CHECK(cb(0, 1) == 5.0);
    CHECK(cb(1, 0) == 1.0);
    CHECK(cb(0, 0) == 0.0);
    CHECK(cb(1, 1) == 0.0);

    TropicalMatrix neg = TropicalMatrix::from_rows({{-1.0, kUnreachable}, {kUnreachable, 0.0}});
    CHECK_THROWS_AS(mp_closure(neg), Error);
}

TEST_CASE("closure equals walk-enumeration oracle and is below A", "[tropical][property]") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        TropicalMatrix a = brute::random_strongly_connected(rng, 4, 0.1, 4.0, 0.5);
        TropicalMatrix c = mp_closure(a);
        CHECK(max_abs_diff(c, brute::closure_by_walks(a)) <= 1e-12);
        CHECK(max_abs_diff(mp_closure(c), c) <= 1e-12);  // idempotent
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) CHECK(c(i, j) <= a(i, j) + 1e-12);
    }
}

TEST_CASE("min_mean_cycle golden example", "[tropical]") {
    MinMeanCycle mmc = min_mean_cycle(kGolden);
    CHECK(mmc.lambda == 1.5);
    // witness 0 -> 1 -> 0
    REQUIRE(mmc.cycle.size() == 2);
    double w = 0.0;
    for (size_t t = 0; t < mmc.cycle.size(); ++t)
        w += kGolden(mmc.cycle[t], mmc.cycle[(t + 1) % mmc.cycle.size()]);
    CHECK(std::abs(w / mmc.cycle.size() - 1.5) <= 1e-9);
}

TEST_CASE("min_mean_cycle trivial cases", "[tropical]") {
    CHECK(min_mean_cycle(TropicalMatrix::identity(5)).lambda == 0.0);

    TropicalMatrix single(5);
    single(3, 3) = -2.0;
    single(0, 1) = 1.0;
    single(1, 2) = 0.5;
    MinMeanCycle mmc = min_mean_cycle(single);
    CHECK(mmc.lambda == -2.0);
    REQUIRE(mmc.cycle == std::vector<int>{3});

    TropicalMatrix acyclic(3);
    acyclic(0, 1) = 1.0;
    acyclic(1, 2) = 1.0;
    CHECK_THROWS_AS(min_mean_cycle(acyclic), Error);
}

TEST_CASE("min_mean_cycle matches cycle enumeration on random matrices", "[tropical][property]") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 30; ++trial) {
        TropicalMatrix a = brute::random_strongly_connected(rng, 6, -3.0, 6.0, 0.35);
        MinMeanCycle mmc = min_mean_cycle(a);
        CHECK(std::abs(mmc.lambda - brute::min_cycle_mean_by_enumeration(a)) <= 1e-9);
        double w = 0.0;
        for (size_t t = 0; t < mmc.cycle.size(); ++t)
            w += a(mmc.cycle[t], mmc.cycle[(t + 1) % mmc.cycle.size()]);
        CHECK(std::abs(w / mmc.cycle.size() - mmc.lambda) <= 1e-9);
    }
}

TEST_CASE("critical_graph golden example", "[tropical]") {
    CriticalGraph g = critical_graph(kGolden, 1.5, 1e-9);
    CHECK(g.nodes == std::vector<int>{0, 1});
    REQUIRE(g.arcs.size() == 2);
    CHECK(g.cycle_lengths.at(0) == 2);
    CHECK(g.cycle_lengths.at(1) == 2);
    CHECK(g.cyclicity == 2);
}

TEST_CASE("critical_graph trivial cases", "[tropical]") {
    CriticalGraph id = critical_graph(TropicalMatrix::identity(4), 0.0, 1e-9);
    CHECK(id.nodes == std::vector<int>{0, 1, 2, 3});
    CHECK(id.cyclicity == 1);
    for (int v = 0; v < 4; ++v) CHECK(id.cycle_lengths.at(v) == 1);

    TropicalMatrix single(5);
    single(3, 3) = -2.0;
    single(0, 1) = 1.0;
    single(1, 2) = 0.5;
    CriticalGraph g = critical_graph(single, -2.0, 1e-9);
    CHECK(g.nodes == std::vector<int>{3});
    CHECK(g.cyclicity == 1);
}

TEST_CASE("critical_graph matches cycle enumeration", "[tropical][property]") {
    std::mt19937_64 rng(400);
    for (int trial = 0; trial < 20; ++trial) {
        TropicalMatrix a = brute::random_strongly_connected(rng, 6, 0.0, 4.0, 0.4);
        MinMeanCycle mmc = min_mean_cycle(a);
        CriticalGraph g = critical_graph(a, mmc.lambda, 1e-9);
        brute::CriticalOracle oracle = brute::critical_by_enumeration(a, mmc.lambda, 1e-9);
        CHECK(g.nodes == oracle.nodes);
        CHECK(g.arcs == oracle.arcs);
        // every critical node carries in- and out-arcs
        for (int v : g.nodes) {
            bool has_in = false, has_out = false;
            for (auto [i, j] : g.arcs) {
                if (j == v) has_in = true;
                if (i == v) has_out = true;
            }
            CHECK(has_in);
            CHECK(has_out);
        }
    }
}

TEST_CASE("detect_power_period golden example", "[tropical]") {
    PowerPeriodReport rep = detect_power_period(kGoldenNormalized, 64, 1e-12);
    REQUIRE(rep.found);
    CHECK(rep.transient == 2);
    CHECK(rep.period == 2);
    REQUIRE(rep.cycle.size() == 2);
    CHECK(approx_equal(rep.cycle[0], TropicalMatrix::from_rows({{0, 1}, {2, 0}}), 1e-12));
    CHECK(approx_equal(rep.cycle[1], TropicalMatrix::from_rows({{1.5, -0.5}, {0.5, 1.5}}), 1e-12));
}

TEST_CASE("detect_power_period identity and divergence", "[tropical]") {
    PowerPeriodReport rep = detect_power_period(TropicalMatrix::identity(3), 16, 1e-12);
    REQUIRE(rep.found);
    CHECK(rep.transient == 1);
    CHECK(rep.period == 1);

    TropicalMatrix drift = kGoldenNormalized.shifted(0.1);
    CHECK_THROWS_AS(detect_power_period(drift, 500, 1e-9), Error);
}

TEST_CASE("power growth rate approaches the minimum cycle mean", "[tropical][property]") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 5; ++trial) {
        TropicalMatrix a = brute::random_strongly_connected(rng, 8, 0.0, 1.0, 0.4);
        double lambda = min_mean_cycle(a).lambda;
        TropicalMatrix p = mp_power(a, 200);
        CHECK(std::abs(p.max_finite_entry() / 200.0 - lambda) <= 0.05);
        CHECK(std::abs(p.min_finite_entry() / 200.0 - lambda) <= 0.05);
    }
}

TEST_CASE("period always found for strongly connected matrices; divides cyclicity",
          "[tropical][property]") {
    std::mt19937_64 rng(500);
    for (int trial = 0; trial < 50; ++trial) {
        TropicalMatrix a = brute::random_strongly_connected(rng, 6, 0.0, 6.0, 0.35, true);
        double lambda = min_mean_cycle(a).lambda;
        TropicalMatrix b = a.shifted(-lambda);
        PowerPeriodReport rep = detect_power_period(b, 400, 1e-9);
        REQUIRE(rep.found);

        CriticalGraph g = critical_graph(a, lambda, 1e-9);
        CHECK(g.cyclicity % rep.period == 0);

        // brute-force cross-check of the detected pair on exact integer powers
        // (entries of b are multiples of 1/len(critical cycle); scale to int)
        TropicalMatrix direct = b;
        std::vector<TropicalMatrix> powers{b};
        for (int n = 2; n <= rep.transient + rep.period; ++n) {
            direct = mp_product(direct, b);
            powers.push_back(direct);
        }
        CHECK(max_abs_diff(powers[rep.transient + rep.period - 1], powers[rep.transient - 1]) <=
              1e-9);
    }
}

TEST_CASE("NaN entries are rejected", "[tropical]") {
    std::vector<double> bad{0.0, std::nan(""), 1.0, 0.0};
    CHECK_THROWS_AS(TropicalMatrix(2, bad), Error);
}
