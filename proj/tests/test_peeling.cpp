#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fliphat/peeling.hpp"

using namespace fliphat;

TEST_CASE("zero-noise peel reduces to exact top-s") {
    PeelResult r = peel(DenseVector{5.0, 1.0, -3.0, 0.0}, 2, PrivacyBudget(1.0, 0.01), 0.0,
                        SeedPath(1));
    CHECK(r.vector == DenseVector{5.0, 0.0, -3.0, 0.0});
    CHECK(r.support == SparseSupport({0, 2}));
    CHECK(r.noise_magnitude == 0.0);

    PeelResult ties = peel(DenseVector{0.0, 0.0, 0.0}, 1, PrivacyBudget(1.0, 0.01), 0.0,
                           SeedPath(2));
    CHECK(ties.support == SparseSupport({0}));
    CHECK(ties.vector == DenseVector{0.0, 0.0, 0.0});
}

TEST_CASE("zero-noise peel equals exact_top_s restriction on random vectors") {
    SeedPath root(21);
    for (std::uint64_t trial = 0; trial < 1000; ++trial) {
        RandomStream rng{root.child("gen", trial)};
        std::size_t d = 1 + rng.next_u64() % 50;
        std::size_t s = 1 + rng.next_u64() % d;
        DenseVector v(d);
        for (std::size_t j = 0; j < d; ++j) v[j] = 10.0 * (rng.uniform01() - 0.5);

        PeelResult r = peel(v, s, PrivacyBudget(1.0, 0.01), 0.0, root.child("peel", trial));
        CHECK(r.vector == restrict_to_support(v, exact_top_s(v, s)));
    }
}

TEST_CASE("peel output is always s-sparse and supported on its support") {
    SeedPath root(22);
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
        RandomStream rng{root.child("gen", trial)};
        std::size_t d = 2 + rng.next_u64() % 30;
        std::size_t s = 1 + rng.next_u64() % d;
        DenseVector v(d);
        for (std::size_t j = 0; j < d; ++j) v[j] = 5.0 * (rng.uniform01() - 0.5);

        PeelResult r = peel(v, s, PrivacyBudget(2.0, 0.05), 0.4, root.child("peel", trial));
        CHECK(r.support.size() == s);
        CHECK(l0_norm(r.vector.values()) <= s);
        for (std::size_t j = 0; j < d; ++j) {
            if (!r.support.contains(j)) CHECK(r.vector[j] == 0.0);
        }
        CHECK(r.noise_magnitude > 0.0);
    }
}

TEST_CASE("dominant coordinate survives small noise") {
    // gap = 10 against xi = 0.01 * 2 * sqrt(3 ln 100) / 4 ~= 0.0186
    const PrivacyBudget budget(4.0, 0.01);
    std::size_t hits = 0;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        PeelResult r = peel(DenseVector{10.0, 0.0}, 1, budget, 0.01, SeedPath(23).child("mc", i));
        hits += r.support.contains(0);
    }
    CHECK(static_cast<double>(hits) / 2000.0 >= 0.99);
}

TEST_CASE("round-1 selection pressure at gap = 100 xi") {
    const double lambda = 0.05;
    const PrivacyBudget budget(1.0, 0.01);
    const double xi = peeling_noise_scale(lambda, 3, budget).xi;
    DenseVector v(20);
    v[7] = 100.0 * xi;

    std::size_t hits = 0;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        PeelResult r = peel(v, 3, budget, lambda, SeedPath(24).child("mc", i));
        hits += r.support.contains(7);
    }
    CHECK(static_cast<double>(hits) / 2000.0 >= 0.999);
}

TEST_CASE("peel argument validation") {
    DenseVector v{1.0, 2.0};
    CHECK_THROWS_AS(peel(v, 0, PrivacyBudget(1.0, 0.01), 0.0, SeedPath(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(peel(v, 3, PrivacyBudget(1.0, 0.01), 0.0, SeedPath(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(peel(v, 1, PrivacyBudget(1.0, 0.0), 0.5, SeedPath(1)), unsupported_budget);
    CHECK_NOTHROW(peel(v, 1, PrivacyBudget(1.0, 0.0), 0.0, SeedPath(1)));
}

TEST_CASE("peel is deterministic given its stream") {
    DenseVector v{3.0, -1.0, 0.5, 2.0, 0.0};
    SeedPath stream = SeedPath(25).child("s");
    PeelResult a = peel(v, 2, PrivacyBudget(1.0, 0.01), 0.3, stream);
    PeelResult b = peel(v, 2, PrivacyBudget(1.0, 0.01), 0.3, stream);
    CHECK(a.vector == b.vector);
    CHECK(a.support == b.support);
    CHECK(a.noise_magnitude == b.noise_magnitude);
}
