#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fliphat/bandit.hpp"

using namespace fliphat;

namespace {

BanditInstance toy_instance() {
    BanditInstance inst;
    inst.num_arms = 2;
    inst.dim = 4;
    inst.s_star = 1;
    inst.beta_star = DenseVector{1.0, 0.0, 0.0, 0.0};
    inst.x_max = 10.0;
    inst.b_max = 1.0;
    inst.ar_phi = 0.3;
    inst.noise_sigma = 0.0;
    return inst;
}

}  // namespace

TEST_CASE("make_beta_star construction") {
    DenseVector full = make_beta_star(4, 4, 1.0, SeedPath(41));
    CHECK(l0_norm(full.values()) == 4);
    for (double x : full) CHECK(std::abs(x) == 1.0);

    DenseVector sparse = make_beta_star(100, 10, 0.5, SeedPath(42));
    CHECK(l0_norm(sparse.values()) == 10);
    CHECK(l1_norm(sparse.values()) == Catch::Approx(5.0).epsilon(1e-14));

    CHECK_THROWS_AS(make_beta_star(10, 0, 1.0, SeedPath(43)), std::invalid_argument);
    CHECK_THROWS_AS(make_beta_star(10, 11, 1.0, SeedPath(43)), std::invalid_argument);
}

TEST_CASE("make_beta_star support positions vary with the stream") {
    DenseVector a = make_beta_star(50, 3, 1.0, SeedPath(44).child("a"));
    DenseVector b = make_beta_star(50, 3, 1.0, SeedPath(44).child("b"));
    CHECK(!(a == b));
    CHECK(a == make_beta_star(50, 3, 1.0, SeedPath(44).child("a")));
}

TEST_CASE("slate lag-1 autocorrelation tracks the AR parameter") {
    auto pooled_lag1 = [](double phi) {
        BanditInstance inst;
        inst.num_arms = 1;
        inst.dim = 200;
        inst.s_star = 1;
        inst.beta_star = DenseVector(200);
        inst.ar_phi = phi;
        inst.x_max = 10.0;

        double num = 0.0, den = 0.0;
        std::size_t pairs = 0;
        SeedPath root(45);
        for (std::uint64_t t = 0; t < 550; ++t) {
            ContextSlate slate = sample_slate(inst, root.child("slate", t));
            const DenseVector& x = slate.contexts[0];
            for (std::size_t j = 0; j + 1 < x.size(); ++j) {
                num += x[j] * x[j + 1];
                den += x[j] * x[j];
                ++pairs;
            }
        }
        REQUIRE(pairs >= 100000);
        return num / den;
    };

    CHECK(std::abs(pooled_lag1(0.0)) <= 0.01);
    CHECK(std::abs(pooled_lag1(0.3) - 0.3) <= 0.02);
}

TEST_CASE("slate marginal variance is 1 and contexts respect the bound") {
    BanditInstance inst;
    inst.num_arms = 2;
    inst.dim = 50;
    inst.s_star = 1;
    inst.beta_star = DenseVector(50);
    inst.ar_phi = 0.3;
    inst.x_max = 10.0;

    double ss = 0.0;
    std::size_t count = 0;
    double max_abs = 0.0;
    SeedPath root(46);
    for (std::uint64_t t = 0; t < 1200; ++t) {
        ContextSlate slate = sample_slate(inst, root.child("slate", t));
        for (const DenseVector& x : slate.contexts) {
            for (double c : x) {
                ss += c * c;
                max_abs = std::max(max_abs, std::abs(c));
                ++count;
            }
        }
    }
    REQUIRE(count >= 100000);
    CHECK(ss / static_cast<double>(count) == Catch::Approx(1.0).epsilon(0.03));
    CHECK(max_abs <= inst.x_max);
}

TEST_CASE("tight clamp is honored") {
    BanditInstance inst;
    inst.num_arms = 3;
    inst.dim = 30;
    inst.s_star = 1;
    inst.beta_star = DenseVector(30);
    inst.ar_phi = -0.5;
    inst.x_max = 0.7;
    SeedPath root(47);
    for (std::uint64_t t = 0; t < 200; ++t) {
        ContextSlate slate = sample_slate(inst, root.child("slate", t));
        for (const DenseVector& x : slate.contexts) {
            CHECK(linf_norm(x.values()) <= inst.x_max);
        }
    }
}

TEST_CASE("pull scores rewards and regret from inner products") {
    BanditInstance inst = toy_instance();
    ContextSlate slate;
    slate.contexts.push_back(DenseVector{2.0, 0.0, 0.0, 0.0});
    slate.contexts.push_back(DenseVector{1.0, 0.0, 0.0, 0.0});

    StepOutcome suboptimal = pull(inst, slate, 1, SeedPath(48));
    CHECK(suboptimal.reward == 1.0);
    CHECK(suboptimal.instant_regret == 1.0);

    StepOutcome optimal = pull(inst, slate, 0, SeedPath(48));
    CHECK(optimal.instant_regret == 0.0);

    CHECK_THROWS_AS(pull(inst, slate, 2, SeedPath(48)), std::invalid_argument);
}

TEST_CASE("null parameter gives zero regret and pure-noise rewards") {
    BanditInstance inst = toy_instance();
    inst.beta_star = DenseVector(4);
    SeedPath root(49);
    for (std::uint64_t t = 0; t < 50; ++t) {
        ContextSlate slate = sample_slate(inst, root.child("slate", t));
        StepOutcome out = pull(inst, slate, t % 2, root.child("reward", t));
        CHECK(out.reward == 0.0);  // noise_sigma = 0
        CHECK(out.instant_regret == 0.0);
    }
}

TEST_CASE("instant regret is nonnegative for every pull") {
    BanditInstance inst = toy_instance();
    inst.beta_star = make_beta_star(4, 2, 0.8, SeedPath(50));
    inst.noise_sigma = 0.5;
    SeedPath root(51);
    for (std::uint64_t t = 0; t < 300; ++t) {
        ContextSlate slate = sample_slate(inst, root.child("slate", t));
        StepOutcome out = pull(inst, slate, t % inst.num_arms, root.child("reward", t));
        CHECK(out.instant_regret >= 0.0);
    }
}

TEST_CASE("environment is deterministic given streams") {
    BanditInstance inst = toy_instance();
    inst.noise_sigma = 0.3;
    SeedPath s = SeedPath(52).child("t", 7);
    ContextSlate a = sample_slate(inst, s);
    ContextSlate b = sample_slate(inst, s);
    for (std::size_t arm = 0; arm < inst.num_arms; ++arm) {
        CHECK(a.contexts[arm] == b.contexts[arm]);
    }
    StepOutcome oa = pull(inst, a, 1, s.child("r"));
    StepOutcome ob = pull(inst, b, 1, s.child("r"));
    CHECK(oa.reward == ob.reward);
    CHECK(oa.instant_regret == ob.instant_regret);
}
