#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fliphat/niht.hpp"

using namespace fliphat;

namespace {

double loss(const DenseVector& theta, const DesignMatrix& X, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        double r = y[i] - dot(X.row(i), theta.values());
        s += r * r;
    }
    return s / (2.0 * static_cast<double>(X.rows()));
}

// Largest eigenvalue of X^T X / n by power iteration.
double lambda_max_estimate(const DesignMatrix& X) {
    DenseVector v(X.cols());
    RandomStream rng{SeedPath(555)};
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = rng.uniform01();
    double eig = 0.0;
    for (int it = 0; it < 100; ++it) {
        DenseVector w(X.cols());
        for (std::size_t i = 0; i < X.rows(); ++i) {
            double p = dot(X.row(i), v.values());
            for (std::size_t j = 0; j < X.cols(); ++j) w[j] += p * X.row(i)[j];
        }
        for (std::size_t j = 0; j < w.size(); ++j) w[j] /= static_cast<double>(X.rows());
        eig = l2_norm(w.values());
        for (std::size_t j = 0; j < w.size(); ++j) v[j] = w[j] / eig;
    }
    return eig;
}

}  // namespace

TEST_CASE("gradient on hand-computed instance") {
    DesignMatrix X(2, 1, {1.0, 1.0});
    DenseVector g = squared_loss_gradient(DenseVector(1), X, std::vector<double>{3.0, 1.0});
    // (1/2)(1*(0-3) + 1*(0-1)) = -2
    CHECK(g[0] == Catch::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("gradient vanishes at zero residual") {
    DesignMatrix X(3, 2, {1.0, 2.0, -1.0, 0.5, 0.0, 3.0});
    DenseVector theta{0.7, -0.2};
    std::vector<double> y(3);
    for (std::size_t i = 0; i < 3; ++i) y[i] = dot(X.row(i), theta.values());
    DenseVector g = squared_loss_gradient(theta, X, y);
    CHECK(linf_norm(g.values()) <= 1e-14);
}

TEST_CASE("gradient vanishes at the least-squares solution") {
    SeedPath root(31);
    std::vector<double> entries = sample_gaussian(0.0, 1.0, root.child("X"), 5 * 3);
    DesignMatrix X(5, 3, entries);
    std::vector<double> y = sample_gaussian(0.0, 1.0, root.child("y"), 5);

    // Solve the 3x3 normal equations directly.
    double a[9] = {0}, b[3] = {0};
    for (std::size_t i = 0; i < 5; ++i) {
        for (int p = 0; p < 3; ++p) {
            b[p] += X(i, p) * y[i];
            for (int q = 0; q < 3; ++q) a[p * 3 + q] += X(i, p) * X(i, q);
        }
    }
    // Cramer's rule.
    auto det3 = [](const double m[9]) {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    };
    double d0 = det3(a);
    DenseVector theta(3);
    for (int k = 0; k < 3; ++k) {
        double m[9];
        std::copy(a, a + 9, m);
        for (int r = 0; r < 3; ++r) m[r * 3 + k] = b[r];
        theta[k] = det3(m) / d0;
    }

    DenseVector g = squared_loss_gradient(theta, X, y);
    CHECK(linf_norm(g.values()) <= 1e-8);
}

TEST_CASE("gradient matches central finite differences") {
    SeedPath root(32);
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        RandomStream rng{root.child("t", trial)};
        std::size_t n = 2 + rng.next_u64() % 19;
        std::size_t d = 1 + rng.next_u64() % 10;
        std::vector<double> entries(n * d);
        for (double& e : entries) e = 4.0 * (rng.uniform01() - 0.5);
        DesignMatrix X(n, d, entries);
        std::vector<double> y(n);
        for (double& v : y) v = 4.0 * (rng.uniform01() - 0.5);
        DenseVector theta(d);
        for (std::size_t j = 0; j < d; ++j) theta[j] = 2.0 * (rng.uniform01() - 0.5);

        DenseVector g = squared_loss_gradient(theta, X, y);
        const double h = 1e-6;
        for (std::size_t j = 0; j < d; ++j) {
            DenseVector up = theta, down = theta;
            up[j] += h;
            down[j] -= h;
            double fd = (loss(up, X, y) - loss(down, X, y)) / (2.0 * h);
            double scale = std::max(1.0, std::abs(g[j]));
            CHECK(std::abs(g[j] - fd) / scale <= 1e-5);
        }
    }
}

TEST_CASE("gradient dimension checks") {
    DesignMatrix X(2, 3);
    CHECK_THROWS_AS(squared_loss_gradient(DenseVector(2), X, std::vector<double>{1.0, 2.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(squared_loss_gradient(DenseVector(3), X, std::vector<double>{1.0}),
                    std::invalid_argument);
}

TEST_CASE("zero step size preserves the zero vector") {
    DesignMatrix X(4, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1});
    std::vector<double> y = {1.0, 2.0, 3.0, 4.0};
    NihtConfig cfg;
    cfg.sparsity = 2;
    cfg.iterations = 1;
    cfg.truncation = 10.0;
    cfg.noise_base = 0.0;
    cfg.step = 1e-300;  // effectively zero; step must stay positive
    cfg.projection = 1.0;
    cfg.budget = PrivacyBudget(1.0, 0.01);
    cfg.non_private = true;
    NihtFitReport fit = niht_fit(X, y, cfg, DenseVector(3), SeedPath(33));
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(fit.estimate[j]) < 1e-290);
    CHECK(fit.iterations_run == 1);
}

TEST_CASE("niht rejects invalid configurations") {
    DesignMatrix X(2, 2, {1, 0, 0, 1});
    std::vector<double> y = {1.0, 1.0};
    NihtConfig cfg;
    cfg.sparsity = 1;
    cfg.iterations = 1;
    cfg.truncation = 1.0;
    cfg.step = 0.5;
    cfg.projection = 1.0;
    cfg.non_private = true;

    NihtConfig bad = cfg;
    bad.iterations = 0;
    CHECK_THROWS_AS(niht_fit(X, y, bad, DenseVector(2), SeedPath(1)), std::invalid_argument);

    CHECK_THROWS_AS(niht_fit(X, y, cfg, DenseVector{2.0, 2.0}, SeedPath(1)),
                    std::invalid_argument);  // ||init||_1 > C
    CHECK_THROWS_AS(niht_fit(X, y, cfg, DenseVector(3), SeedPath(1)), std::invalid_argument);
}

TEST_CASE("noiseless recovery matches the planted parameter") {
    const std::size_t n = 500, d = 20;
    SeedPath root(34);
    std::vector<double> entries = sample_gaussian(0.0, 1.0, root.child("X"), n * d);
    DesignMatrix X(n, d, entries);

    DenseVector beta(d);
    beta[2] = 1.0;
    beta[9] = -1.0;
    beta[15] = 1.0;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = dot(X.row(i), beta.values());

    NihtConfig cfg;
    cfg.sparsity = 3;
    cfg.iterations = 60;
    cfg.truncation = 1e6;  // no clipping
    cfg.step = 1.0 / (2.0 * lambda_max_estimate(X));
    cfg.projection = 3.0;
    cfg.non_private = true;
    NihtFitReport fit = niht_fit(X, y, cfg, DenseVector(d), SeedPath(35));

    double err = 0.0;
    for (std::size_t j = 0; j < d; ++j) err += (fit.estimate[j] - beta[j]) * (fit.estimate[j] - beta[j]);
    CHECK(std::sqrt(err) <= 1e-3);
}

TEST_CASE("output is feasible for any noise realization") {
    const std::size_t n = 50, d = 12;
    SeedPath root(36);
    std::vector<double> entries = sample_gaussian(0.0, 1.0, root.child("X"), n * d);
    DesignMatrix X(n, d, entries);
    std::vector<double> y = sample_gaussian(0.0, 2.0, root.child("y"), n);

    NihtConfig cfg;
    cfg.sparsity = 4;
    cfg.iterations = 8;
    cfg.truncation = 3.0;
    cfg.noise_base = 5.0;
    cfg.step = 0.4;
    cfg.projection = 1.7;
    cfg.budget = PrivacyBudget(1.0, 0.01);

    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        NihtFitReport fit = niht_fit(X, y, cfg, DenseVector(d), root.child("fit", seed));
        CHECK(l1_norm(fit.estimate.values()) <= cfg.projection * (1.0 + 1e-12));
        CHECK(l0_norm(fit.estimate.values()) <= cfg.sparsity);
        CHECK(fit.per_iteration_noise.size() == cfg.iterations);
        for (double w : fit.per_iteration_noise) CHECK(w > 0.0);
    }
}

TEST_CASE("private fits are no better than non-private, median over 20 streams") {
    const std::size_t n = 400, d = 30;
    SeedPath root(37);
    std::vector<double> entries = sample_gaussian(0.0, 1.0, root.child("X"), n * d);
    DesignMatrix X(n, d, entries);
    DenseVector beta(d);
    beta[1] = 0.6;
    beta[11] = -0.6;
    beta[21] = 0.6;
    std::vector<double> noise = sample_gaussian(0.0, 0.1, root.child("noise"), n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = dot(X.row(i), beta.values()) + noise[i];

    NihtConfig cfg;
    cfg.sparsity = 3;
    cfg.iterations = 10;
    cfg.truncation = 10.0;
    cfg.noise_base = 15.0;
    cfg.step = 0.4;
    cfg.projection = 1.8;
    cfg.budget = PrivacyBudget(1.0, 0.01);

    auto error_of = [&](const NihtFitReport& fit) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += (fit.estimate[j] - beta[j]) * (fit.estimate[j] - beta[j]);
        return std::sqrt(s);
    };

    NihtConfig np = cfg;
    np.non_private = true;
    double np_err = error_of(niht_fit(X, y, np, DenseVector(d), root.child("np")));

    std::vector<double> private_errs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        private_errs.push_back(error_of(niht_fit(X, y, cfg, DenseVector(d), root.child("p", seed))));
    }
    std::sort(private_errs.begin(), private_errs.end());
    double median = 0.5 * (private_errs[9] + private_errs[10]);
    CHECK(median >= np_err);
}

TEST_CASE("niht is deterministic given its stream") {
    DesignMatrix X(5, 4, sample_gaussian(0.0, 1.0, SeedPath(38).child("X"), 20));
    std::vector<double> y = sample_gaussian(0.0, 1.0, SeedPath(38).child("y"), 5);
    NihtConfig cfg;
    cfg.sparsity = 2;
    cfg.iterations = 4;
    cfg.truncation = 2.0;
    cfg.noise_base = 3.0;
    cfg.step = 0.3;
    cfg.projection = 1.0;
    cfg.budget = PrivacyBudget(0.7, 0.02);

    NihtFitReport a = niht_fit(X, y, cfg, DenseVector(4), SeedPath(39));
    NihtFitReport b = niht_fit(X, y, cfg, DenseVector(4), SeedPath(39));
    CHECK(a.estimate == b.estimate);
    CHECK(a.per_iteration_noise == b.per_iteration_noise);
}
