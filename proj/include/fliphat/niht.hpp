#pragma once

// Noisy iterative hard thresholding: M rounds of gradient step on the
// clipped-response squared loss, private top-s selection with per-iteration
// budget (eps/M, delta/M) and sensitivity eta*B/n, then L1-ball projection.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fliphat/budget.hpp"
#include "fliphat/linalg.hpp"
#include "fliphat/noise.hpp"
#include "fliphat/peeling.hpp"

namespace fliphat {

/// The full tuning tuple of the private sparse regression oracle.
struct NihtConfig {
    std::size_t sparsity = 1;     ///< s
    std::size_t iterations = 1;   ///< M
    double truncation = 0.0;      ///< R, response clip level
    double noise_base = 0.0;      ///< B; lambda per iteration is eta*B/n
    double step = 0.5;            ///< eta
    double projection = 1.0;      ///< C, L1 ball radius
    PrivacyBudget budget;
    bool non_private = false;     ///< exact hard thresholding, no noise
};

struct NihtFitReport {
    DenseVector estimate;                     ///< theta^M
    std::vector<double> per_iteration_noise;  ///< realized W_m, m = 1..M
    std::size_t iterations_run = 0;
};

/// Gradient of L(theta) = (1/2n) ||y_clipped - X theta||_2^2,
/// i.e. (1/n) X^T (X theta - y_clipped).
inline DenseVector squared_loss_gradient(const DenseVector& theta, const DesignMatrix& X,
                                         std::span<const double> y_clipped) {
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    if (n < 1) throw std::invalid_argument("squared_loss_gradient: empty design");
    if (theta.size() != d || y_clipped.size() != n) {
        throw std::invalid_argument("squared_loss_gradient: dimension mismatch");
    }

    DenseVector grad(d);
    for (std::size_t i = 0; i < n; ++i) {
        std::span<const double> xi = X.row(i);
        double residual = dot(xi, theta.values()) - y_clipped[i];
        for (std::size_t j = 0; j < d; ++j) grad[j] += residual * xi[j];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) grad[j] *= inv_n;
    return grad;
}

inline NihtFitReport niht_fit(const DesignMatrix& X, std::span<const double> y,
                              const NihtConfig& cfg, const DenseVector& init,
                              const SeedPath& stream) {
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    if (n < 1) throw std::invalid_argument("niht_fit: empty design");
    if (y.size() != n) throw std::invalid_argument("niht_fit: response length mismatch");
    if (init.size() != d) throw std::invalid_argument("niht_fit: init dimension mismatch");
    if (cfg.iterations < 1) throw std::invalid_argument("niht_fit: M must be >= 1");
    if (cfg.sparsity < 1 || cfg.sparsity > d) throw std::invalid_argument("niht_fit: s out of range");
    if (!(cfg.step > 0.0)) throw std::invalid_argument("niht_fit: eta must be > 0");
    if (!(cfg.projection > 0.0)) throw std::invalid_argument("niht_fit: C must be > 0");
    if (l1_norm(init.values()) > cfg.projection * (1.0 + 1e-12)) {
        throw std::invalid_argument("niht_fit: ||init||_1 exceeds the projection level C");
    }

    const std::vector<double> y_clipped = clip_vector(y, cfg.truncation);
    const double m = static_cast<double>(cfg.iterations);
    const PrivacyBudget iter_budget(cfg.budget.epsilon / m, cfg.budget.delta / m);
    const double lambda =
        cfg.non_private ? 0.0 : cfg.step * cfg.noise_base / static_cast<double>(n);

    DenseVector theta = init;
    std::vector<double> noise_per_iter;
    noise_per_iter.reserve(cfg.iterations);

    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
        DenseVector grad = squared_loss_gradient(theta, X, y_clipped);
        for (std::size_t j = 0; j < d; ++j) theta[j] -= cfg.step * grad[j];

        PeelResult peeled =
            peel(theta, cfg.sparsity, iter_budget, lambda, stream.child("iter", iter));
        noise_per_iter.push_back(peeled.noise_magnitude);

        theta = project_l1(peeled.vector, cfg.projection);
    }

    return NihtFitReport{std::move(theta), std::move(noise_per_iter), cfg.iterations};
}

}  // namespace fliphat
