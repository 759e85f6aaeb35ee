#pragma once

// Sparse linear contextual bandit simulator: AR(1) Gaussian context slates,
// noisy linear rewards under a hidden sparse parameter, regret scoring.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fliphat/linalg.hpp"
#include "fliphat/noise.hpp"

namespace fliphat {

/// Ground-truth environment description.
struct BanditInstance {
    std::size_t num_arms = 2;    ///< K
    std::size_t dim = 1;         ///< d
    std::size_t s_star = 1;      ///< true sparsity
    DenseVector beta_star{1};    ///< hidden parameter
    double x_max = 10.0;         ///< context infinity-norm bound (hard clamp)
    double b_max = 1.0;          ///< L1 bound on beta_star
    double ar_phi = 0.3;         ///< AR(1) design parameter, |phi| < 1
    double noise_sigma = 0.0;    ///< reward noise standard deviation
};

/// Per-arm contexts for one time step.
struct ContextSlate {
    std::vector<DenseVector> contexts;  ///< K vectors of dimension d
};

struct StepOutcome {
    std::size_t chosen_arm = 0;
    double reward = 0.0;
    double instant_regret = 0.0;
};

/// Exactly s_star nonzeros on uniformly random positions, values
/// +-magnitude with random signs.
inline DenseVector make_beta_star(std::size_t dim, std::size_t s_star, double magnitude,
                                  const SeedPath& stream) {
    if (s_star < 1 || s_star > dim) throw std::invalid_argument("make_beta_star: s_star out of range");
    if (!(magnitude > 0.0)) throw std::invalid_argument("make_beta_star: magnitude must be > 0");

    RandomStream rng(stream);
    // Partial Fisher-Yates: the first s_star slots of a shuffled index list.
    std::vector<std::size_t> order(dim);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < s_star; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (dim - i));
        std::swap(order[i], order[j]);
    }

    DenseVector beta(dim);
    for (std::size_t i = 0; i < s_star; ++i) {
        double sign = (rng.next_u64() & 1) ? 1.0 : -1.0;
        beta[order[i]] = sign * magnitude;
    }
    return beta;
}

/// One draw from N(0, Sigma) with Sigma_ij = phi^|i-j|, via the AR(1)
/// recursion z_1 = g_1, z_j = phi z_{j-1} + sqrt(1-phi^2) g_j, each
/// coordinate clamped to [-x_max, x_max].
inline DenseVector sample_ar1_context(std::size_t dim, double phi, double x_max,
                                      RandomStream& rng) {
    const double innovation = std::sqrt(1.0 - phi * phi);
    DenseVector z(dim);
    double prev = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        double g = rng.gaussian();
        double value = (j == 0) ? g : phi * prev + innovation * g;
        prev = value;
        z[j] = clip_scalar(value, x_max);
    }
    return z;
}

/// K independent context draws for one time step.
inline ContextSlate sample_slate(const BanditInstance& inst, const SeedPath& stream) {
    RandomStream rng(stream);
    ContextSlate slate;
    slate.contexts.reserve(inst.num_arms);
    for (std::size_t a = 0; a < inst.num_arms; ++a) {
        slate.contexts.push_back(sample_ar1_context(inst.dim, inst.ar_phi, inst.x_max, rng));
    }
    return slate;
}

/// Noiseless mean reward of each arm under beta.
inline std::size_t best_arm(const ContextSlate& slate, const DenseVector& beta) {
    std::size_t best = 0;
    double best_score = dot(slate.contexts[0].values(), beta.values());
    for (std::size_t a = 1; a < slate.contexts.size(); ++a) {
        double score = dot(slate.contexts[a].values(), beta.values());
        if (score > best_score) {
            best_score = score;
            best = a;
        }
    }
    return best;
}

/// Play `arm` on `slate`: reward = <x_arm, beta*> + N(0, sigma^2), regret
/// scored noiselessly against the best arm on this slate.
inline StepOutcome pull(const BanditInstance& inst, const ContextSlate& slate, std::size_t arm,
                        const SeedPath& stream) {
    if (arm >= slate.contexts.size()) throw std::invalid_argument("pull: arm out of range");

    double mean = dot(slate.contexts[arm].values(), inst.beta_star.values());
    double best_mean = dot(slate.contexts[best_arm(slate, inst.beta_star)].values(),
                           inst.beta_star.values());

    double noise = 0.0;
    if (inst.noise_sigma > 0.0) {
        RandomStream rng(stream);
        noise = inst.noise_sigma * rng.gaussian();
    }
    return StepOutcome{arm, mean + noise, best_mean - mean};
}

}  // namespace fliphat
