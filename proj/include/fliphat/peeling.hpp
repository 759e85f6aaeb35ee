#pragma once

// (epsilon, delta)-DP top-s selection: s rounds of noisy argmax over
// magnitudes without replacement, then fresh Laplace noise on the selected
// support. With lambda = 0 this degenerates to exact top-s selection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fliphat/budget.hpp"
#include "fliphat/linalg.hpp"
#include "fliphat/noise.hpp"

namespace fliphat {

struct PeelResult {
    DenseVector vector;      ///< s-sparse, noisy values on the selected support
    SparseSupport support;   ///< the indices chosen by the noisy argmax rounds
    double noise_magnitude;  ///< sum_i ||w_i||_inf^2 + ||w~ on support||_2^2
};

/// Run the peeling mechanism on v. One call consumes exactly (epsilon, delta)
/// on the dataset v was computed from, provided the per-coordinate
/// sensitivity of v is at most lambda.
inline PeelResult peel(const DenseVector& v, std::size_t s, const PrivacyBudget& budget,
                       double lambda, const SeedPath& stream) {
    const std::size_t d = v.size();
    if (s < 1 || s > d) throw std::invalid_argument("peel: s out of range");
    if (lambda < 0.0) throw std::invalid_argument("peel: lambda must be >= 0");

    if (lambda == 0.0) {
        SparseSupport support = exact_top_s(v, s);
        return PeelResult{restrict_to_support(v, support), support, 0.0};
    }

    const LaplaceScale scale = peeling_noise_scale(lambda, s, budget);
    RandomStream rng(stream);

    std::vector<bool> taken(d, false);
    std::vector<std::size_t> chosen;
    chosen.reserve(s);
    std::vector<double> round_noise(d);
    double noise_total = 0.0;

    for (std::size_t round = 0; round < s; ++round) {
        // Fresh noise over all d coordinates; only the argmax is restricted
        // to the untaken ones. The infinity norm of the full noise vector
        // feeds the per-call noise total.
        double winf = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            round_noise[j] = rng.laplace(scale.xi);
            winf = std::max(winf, std::abs(round_noise[j]));
        }
        noise_total += winf * winf;

        std::size_t best = d;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < d; ++j) {
            if (taken[j]) continue;
            double score = std::abs(v[j]) + round_noise[j];
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        taken[best] = true;
        chosen.push_back(best);
    }

    std::sort(chosen.begin(), chosen.end());
    SparseSupport support(std::move(chosen));

    DenseVector out = restrict_to_support(v, support);
    for (std::size_t j : support) {
        double w = rng.laplace(scale.xi);
        out[j] += w;
        noise_total += w * w;
    }
    return PeelResult{std::move(out), std::move(support), noise_total};
}

}  // namespace fliphat
