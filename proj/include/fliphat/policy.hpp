#pragma once

// Episodic sparse bandit policy: doubling episode schedule, episodic
// forgetting (each refit sees only the previous episode's data), a private
// hard-thresholding refit per episode, and greedy action selection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fliphat/bandit.hpp"
#include "fliphat/budget.hpp"
#include "fliphat/ledger.hpp"
#include "fliphat/linalg.hpp"
#include "fliphat/niht.hpp"
#include "fliphat/noise.hpp"

namespace fliphat {

/// Tuning inputs that stay fixed across episodes.
struct FliphatConfig {
    std::size_t sparsity = 1;   ///< s fed to every refit
    PrivacyBudget budget;       ///< full (epsilon, delta), charged once per episode
    double step = 0.5;          ///< eta
    double projection = 1.0;    ///< C, L1 ball radius
    double kappa_bar = 1.0;     ///< restricted largest-eigenvalue bound
    double kappa_under = 1.0;   ///< restricted smallest-eigenvalue bound
    std::size_t max_iterations = 50;  ///< cap on the per-episode M
    double sigma_hint = 0.0;    ///< sigma used inside the truncation level
    bool non_private = false;
};

struct RegretTrace {
    std::vector<double> per_step_regret;          ///< length T
    std::vector<double> cumulative;               ///< running sums
    std::vector<std::size_t> chosen_arms;         ///< length T
    std::vector<std::uint64_t> episode_starts;    ///< 1-based step of each episode
    std::vector<DenseVector> per_episode_estimates;  ///< beta_hat for episodes 1, 2, ...
    std::vector<double> per_episode_noise;        ///< realized sum_m W_m per refit
    bool iteration_cap_hit = false;               ///< any refit ran at the M cap
    PrivacyLedger ledger;
};

/// The unique episode index l with 2^l <= t < 2^(l+1).
inline std::size_t episode_of(std::uint64_t t) {
    if (t < 1) throw std::invalid_argument("episode_of: t must be >= 1");
    std::size_t l = 0;
    while ((std::uint64_t{2} << l) <= t) ++l;
    return l;
}

inline std::uint64_t episode_start(std::size_t episode) {
    return std::uint64_t{1} << episode;
}

inline std::uint64_t episode_length(std::size_t episode) {
    return std::uint64_t{1} << episode;
}

/// Tuning tuple of the refit at the start of episode `episode` (>= 1), fit
/// on the previous episode's N = 2^(episode-1) samples:
///   R = x_max b_max + sigma sqrt(2 ln N),  B = R + x_max b_max,
///   M = min(M_max, ceil(28 kappa ln(max(e, b_max^2 N)))).
inline NihtConfig schedule_params(std::size_t episode, const FliphatConfig& cfg, double x_max,
                                  double b_max) {
    if (episode < 1) throw std::invalid_argument("schedule_params: episode must be >= 1");

    const double n_prev = static_cast<double>(episode_length(episode - 1));
    const double kappa = cfg.kappa_bar / cfg.kappa_under;

    NihtConfig out;
    out.sparsity = cfg.sparsity;
    out.truncation = x_max * b_max + cfg.sigma_hint * std::sqrt(2.0 * std::log(n_prev));
    out.noise_base = out.truncation + x_max * b_max;
    double m_raw = std::ceil(28.0 * kappa * std::log(std::max(std::exp(1.0), b_max * b_max * n_prev)));
    out.iterations = std::min<std::size_t>(cfg.max_iterations, static_cast<std::size_t>(m_raw));
    out.step = cfg.step;
    out.projection = cfg.projection;
    out.budget = cfg.budget;
    out.non_private = cfg.non_private;
    return out;
}

/// Arm maximizing <x_a, beta_hat>, ties broken by lowest arm index.
inline std::size_t select_action(const ContextSlate& slate, const DenseVector& beta_hat) {
    if (slate.contexts.empty() || slate.contexts[0].size() != beta_hat.size()) {
        throw std::invalid_argument("select_action: slate/estimate dimension mismatch");
    }
    return best_arm(slate, beta_hat);
}

/// Additive perturbation applied to the reward *stored* for refitting at a
/// given time step. Regret scoring is untouched; used for replay experiments
/// that probe which downstream quantities one datum can influence.
using RewardPerturbation = std::function<double(std::uint64_t t)>;

inline RegretTrace run_fliphat(const BanditInstance& inst, const FliphatConfig& cfg,
                               std::uint64_t horizon, const SeedPath& stream,
                               const RewardPerturbation& perturb = {}) {
    if (horizon < 1) throw std::invalid_argument("run_fliphat: horizon must be >= 1");

    RegretTrace trace;
    trace.per_step_regret.reserve(horizon);
    trace.cumulative.reserve(horizon);
    trace.chosen_arms.reserve(horizon);

    // Data buffer for the current episode, cleared at every boundary.
    std::vector<double> buffer_rows;
    std::vector<double> buffer_rewards;

    DenseVector beta_hat(inst.dim);
    double cumulative = 0.0;

    auto record_step = [&](std::uint64_t t, const ContextSlate& slate, const StepOutcome& out) {
        trace.per_step_regret.push_back(out.instant_regret);
        cumulative += out.instant_regret;
        trace.cumulative.push_back(cumulative);
        trace.chosen_arms.push_back(out.chosen_arm);

        const DenseVector& x = slate.contexts[out.chosen_arm];
        buffer_rows.insert(buffer_rows.end(), x.begin(), x.end());
        double stored = out.reward + (perturb ? perturb(t) : 0.0);
        buffer_rewards.push_back(stored);
    };

    // Episode 0: the single step t = 1, a uniformly random arm.
    trace.episode_starts.push_back(1);
    {
        ContextSlate slate = sample_slate(inst, stream.child("slate", 1));
        RandomStream arm_rng(stream.child("arm0"));
        std::size_t arm = static_cast<std::size_t>(arm_rng.next_u64() % inst.num_arms);
        StepOutcome out = pull(inst, slate, arm, stream.child("reward", 1));
        record_step(1, slate, out);
    }

    for (std::size_t episode = 1; episode_start(episode) <= horizon; ++episode) {
        const std::uint64_t t_begin = episode_start(episode);
        const std::uint64_t t_end = std::min<std::uint64_t>(t_begin + episode_length(episode),
                                                            horizon + 1);
        trace.episode_starts.push_back(t_begin);

        // Refit on the previous episode's data, then forget it.
        const std::size_t n_prev = buffer_rewards.size();
        DesignMatrix X(n_prev, inst.dim, std::move(buffer_rows));
        NihtConfig niht_cfg = schedule_params(episode, cfg, inst.x_max, inst.b_max);
        NihtFitReport fit = niht_fit(X, buffer_rewards, niht_cfg, DenseVector(inst.dim),
                                     stream.child("refit", episode));

        beta_hat = fit.estimate;
        trace.per_episode_estimates.push_back(beta_hat);
        double noise_sum = 0.0;
        for (double w : fit.per_iteration_noise) noise_sum += w;
        trace.per_episode_noise.push_back(noise_sum);
        if (fit.iterations_run >= cfg.max_iterations) trace.iteration_cap_hit = true;

        if (!cfg.non_private) {
            trace.ledger.record(LedgerEntry{"niht-episode-" + std::to_string(episode),
                                            episode_start(episode - 1), t_begin,
                                            cfg.budget.epsilon, cfg.budget.delta,
                                            fit.iterations_run});
        }

        buffer_rows.clear();
        buffer_rewards.clear();

        for (std::uint64_t t = t_begin; t < t_end; ++t) {
            ContextSlate slate = sample_slate(inst, stream.child("slate", t));
            std::size_t arm = select_action(slate, beta_hat);
            StepOutcome out = pull(inst, slate, arm, stream.child("reward", t));
            record_step(t, slate, out);
        }
    }

    return trace;
}

}  // namespace fliphat
