#pragma once

// Named self-check suites behind the CLI `verify` subcommand and the
// acceptance test binary. Each check returns a pass/fail verdict plus a
// one-line detail string with the measured quantities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "fliphat/bandit.hpp"
#include "fliphat/experiment.hpp"
#include "fliphat/linalg.hpp"
#include "fliphat/niht.hpp"
#include "fliphat/noise.hpp"
#include "fliphat/peeling.hpp"
#include "fliphat/policy.hpp"

namespace fliphat {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

template <class... Args>
std::string fmt(const char* pattern, Args... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, static_cast<double>(args)...);
    return buf;
}

// Solve A x = b for small dense symmetric positive definite A by Gaussian
// elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        }
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot * n + j]);
            std::swap(b[col], b[pivot]);
        }
        double diag = a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            double factor = a[r * n + col] / diag;
            for (std::size_t j = col; j < n; ++j) a[r * n + j] -= factor * a[col * n + j];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t j = r + 1; j < n; ++j) s -= a[r * n + j] * x[j];
        x[r] = s / a[r * n + r];
    }
    return x;
}

/// Least squares restricted to `support`: minimizes ||y - X_S b||_2 over b,
/// returned as a d-dimensional vector supported on S.
inline DenseVector restricted_least_squares(const DesignMatrix& X, std::span<const double> y,
                                            const SparseSupport& support) {
    const std::size_t k = support.size();
    const auto& idx = support.indices();
    std::vector<double> gram(k * k, 0.0);
    std::vector<double> rhs(k, 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        std::span<const double> row = X.row(i);
        for (std::size_t a = 0; a < k; ++a) {
            rhs[a] += row[idx[a]] * y[i];
            for (std::size_t b = a; b < k; ++b) gram[a * k + b] += row[idx[a]] * row[idx[b]];
        }
    }
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < a; ++b) gram[a * k + b] = gram[b * k + a];
    }
    std::vector<double> coef = solve_dense(std::move(gram), std::move(rhs));
    DenseVector out(X.cols());
    for (std::size_t a = 0; a < k; ++a) out[idx[a]] = coef[a];
    return out;
}

inline double l2_error(const DenseVector& a, const DenseVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double diff = a[i] - b[i];
        s += diff * diff;
    }
    return std::sqrt(s);
}

/// R^2 of the OLS fit of y against x.
inline double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (syy == 0.0) return 1.0;
    return (sxy * sxy) / (sxx * syy);
}

/// The fixed regression instance shared by the estimation checks:
/// n = 2000, d = 200, s* = 5, sigma = 0.1, iid Gaussian design.
struct RegressionFixture {
    DesignMatrix X{1, 1};
    std::vector<double> y;
    DenseVector beta_star{1};
    SparseSupport true_support;

    static RegressionFixture make(std::uint64_t seed) {
        const std::size_t n = 2000, d = 200, s_star = 5;
        const double sigma = 0.1;
        SeedPath root(seed);

        RegressionFixture fx;
        fx.beta_star = make_beta_star(d, s_star, 1.0 / std::sqrt(double(s_star)),
                                      root.child("beta"));
        std::vector<std::size_t> idx;
        for (std::size_t j = 0; j < d; ++j) {
            if (fx.beta_star[j] != 0.0) idx.push_back(j);
        }
        fx.true_support = SparseSupport(std::move(idx));

        std::vector<double> entries = sample_gaussian(0.0, 1.0, root.child("design"), n * d);
        fx.X = DesignMatrix(n, d, std::move(entries));
        std::vector<double> noise = sample_gaussian(0.0, sigma, root.child("noise"), n);
        fx.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            fx.y[i] = dot(fx.X.row(i), fx.beta_star.values()) + noise[i];
        }
        return fx;
    }
};

/// Tuning for private fits on the regression fixture. Few iterations keep
/// per-iteration budgets usable at desk sample sizes.
inline NihtConfig fixture_niht_config(double epsilon, double delta, bool non_private,
                                      const RegressionFixture& fx) {
    const double x_eff = 5.0;  // covers every realized |entry| of the Gaussian design
    const double sigma = 0.1;
    const double b_max = l1_norm(fx.beta_star.values());
    NihtConfig cfg;
    cfg.sparsity = 5;
    cfg.iterations = non_private ? 100 : 5;
    cfg.truncation = x_eff * b_max + sigma * std::sqrt(2.0 * std::log(double(fx.y.size())));
    cfg.noise_base = cfg.truncation + x_eff * b_max;
    cfg.step = 0.5;
    cfg.projection = b_max;
    cfg.budget = PrivacyBudget(epsilon, delta);
    cfg.non_private = non_private;
    return cfg;
}

inline ExperimentConfig desk_scale_config(std::size_t parallelism) {
    ExperimentConfig cfg;
    cfg.dimensions = {200, 400, 800, 1600};
    cfg.epsilons = {0.8, 2.0, 5.0};
    cfg.delta = 1e-2;
    cfg.s_star = 10;
    cfg.num_arms = 3;
    cfg.horizon = 16384;
    cfg.repetitions = 5;
    cfg.max_iterations = 50;
    cfg.root_seed = 1337;
    cfg.parallelism = parallelism;
    return cfg;
}

}  // namespace detail

/// Criterion: mean final regret grows close to linearly in ln d (R^2 >= 0.80
/// per epsilon) and is nonincreasing in epsilon at every d, allowing at most
/// one inversion and only where the 95% bands overlap.
inline std::vector<CheckResult> check_regret_trends(const SweepResult& sweep) {
    std::vector<CheckResult> out;

    auto aggregate_at = [&](std::size_t d, double eps) -> const CellAggregate& {
        for (const CellAggregate& a : sweep.aggregates) {
            if (a.dim == d && a.epsilon == eps) return a;
        }
        throw std::logic_error("missing aggregate cell");
    };

    bool r2_ok = true;
    std::string r2_detail;
    for (double eps : sweep.config.epsilons) {
        std::vector<double> log_d, mean;
        for (std::size_t d : sweep.config.dimensions) {
            log_d.push_back(std::log(static_cast<double>(d)));
            mean.push_back(aggregate_at(d, eps).mean_regret);
        }
        double r2 = detail::r_squared(log_d, mean);
        r2_ok = r2_ok && r2 >= 0.80;
        r2_detail += detail::fmt("eps=%g:R2=%.3f ", eps, r2);
    }
    out.push_back({"regret-log-d-fit", r2_ok, r2_detail});

    std::size_t inversions = 0;
    bool inversions_covered = true;
    for (std::size_t d : sweep.config.dimensions) {
        for (std::size_t e = 0; e + 1 < sweep.config.epsilons.size(); ++e) {
            const CellAggregate& lo = aggregate_at(d, sweep.config.epsilons[e]);
            const CellAggregate& hi = aggregate_at(d, sweep.config.epsilons[e + 1]);
            if (hi.mean_regret > lo.mean_regret) {
                ++inversions;
                bool bands_overlap = std::abs(hi.mean_regret - lo.mean_regret) <=
                                     hi.ci95_halfwidth + lo.ci95_halfwidth;
                inversions_covered = inversions_covered && bands_overlap;
            }
        }
    }
    bool mono_ok = inversions <= 1 && inversions_covered;
    out.push_back({"regret-epsilon-ordering", mono_ok,
                   detail::fmt("inversions=%.0f covered=%.0f", double(inversions),
                               double(inversions_covered))});
    return out;
}

/// Criterion: non-private fit error within 1.5x of least squares restricted
/// to the true support.
inline CheckResult check_oracle_equivalence() {
    auto fx = detail::RegressionFixture::make(99);
    DenseVector oracle = detail::restricted_least_squares(fx.X, fx.y, fx.true_support);
    double oracle_err = detail::l2_error(oracle, fx.beta_star);

    NihtConfig cfg = detail::fixture_niht_config(1.0, 1e-2, true, fx);
    cfg.projection = 2.0 * l1_norm(fx.beta_star.values());
    cfg.truncation = 1e6;  // no clipping
    NihtFitReport fit = niht_fit(fx.X, fx.y, cfg, DenseVector(fx.X.cols()), SeedPath(7));
    double fit_err = detail::l2_error(fit.estimate, fx.beta_star);

    bool ok = fit_err <= 1.5 * oracle_err;
    return {"non-private-oracle-equivalence", ok,
            detail::fmt("fit_err=%.6g oracle_err=%.6g ratio=%.3f", fit_err, oracle_err,
                        oracle_err > 0 ? fit_err / oracle_err : 0.0)};
}

/// Criterion: median estimation error over 20 seeds is monotone in privacy:
/// error(eps=0.5) >= error(eps=2) >= error(non-private), strict between
/// eps=0.5 and non-private.
inline CheckResult check_privacy_monotonicity() {
    auto fx = detail::RegressionFixture::make(99);

    auto median_error = [&](double epsilon, bool non_private) {
        NihtConfig cfg = detail::fixture_niht_config(epsilon, 1e-2, non_private, fx);
        std::vector<double> errs;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            NihtFitReport fit = niht_fit(fx.X, fx.y, cfg, DenseVector(fx.X.cols()),
                                         SeedPath(1000 + seed));
            errs.push_back(detail::l2_error(fit.estimate, fx.beta_star));
        }
        std::sort(errs.begin(), errs.end());
        return 0.5 * (errs[9] + errs[10]);
    };

    double err_low = median_error(0.5, false);
    double err_mid = median_error(2.0, false);
    double err_np = median_error(1.0, true);

    bool ok = err_low >= err_mid && err_mid >= err_np && err_low > err_np;
    return {"privacy-degrades-estimation", ok,
            detail::fmt("err(0.5)=%.4g err(2)=%.4g err(np)=%.4g", err_low, err_mid, err_np)};
}

/// Criterion: 1000 random neighboring dataset pairs never violate the
/// gradient-step sensitivity bound eta * 2 * x_max * (x_max*b_max + R) / n.
inline CheckResult check_gradient_sensitivity() {
    std::size_t violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    SeedPath root(4242);

    for (std::uint64_t trial = 0; trial < 1000; ++trial) {
        RandomStream rng(root.child("trial", trial));
        const std::size_t n = 10 + static_cast<std::size_t>(rng.next_u64() % 191);
        const std::size_t d = 5 + static_cast<std::size_t>(rng.next_u64() % 46);
        const double x_max = 0.5 + 4.5 * rng.uniform01();
        const double radius = 0.1 + 9.9 * rng.uniform01();
        const double b_max = 0.5 + 4.5 * rng.uniform01();
        const double eta = 0.05 + rng.uniform01();

        std::vector<double> entries(n * d);
        for (double& x : entries) x = x_max * (2.0 * rng.uniform01() - 1.0);
        DesignMatrix X(n, d, entries);

        std::vector<double> y(n);
        for (double& v : y) v = clip_scalar(4.0 * radius * (2.0 * rng.uniform01() - 1.0), radius);

        DenseVector theta(d);
        for (std::size_t j = 0; j < d; ++j) theta[j] = 2.0 * rng.uniform01() - 1.0;
        double norm = l1_norm(theta.values());
        if (norm > b_max) {
            for (std::size_t j = 0; j < d; ++j) theta[j] *= b_max / norm;
        }

        // Neighbor: one row and its response replaced.
        DesignMatrix X2 = X;
        std::vector<double> y2 = y;
        const std::size_t row = static_cast<std::size_t>(rng.next_u64() % n);
        for (std::size_t j = 0; j < d; ++j) X2(row, j) = x_max * (2.0 * rng.uniform01() - 1.0);
        y2[row] = clip_scalar(4.0 * radius * (2.0 * rng.uniform01() - 1.0), radius);

        DenseVector g1 = squared_loss_gradient(theta, X, y);
        DenseVector g2 = squared_loss_gradient(theta, X2, y2);
        double diff_inf = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            diff_inf = std::max(diff_inf, eta * std::abs(g1[j] - g2[j]));
        }
        double bound = eta * 2.0 * x_max * (x_max * b_max + radius) / static_cast<double>(n);
        if (diff_inf > bound) ++violations;
        worst_margin = std::min(worst_margin, bound - diff_inf);
    }

    return {"gradient-sensitivity-bound", violations == 0,
            detail::fmt("violations=%.0f worst_margin=%.3g", double(violations), worst_margin)};
}

/// Criterion: with lambda = 0, peeling equals exact top-s restriction
/// bit-exactly on 1000 random vectors.
inline CheckResult check_zero_noise_peeling() {
    SeedPath root(777);
    std::size_t mismatches = 0;
    for (std::uint64_t trial = 0; trial < 1000; ++trial) {
        RandomStream rng(root.child("trial", trial));
        const std::size_t d = 1 + static_cast<std::size_t>(rng.next_u64() % 50);
        const std::size_t s = 1 + static_cast<std::size_t>(rng.next_u64() % d);
        DenseVector v(d);
        for (std::size_t j = 0; j < d; ++j) v[j] = 20.0 * (rng.uniform01() - 0.5);

        PeelResult peeled = peel(v, s, PrivacyBudget(1.0, 1e-2), 0.0, root.child("peel", trial));
        DenseVector expected = restrict_to_support(v, exact_top_s(v, s));
        if (!(peeled.vector == expected) || peeled.noise_magnitude != 0.0) ++mismatches;
    }
    return {"zero-noise-peeling-exactness", mismatches == 0,
            detail::fmt("mismatches=%.0f", double(mismatches))};
}

/// Criterion: empirical variance of 10^6 Laplace draws within 2% of 2 xi^2
/// at the xi used by the peeling mechanism.
inline CheckResult check_laplace_calibration() {
    LaplaceScale scale = peeling_noise_scale(0.1, 5, PrivacyBudget(1.0, 1e-2));
    std::vector<double> xs = sample_laplace(scale, SeedPath(31415), 1000000);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);

    double target = 2.0 * scale.xi * scale.xi;
    double rel = std::abs(var - target) / target;
    return {"laplace-mechanism-calibration", rel <= 0.02,
            detail::fmt("xi=%.5f var=%.5f rel_err=%.4f", scale.xi, var, rel)};
}

/// Criterion: perturbing one stored reward in episode j changes nothing
/// before t_{j+1} on replay, and the ledger charges exactly (eps, delta) per
/// datum with pairwise disjoint intervals.
inline CheckResult check_forgetting_structure() {
    const double epsilon = 1.0, delta = 1e-2;
    BanditInstance inst;
    inst.num_arms = 2;
    inst.dim = 20;
    inst.s_star = 3;
    SeedPath root(2024);
    inst.beta_star = make_beta_star(20, 3, 1.0 / std::sqrt(3.0), root.child("beta"));
    inst.x_max = 5.0;
    inst.b_max = l1_norm(inst.beta_star.values());
    inst.noise_sigma = 0.1;

    FliphatConfig cfg;
    cfg.sparsity = 3;
    cfg.budget = PrivacyBudget(epsilon, delta);
    cfg.kappa_bar = std::max(1.0, std::log(2.0));
    cfg.kappa_under = 0.5;
    cfg.step = 1.0 / (2.0 * cfg.kappa_bar);
    cfg.projection = inst.b_max;
    cfg.max_iterations = 10;
    cfg.sigma_hint = inst.noise_sigma;

    const std::uint64_t horizon = 512;
    const std::size_t surgery_episode = 3;  // covers steps [8, 16)
    RegretTrace base = run_fliphat(inst, cfg, horizon, root.child("run"));
    RegretTrace modified =
        run_fliphat(inst, cfg, horizon, root.child("run"),
                    [](std::uint64_t t) { return t == 10 ? 7.5 : 0.0; });

    bool prefix_ok = true;
    for (std::uint64_t t = 1; t < episode_start(surgery_episode + 1); ++t) {
        prefix_ok = prefix_ok && base.chosen_arms[t - 1] == modified.chosen_arms[t - 1];
    }
    bool estimates_ok = true;
    for (std::size_t l = 1; l <= surgery_episode; ++l) {
        estimates_ok =
            estimates_ok && base.per_episode_estimates[l - 1] == modified.per_episode_estimates[l - 1];
    }
    // The perturbation must reach the stored data: replayed non-privately
    // (deterministic in the data), the next refit is the first to move.
    FliphatConfig np_cfg = cfg;
    np_cfg.non_private = true;
    RegretTrace np_base = run_fliphat(inst, np_cfg, horizon, root.child("np-run"));
    RegretTrace np_modified =
        run_fliphat(inst, np_cfg, horizon, root.child("np-run"),
                    [](std::uint64_t t) { return t == 10 ? 7.5 : 0.0; });
    bool diverges = !(np_base.per_episode_estimates[surgery_episode] ==
                      np_modified.per_episode_estimates[surgery_episode]);
    for (std::size_t l = 1; l <= surgery_episode; ++l) {
        diverges = diverges && np_base.per_episode_estimates[l - 1] ==
                                   np_modified.per_episode_estimates[l - 1];
    }

    bool ledger_ok = true;
    PrivacyBudget max_budget = base.ledger.max_per_user_budget();
    ledger_ok = ledger_ok && max_budget.epsilon == epsilon && max_budget.delta == delta;
    // Every full episode's data is consumed by exactly one refit...
    for (std::uint64_t t = 1; t < horizon; ++t) {
        PrivacyBudget b = base.ledger.per_user_budget(t);
        ledger_ok = ledger_ok && b.epsilon == epsilon && b.delta == delta;
    }
    // ...while the final (truncated) episode's data is never refit on.
    {
        PrivacyBudget b = base.ledger.per_user_budget(horizon);
        ledger_ok = ledger_ok && b.epsilon == 0.0 && b.delta == 0.0;
    }

    bool ok = prefix_ok && estimates_ok && diverges && ledger_ok;
    return {"forgetting-jdp-structure", ok,
            detail::fmt("prefix=%.0f estimates=%.0f diverges=%.0f ledger=%.0f", double(prefix_ok),
                        double(estimates_ok), double(diverges), double(ledger_ok))};
}

/// Runs every acceptance criterion. The desk-scale sweep is executed twice
/// (worker counts 1 and 8) to also cover the determinism criterion.
inline std::vector<CheckResult> run_acceptance_suite(bool include_sweep = true) {
    std::vector<CheckResult> results;

    results.push_back(check_oracle_equivalence());
    results.push_back(check_privacy_monotonicity());
    results.push_back(check_gradient_sensitivity());
    results.push_back(check_zero_noise_peeling());
    results.push_back(check_laplace_calibration());
    results.push_back(check_forgetting_structure());

    if (include_sweep) {
        SweepResult parallel_sweep = run_sweep(detail::desk_scale_config(8));
        for (CheckResult& r : check_regret_trends(parallel_sweep)) results.push_back(std::move(r));

        SweepResult serial_sweep = run_sweep(detail::desk_scale_config(1));
        bool identical = raw_csv(serial_sweep) == raw_csv(parallel_sweep);
        results.push_back({"parallel-determinism", identical,
                           identical ? "raw.csv byte-identical for 1 and 8 workers"
                                     : "raw.csv differs between worker counts"});
    }
    return results;
}

/// The fast subset: everything except the desk-scale sweep.
inline std::vector<CheckResult> run_quick_suite() { return run_acceptance_suite(false); }

}  // namespace fliphat
