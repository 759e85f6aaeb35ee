#pragma once

// Experiment harness: dimension/privacy sweeps with repeated runs, one seed
// path per (d, epsilon, repetition) cell so results are bit-reproducible
// regardless of parallelism, plus CSV/SVG emission of the aggregates.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fliphat/bandit.hpp"
#include "fliphat/policy.hpp"

namespace fliphat {

class config_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::vector<std::size_t> dimensions = {400, 800, 1600, 2800};
    std::vector<double> epsilons = {0.8, 2.0, 5.0};  ///< +inf selects non-private mode
    double delta = 1e-2;
    std::size_t s_star = 10;
    std::size_t num_arms = 3;
    std::uint64_t horizon = 30000;
    std::size_t repetitions = 10;
    std::uint64_t root_seed = 20240501;

    // Environment overrides.
    double x_max = 10.0;
    double ar_phi = 0.3;
    double noise_sigma = 0.31622776601683794;  ///< sqrt(0.1)
    double beta_magnitude = 0.0;               ///< 0 selects 1/sqrt(s_star)

    // Policy overrides; 0 selects the derived default.
    std::size_t policy_sparsity = 0;  ///< default s_star
    std::size_t max_iterations = 50;
    double kappa_bar = 0.0;    ///< default max(1, ln K)
    double kappa_under = 0.0;  ///< default 1/K
    bool non_private = false;  ///< force every cell non-private

    std::size_t parallelism = 1;
};

struct CellResult {
    std::size_t dim = 0;
    double epsilon = 0.0;
    std::size_t repetition = 0;
    double final_regret = 0.0;
    std::string seed_path;
    double max_user_epsilon = 0.0;
    double max_user_delta = 0.0;
    std::size_t ledger_entries = 0;
    bool iteration_cap_hit = false;
};

struct CellAggregate {
    std::size_t dim = 0;
    double epsilon = 0.0;
    double mean_regret = 0.0;
    double stddev = 0.0;
    double ci95_halfwidth = 0.0;
    std::size_t repetitions = 0;
};

struct SweepResult {
    ExperimentConfig config;
    std::vector<CellResult> cells;           ///< ordered by (d, epsilon, rep) config order
    std::vector<CellAggregate> aggregates;   ///< ordered by (d, epsilon) config order
};

inline bool is_non_private_epsilon(double eps) { return std::isinf(eps); }

namespace detail {

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.dimensions.empty()) throw config_error("dimensions: list must be nonempty");
    if (cfg.epsilons.empty()) throw config_error("epsilons: list must be nonempty");
    if (cfg.repetitions < 1) throw config_error("repetitions: must be >= 1");
    if (cfg.horizon < 1) throw config_error("T: must be >= 1");
    if (cfg.s_star < 1) throw config_error("s_star: must be >= 1");
    if (cfg.num_arms < 2) throw config_error("K: must be >= 2");
    if (cfg.delta < 0.0 || cfg.delta >= 1.0) throw config_error("delta: must lie in [0, 1)");
    if (!(cfg.x_max > 0.0)) throw config_error("x_max: must be > 0");
    if (!(std::abs(cfg.ar_phi) < 1.0)) throw config_error("ar_phi: must lie in (-1, 1)");
    if (cfg.noise_sigma < 0.0) throw config_error("noise_sigma: must be >= 0");
    if (cfg.parallelism < 1) throw config_error("parallel: must be >= 1");
    if (cfg.max_iterations < 1) throw config_error("M_max: must be >= 1");
    for (std::size_t d : cfg.dimensions) {
        if (d < cfg.s_star) throw config_error("dimensions: every d must be >= s_star");
    }
    for (double e : cfg.epsilons) {
        if (!(e > 0.0)) throw config_error("epsilons: every value must be > 0 (or inf)");
    }
}

inline std::string format_double(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace detail

/// Execute one sweep cell; pure function of (config, d, epsilon, repetition).
inline CellResult run_cell(const ExperimentConfig& cfg, std::size_t dim, double epsilon,
                           std::size_t repetition) {
    SeedPath cell = SeedPath(cfg.root_seed)
                        .child("d", dim)
                        .child("eps", std::bit_cast<std::uint64_t>(epsilon))
                        .child("rep", repetition);

    const double magnitude =
        cfg.beta_magnitude > 0.0 ? cfg.beta_magnitude
                                 : 1.0 / std::sqrt(static_cast<double>(cfg.s_star));

    BanditInstance inst;
    inst.num_arms = cfg.num_arms;
    inst.dim = dim;
    inst.s_star = cfg.s_star;
    inst.beta_star = make_beta_star(dim, cfg.s_star, magnitude, cell.child("beta"));
    inst.x_max = cfg.x_max;
    inst.b_max = l1_norm(inst.beta_star.values());
    inst.ar_phi = cfg.ar_phi;
    inst.noise_sigma = cfg.noise_sigma;

    const bool non_private = cfg.non_private || is_non_private_epsilon(epsilon);

    FliphatConfig policy;
    policy.sparsity = cfg.policy_sparsity > 0 ? cfg.policy_sparsity : cfg.s_star;
    policy.budget = PrivacyBudget(non_private ? std::numeric_limits<double>::infinity() : epsilon,
                                  cfg.delta);
    policy.kappa_bar =
        cfg.kappa_bar > 0.0 ? cfg.kappa_bar : std::max(1.0, std::log(static_cast<double>(cfg.num_arms)));
    policy.kappa_under = cfg.kappa_under > 0.0 ? cfg.kappa_under
                                               : 1.0 / static_cast<double>(cfg.num_arms);
    policy.step = 1.0 / (2.0 * policy.kappa_bar);
    policy.projection = inst.b_max;
    policy.max_iterations = cfg.max_iterations;
    policy.sigma_hint = cfg.noise_sigma;
    policy.non_private = non_private;

    RegretTrace trace = run_fliphat(inst, policy, cfg.horizon, cell.child("run"));

    CellResult out;
    out.dim = dim;
    out.epsilon = epsilon;
    out.repetition = repetition;
    out.final_regret = trace.cumulative.back();
    out.seed_path = cell.to_string();
    PrivacyBudget max_budget = trace.ledger.max_per_user_budget();
    out.max_user_epsilon = max_budget.epsilon;
    out.max_user_delta = max_budget.delta;
    out.ledger_entries = trace.ledger.entries().size();
    out.iteration_cap_hit = trace.iteration_cap_hit;
    return out;
}

/// Run every (d, epsilon, repetition) cell. Cells are scheduled over
/// cfg.parallelism workers; results land in config order, so the output is
/// identical for any worker count.
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
    detail::validate_config(cfg);

    struct CellKey {
        std::size_t dim;
        double epsilon;
        std::size_t repetition;
    };
    std::vector<CellKey> keys;
    for (std::size_t d : cfg.dimensions) {
        for (double e : cfg.epsilons) {
            for (std::size_t r = 0; r < cfg.repetitions; ++r) keys.push_back({d, e, r});
        }
    }

    SweepResult result;
    result.config = cfg;
    result.cells.resize(keys.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= keys.size()) break;
            result.cells[i] = run_cell(cfg, keys[i].dim, keys[i].epsilon, keys[i].repetition);
        }
    };

    if (cfg.parallelism <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        std::size_t workers = std::min(cfg.parallelism, keys.size());
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    // Aggregate per (d, epsilon) cell group, in config order.
    std::size_t idx = 0;
    for (std::size_t d : cfg.dimensions) {
        for (double e : cfg.epsilons) {
            double sum = 0.0;
            for (std::size_t r = 0; r < cfg.repetitions; ++r) {
                sum += result.cells[idx + r].final_regret;
            }
            const double reps = static_cast<double>(cfg.repetitions);
            double mean = sum / reps;
            double ss = 0.0;
            for (std::size_t r = 0; r < cfg.repetitions; ++r) {
                double dev = result.cells[idx + r].final_regret - mean;
                ss += dev * dev;
            }
            double stddev = cfg.repetitions > 1 ? std::sqrt(ss / (reps - 1.0)) : 0.0;
            result.aggregates.push_back(
                {d, e, mean, stddev, 1.96 * stddev / std::sqrt(reps), cfg.repetitions});
            idx += cfg.repetitions;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// CSV emission

inline std::string raw_csv(const SweepResult& res) {
    std::string out = "d,epsilon,delta,repetition,final_regret,seed_path\n";
    for (const CellResult& c : res.cells) {
        out += std::to_string(c.dim) + "," + detail::format_double(c.epsilon) + "," +
               detail::format_double(res.config.delta) + "," + std::to_string(c.repetition) +
               "," + detail::format_double(c.final_regret) + "," + c.seed_path + "\n";
    }
    return out;
}

inline std::string aggregate_csv(const SweepResult& res) {
    std::string out = "d,epsilon,mean_regret,stddev,ci95_halfwidth,repetitions\n";
    for (const CellAggregate& a : res.aggregates) {
        out += std::to_string(a.dim) + "," + detail::format_double(a.epsilon) + "," +
               detail::format_double(a.mean_regret) + "," + detail::format_double(a.stddev) +
               "," + detail::format_double(a.ci95_halfwidth) + "," +
               std::to_string(a.repetitions) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// SVG plot: mean final regret vs dimension (log x), one curve per epsilon
// with a shaded 95% band. Self-contained markup, fixed 800x500 viewport.

namespace detail {

inline std::string svg_coord(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", x);
    return buf;
}

inline std::string epsilon_label(double eps) {
    if (std::isinf(eps)) return "non-private";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", eps);
    return std::string("eps = ") + buf;
}

}  // namespace detail

inline std::string render_svg(const SweepResult& res) {
    constexpr double width = 800.0, height = 500.0;
    constexpr double margin_left = 70.0, margin_right = 150.0;
    constexpr double margin_top = 30.0, margin_bottom = 50.0;
    const double plot_w = width - margin_left - margin_right;
    const double plot_h = height - margin_top - margin_bottom;

    if (res.aggregates.empty()) throw std::invalid_argument("render_svg: empty sweep result");

    double d_lo = std::numeric_limits<double>::infinity(), d_hi = 0.0;
    double y_hi = 0.0;
    for (const CellAggregate& a : res.aggregates) {
        d_lo = std::min(d_lo, static_cast<double>(a.dim));
        d_hi = std::max(d_hi, static_cast<double>(a.dim));
        y_hi = std::max(y_hi, a.mean_regret + a.ci95_halfwidth);
    }
    if (y_hi <= 0.0) y_hi = 1.0;
    y_hi *= 1.05;
    const double lx_lo = std::log2(d_lo);
    const double lx_hi = d_hi > d_lo ? std::log2(d_hi) : lx_lo + 1.0;

    auto px = [&](double d) {
        return margin_left + (std::log2(d) - lx_lo) / (lx_hi - lx_lo) * plot_w;
    };
    auto py = [&](double y) { return margin_top + (1.0 - y / y_hi) * plot_h; };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
           "viewBox=\"0 0 800 500\">\n";
    svg += "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";

    // Axes.
    svg += "<line x1=\"" + detail::svg_coord(margin_left) + "\" y1=\"" +
           detail::svg_coord(margin_top + plot_h) + "\" x2=\"" +
           detail::svg_coord(margin_left + plot_w) + "\" y2=\"" +
           detail::svg_coord(margin_top + plot_h) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + detail::svg_coord(margin_left) + "\" y1=\"" +
           detail::svg_coord(margin_top) + "\" x2=\"" + detail::svg_coord(margin_left) +
           "\" y2=\"" + detail::svg_coord(margin_top + plot_h) + "\" stroke=\"black\"/>\n";

    // x ticks at powers of two inside the range.
    for (double tick = 1.0; tick <= d_hi * 1.0001; tick *= 2.0) {
        if (tick < d_lo * 0.9999) continue;
        double x = px(tick);
        svg += "<line x1=\"" + detail::svg_coord(x) + "\" y1=\"" +
               detail::svg_coord(margin_top + plot_h) + "\" x2=\"" + detail::svg_coord(x) +
               "\" y2=\"" + detail::svg_coord(margin_top + plot_h + 6.0) +
               "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + detail::svg_coord(x) + "\" y=\"" +
               detail::svg_coord(margin_top + plot_h + 22.0) +
               "\" font-size=\"12\" text-anchor=\"middle\">" +
               std::to_string(static_cast<long long>(tick)) + "</text>\n";
    }
    // y ticks: 5 evenly spaced levels.
    for (int k = 0; k <= 5; ++k) {
        double y = y_hi * k / 5.0;
        double yy = py(y);
        svg += "<line x1=\"" + detail::svg_coord(margin_left - 6.0) + "\" y1=\"" +
               detail::svg_coord(yy) + "\" x2=\"" + detail::svg_coord(margin_left) + "\" y2=\"" +
               detail::svg_coord(yy) + "\" stroke=\"black\"/>\n";
        char label[32];
        std::snprintf(label, sizeof(label), "%.0f", y);
        svg += "<text x=\"" + detail::svg_coord(margin_left - 10.0) + "\" y=\"" +
               detail::svg_coord(yy + 4.0) + "\" font-size=\"12\" text-anchor=\"end\">" + label +
               "</text>\n";
    }
    svg += "<text x=\"" + detail::svg_coord(margin_left + plot_w / 2.0) + "\" y=\"" +
           detail::svg_coord(height - 10.0) +
           "\" font-size=\"14\" text-anchor=\"middle\">dimension d (log scale)</text>\n";
    svg += "<text x=\"18\" y=\"" + detail::svg_coord(margin_top + plot_h / 2.0) +
           "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
           detail::svg_coord(margin_top + plot_h / 2.0) + ")\">mean final regret</text>\n";

    // One band + polyline per epsilon, in config order.
    for (std::size_t e = 0; e < res.config.epsilons.size(); ++e) {
        const double eps = res.config.epsilons[e];
        const char* color = palette[e % 6];

        std::vector<const CellAggregate*> curve;
        for (const CellAggregate& a : res.aggregates) {
            if (std::bit_cast<std::uint64_t>(a.epsilon) == std::bit_cast<std::uint64_t>(eps)) {
                curve.push_back(&a);
            }
        }
        if (curve.empty()) continue;

        if (curve.size() > 1) {
            std::string band = "<polygon points=\"";
            for (const CellAggregate* a : curve) {
                band += detail::svg_coord(px(static_cast<double>(a->dim))) + "," +
                        detail::svg_coord(py(a->mean_regret + a->ci95_halfwidth)) + " ";
            }
            for (auto it = curve.rbegin(); it != curve.rend(); ++it) {
                band += detail::svg_coord(px(static_cast<double>((*it)->dim))) + "," +
                        detail::svg_coord(py((*it)->mean_regret - (*it)->ci95_halfwidth)) + " ";
            }
            band += "\" fill=\"" + std::string(color) + "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
            svg += band;
        }

        std::string line = "<polyline points=\"";
        for (const CellAggregate* a : curve) {
            line += detail::svg_coord(px(static_cast<double>(a->dim))) + "," +
                    detail::svg_coord(py(a->mean_regret)) + " ";
        }
        line += "\" fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\"/>\n";
        svg += line;

        double ly = margin_top + 20.0 + 22.0 * static_cast<double>(e);
        svg += "<line x1=\"" + detail::svg_coord(margin_left + plot_w + 14.0) + "\" y1=\"" +
               detail::svg_coord(ly - 4.0) + "\" x2=\"" +
               detail::svg_coord(margin_left + plot_w + 42.0) + "\" y2=\"" +
               detail::svg_coord(ly - 4.0) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + detail::svg_coord(margin_left + plot_w + 48.0) + "\" y=\"" +
               detail::svg_coord(ly) + "\" font-size=\"12\">" + detail::epsilon_label(eps) +
               "</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

// ---------------------------------------------------------------------------
// Config file parsing: flat key = value lines, '#' comments, comma-separated
// lists. Unknown keys are rejected with the offending name.

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string token;
    std::istringstream in(s);
    while (std::getline(in, token, ',')) {
        token = trim(token);
        if (!token.empty()) out.push_back(token);
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& value) {
    if (value == "inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        double x = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw config_error(key + ": cannot parse '" + value + "' as a number");
    }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        unsigned long long x = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw config_error(key + ": cannot parse '" + value + "' as an unsigned integer");
    }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw config_error(key + ": cannot parse '" + value + "' as a boolean");
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));

        if (key == "dimensions") {
            cfg.dimensions.clear();
            for (const std::string& tok : detail::split_list(value)) {
                cfg.dimensions.push_back(detail::parse_u64(key, tok));
            }
        } else if (key == "epsilons") {
            cfg.epsilons.clear();
            for (const std::string& tok : detail::split_list(value)) {
                cfg.epsilons.push_back(detail::parse_double(key, tok));
            }
        } else if (key == "delta") {
            cfg.delta = detail::parse_double(key, value);
        } else if (key == "s_star") {
            cfg.s_star = detail::parse_u64(key, value);
        } else if (key == "K") {
            cfg.num_arms = detail::parse_u64(key, value);
        } else if (key == "T") {
            cfg.horizon = detail::parse_u64(key, value);
        } else if (key == "repetitions") {
            cfg.repetitions = detail::parse_u64(key, value);
        } else if (key == "root_seed") {
            cfg.root_seed = detail::parse_u64(key, value);
        } else if (key == "x_max") {
            cfg.x_max = detail::parse_double(key, value);
        } else if (key == "ar_phi") {
            cfg.ar_phi = detail::parse_double(key, value);
        } else if (key == "noise_sigma") {
            cfg.noise_sigma = detail::parse_double(key, value);
        } else if (key == "beta_magnitude") {
            cfg.beta_magnitude = detail::parse_double(key, value);
        } else if (key == "s") {
            cfg.policy_sparsity = detail::parse_u64(key, value);
        } else if (key == "M_max") {
            cfg.max_iterations = detail::parse_u64(key, value);
        } else if (key == "kappa_bar") {
            cfg.kappa_bar = detail::parse_double(key, value);
        } else if (key == "kappa_under") {
            cfg.kappa_under = detail::parse_double(key, value);
        } else if (key == "non_private") {
            cfg.non_private = detail::parse_bool(key, value);
        } else if (key == "parallel") {
            cfg.parallelism = detail::parse_u64(key, value);
        } else {
            throw config_error(key + ": unknown configuration key");
        }
    }
    detail::validate_config(cfg);
    return cfg;
}

}  // namespace fliphat
