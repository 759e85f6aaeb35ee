#pragma once

// Structural privacy accounting: every mechanism invocation is recorded with
// the half-open time-step interval of the data it consumed. Episodic
// forgetting means intervals must be pairwise disjoint, so the max per-user
// charge over the whole run is a single (epsilon, delta).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fliphat/budget.hpp"

namespace fliphat {

class composition_violation : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct LedgerEntry {
    std::string mechanism;
    std::uint64_t data_begin = 0;  ///< first time step consumed (inclusive)
    std::uint64_t data_end = 0;    ///< one past the last time step consumed
    double epsilon_charged = 0.0;
    double delta_charged = 0.0;
    std::size_t iteration_splits = 1;  ///< count of even per-iteration charges
};

class PrivacyLedger {
  public:
    /// Append an entry; insertion overlapping an existing interval is rejected.
    void record(LedgerEntry entry) {
        if (entry.data_end <= entry.data_begin) {
            throw std::invalid_argument("PrivacyLedger: empty data interval");
        }
        if (!(entry.epsilon_charged > 0.0)) {
            throw std::invalid_argument("PrivacyLedger: epsilon_charged must be > 0");
        }
        if (entry.delta_charged < 0.0 || entry.delta_charged >= 1.0) {
            throw std::invalid_argument("PrivacyLedger: delta_charged must lie in [0, 1)");
        }
        if (entry.iteration_splits < 1) {
            throw std::invalid_argument("PrivacyLedger: iteration_splits must be >= 1");
        }
        for (const LedgerEntry& e : entries_) {
            if (entry.data_begin < e.data_end && e.data_begin < entry.data_end) {
                throw composition_violation("PrivacyLedger: overlapping data interval for '" +
                                            entry.mechanism + "' and '" + e.mechanism + "'");
            }
        }
        check_split(entry);
        entries_.push_back(std::move(entry));
    }

    /// Total (epsilon, delta) charged against the datum at time t, or the
    /// zero budget if no mechanism touched it.
    PrivacyBudget per_user_budget(std::uint64_t t) const {
        for (const LedgerEntry& e : entries_) {
            if (e.data_begin <= t && t < e.data_end) {
                return PrivacyBudget(e.epsilon_charged, e.delta_charged);
            }
        }
        PrivacyBudget zero;
        zero.epsilon = 0.0;
        zero.delta = 0.0;
        return zero;
    }

    /// Largest charge over all time steps up to `horizon` (inclusive, 1-based).
    PrivacyBudget max_per_user_budget() const {
        double eps = 0.0;
        double del = 0.0;
        for (const LedgerEntry& e : entries_) {
            eps = std::max(eps, e.epsilon_charged);
            del = std::max(del, e.delta_charged);
        }
        PrivacyBudget out;
        out.epsilon = eps;
        out.delta = del;
        return out;
    }

    const std::vector<LedgerEntry>& entries() const { return entries_; }

  private:
    // The per-iteration split must recompose to the recorded charge:
    // splits * (charge / splits) == charge up to 1e-12 relative error.
    static void check_split(const LedgerEntry& entry) {
        const double k = static_cast<double>(entry.iteration_splits);
        double recomposed_eps = (entry.epsilon_charged / k) * k;
        if (std::abs(recomposed_eps - entry.epsilon_charged) >
            1e-12 * std::abs(entry.epsilon_charged)) {
            throw composition_violation("PrivacyLedger: iteration split does not recompose");
        }
    }

    std::vector<LedgerEntry> entries_;
};

}  // namespace fliphat
