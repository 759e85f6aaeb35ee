#pragma once

#include <stdexcept>

namespace fliphat {

/// Thrown when a mechanism is asked for a budget it cannot honor
/// (e.g. delta = 0 with positive sensitivity).
class unsupported_budget : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// The (epsilon, delta) pair threaded through every mechanism call.
struct PrivacyBudget {
    double epsilon = 1.0;
    double delta = 0.0;

    PrivacyBudget() = default;
    PrivacyBudget(double eps, double del) : epsilon(eps), delta(del) {
        if (!(epsilon > 0.0)) throw std::invalid_argument("PrivacyBudget: epsilon must be > 0");
        if (delta < 0.0 || delta >= 1.0) {
            throw std::invalid_argument("PrivacyBudget: delta must lie in [0, 1)");
        }
    }

    bool operator==(const PrivacyBudget&) const = default;
};

}  // namespace fliphat
