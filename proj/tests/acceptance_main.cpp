// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. The same checks back the CLI `verify --suite acceptance`.

#include <cstdio>

#include "fliphat/suites.hpp"

int main() {
    std::vector<fliphat::CheckResult> results = fliphat::run_acceptance_suite();
    bool all_ok = true;
    for (const fliphat::CheckResult& r : results) {
        std::printf("[%s] %s  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        std::fflush(stdout);
        all_ok = all_ok && r.passed;
    }
    return all_ok ? 0 : 1;
}
