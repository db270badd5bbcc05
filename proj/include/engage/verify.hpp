#ifndef ENGAGE_VERIFY_HPP
#define ENGAGE_VERIFY_HPP

#include <string>
#include <vector>

namespace engage::verify {

struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SuiteResult {
    std::string name;
    std::vector<PropertyResult> properties;

    bool passed() const {
        for (const auto& p : properties)
            if (!p.passed) return false;
        return true;
    }
};

// Self-contained property suites behind `engage verify`. The loss-oracle
// suite carries its own brute-force reimplementations so the checks stay
// independent of the library code paths they exercise.
SuiteResult run_grad_suite();
SuiteResult run_loss_oracle_suite();
SuiteResult run_splits_suite();
SuiteResult run_jensen_suite();

// which: grad | loss-oracle | splits | jensen | all
std::vector<SuiteResult> run_suites(const std::string& which);

} // namespace engage::verify

#endif
