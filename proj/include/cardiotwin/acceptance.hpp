#pragma once

#include <functional>
#include <string>
#include <vector>

namespace cardiotwin {

/// One verification gate: a named check with a pass verdict and a one-line
/// metric summary (measured values next to their thresholds).
struct CriterionResult {
    int number = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

struct AcceptanceReport {
    std::vector<CriterionResult> results;

    bool all_passed() const {
        if (results.empty()) return false;
        for (const auto& r : results) {
            if (!r.passed) return false;
        }
        return true;
    }
};

using AcceptanceProgress = std::function<void(const CriterionResult&)>;

/// Runs the eight release gates in order (surrogate fidelity, gradient
/// correctness, solver order, limit cycle, parameter recovery, end-to-end
/// inverse, pump-trial direction, invariant suite). Seeds and tolerances are
/// pinned inside; a throwing criterion is reported as failed, never skipped.
/// `progress`, when set, receives each result as soon as it is known.
AcceptanceReport run_acceptance_suite(const AcceptanceProgress& progress = {});

std::string acceptance_to_json(const AcceptanceReport& report, int indent = 2);

}  // namespace cardiotwin
