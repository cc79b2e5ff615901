#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cgolab::cli {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0;
    double budget_seconds = 0;
};

// Runs the listed criteria (all when empty) and prints one PASS/FAIL line each to log.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& only = {}, std::ostream* log = nullptr);

constexpr int kCriteria = 12;

}  // namespace cgolab::cli
