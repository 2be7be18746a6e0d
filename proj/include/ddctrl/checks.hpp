#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ddctrl {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Property suites run by `ddctrl check`: behavior dimension and span
/// membership, projector identities, QP and l1 optimality conditions, and
/// noise-free consistency of every method on the benchmark.
std::vector<CheckResult> run_property_checks(std::uint64_t seed = 7);

}  // namespace ddctrl
