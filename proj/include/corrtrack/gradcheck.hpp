#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace corrtrack {

struct GradCheckResult {
    std::string component;
    double max_rel_err = 0.0;
};

// Central finite differences against the analytic adjoints on seeded random
// instances, one result per differentiable component:
//   correlation, fusion, aggregation, balanced_bce, colorization.
// `flip_component` negates one analytic partial in that component — a
// negative control that must make the check fail.
std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed,
                                           const std::string& flip_component = "");

// Shared pass threshold on the relative error.
inline constexpr double kGradCheckTolerance = 1e-4;

}  // namespace corrtrack
