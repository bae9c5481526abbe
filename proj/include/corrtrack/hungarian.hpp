#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "corrtrack/errors.hpp"

namespace corrtrack {

// Rectangular cost matrix with an optional admissibility mask.
// An empty mask means every pair is allowed.
struct CostMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> cost;               // row-major
    std::vector<std::uint8_t> admissible;   // row-major, 0/1

    CostMatrix() = default;
    CostMatrix(int rows_, int cols_, double fill = 0.0);

    double cost_at(int r, int c) const { return cost[static_cast<std::size_t>(r) * cols + c]; }
    double& cost_at(int r, int c) { return cost[static_cast<std::size_t>(r) * cols + c]; }
    bool admissible_at(int r, int c) const {
        return admissible.empty() || admissible[static_cast<std::size_t>(r) * cols + c] != 0;
    }
    void set_admissible(int r, int c, bool ok);
};

struct Assignment {
    std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
    std::vector<int> unmatched_rows;
    std::vector<int> unmatched_cols;
    double total_cost = 0.0;
};

// Minimum-cost assignment over the admissible pairs, maximizing the number
// of matched pairs first.  O(n^3) shortest-augmenting-path implementation.
Assignment hungarian_solve(const CostMatrix& m);

}  // namespace corrtrack
