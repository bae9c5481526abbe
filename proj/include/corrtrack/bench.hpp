#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corrtrack/correlation.hpp"

namespace corrtrack {

// One problem size for the wall-clock comparison.
struct BenchSize {
    int height = 0;
    int width = 0;
    int channels = 0;
    int radius = 5;
    int dilation = 1;
};

struct BenchRow {
    CorrOperator op = CorrOperator::local_correlation;
    BenchSize size;
    std::uint64_t flops = 0;      // analytic multiply-accumulates
    std::uint64_t params = 0;     // analytic parameter count
    std::uint64_t median_ns = 0;  // median wall time over all repeats
    std::uint64_t mem_bytes = 0;  // size of the produced score tensor
};

// Times one operator per size over `repeats` runs (>= 3) on deterministic
// inputs and reports the median.
std::vector<BenchRow> bench_operator(CorrOperator which,
                                     const std::vector<BenchSize>& sizes,
                                     int repeats);

// CSV with header
// operator,h,w,c,r,flops,params,median_ns,mem_bytes,ratio_flops,ratio_grid
// where ratio_flops = HW/(2R+1)^2 (non-local over local cost) and
// ratio_grid = HW/R^2, the coarser headline form of the same ratio.
std::string bench_csv(const std::vector<BenchRow>& rows);

const char* operator_name(CorrOperator op);

}  // namespace corrtrack
