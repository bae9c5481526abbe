#include "corrtrack/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>

namespace corrtrack {

namespace {

// Keeps the timed kernels from being optimized away.
volatile double g_bench_sink = 0.0;

// Deterministic pseudo-texture; no RNG so fills are platform-stable.
FeatureMap bench_map(int channels, int height, int width, int salt) {
    FeatureMap map(channels, height, width);
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                map.at(c, y, x) =
                    ((c * 31 + y * 17 + x * 13 + salt * 7) % 101) / 101.0 - 0.5;
    return map;
}

std::uint64_t run_once(CorrOperator which, const BenchSize& s,
                       const FeatureMap& fq, const FeatureMap& fr) {
    const auto t0 = std::chrono::steady_clock::now();
    if (which == CorrOperator::local_correlation) {
        const CorrParams p{s.radius, s.dilation, 0};
        const CorrelationVolume vol = spatial_local_correlation(fq, fr, p);
        g_bench_sink = g_bench_sink + vol.values().front() + vol.values().back();
    } else {
        const Matrix m = nonlocal_reference(fq);
        g_bench_sink = g_bench_sink + m.m.front() + m.m.back();
    }
    const auto t1 = std::chrono::steady_clock::now();
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
}

}  // namespace

const char* operator_name(CorrOperator op) {
    return op == CorrOperator::local_correlation ? "local_correlation" : "non_local";
}

std::vector<BenchRow> bench_operator(CorrOperator which,
                                     const std::vector<BenchSize>& sizes,
                                     int repeats) {
    if (repeats < 3) throw ValueError("bench needs at least 3 repeats");
    if (sizes.empty()) throw ValueError("bench needs at least one size");
    std::vector<BenchRow> rows;
    rows.reserve(sizes.size());
    for (const BenchSize& s : sizes) {
        if (s.height < 1 || s.width < 1 || s.channels < 1)
            throw ValueError("bench size dims must be >= 1");
        if (s.radius < 0 || s.dilation < 1)
            throw ValueError("bench window must have radius >= 0, dilation >= 1");
        const FeatureMap fq = bench_map(s.channels, s.height, s.width, 1);
        const FeatureMap fr = bench_map(s.channels, s.height, s.width, 2);

        std::vector<std::uint64_t> times(repeats);
        for (int i = 0; i < repeats; ++i) times[i] = run_once(which, s, fq, fr);
        std::sort(times.begin(), times.end());
        const std::uint64_t median =
            repeats % 2 ? times[repeats / 2]
                        : (times[repeats / 2 - 1] + times[repeats / 2]) / 2;

        BenchRow row;
        row.op = which;
        row.size = s;
        const std::uint64_t hw = static_cast<std::uint64_t>(s.height) * s.width;
        if (which == CorrOperator::local_correlation) {
            const FlopsReport rep = flops_local_correlation(
                s.channels, s.channels, 1, s.height, s.width, s.radius);
            row.flops = rep.flops;
            row.params = rep.params;
            const std::uint64_t win2 = static_cast<std::uint64_t>(2 * s.radius + 1) *
                                       (2 * s.radius + 1);
            row.mem_bytes = hw * win2 * sizeof(double);
        } else {
            const FlopsReport rep =
                flops_nonlocal(s.channels, s.channels, 1, s.height, s.width);
            row.flops = rep.flops;
            row.params = rep.params;
            row.mem_bytes = hw * hw * sizeof(double);
        }
        row.median_ns = median;
        rows.push_back(row);
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::string out =
        "operator,h,w,c,r,flops,params,median_ns,mem_bytes,ratio_flops,ratio_grid\n";
    char line[256];
    for (const BenchRow& row : rows) {
        const BenchSize& s = row.size;
        const double hw = static_cast<double>(s.height) * s.width;
        const double win2 = static_cast<double>(2 * s.radius + 1) * (2 * s.radius + 1);
        const double ratio_flops = hw / win2;
        const double ratio_grid =
            s.radius > 0 ? hw / (static_cast<double>(s.radius) * s.radius) : 0.0;
        std::snprintf(line, sizeof(line), "%s,%d,%d,%d,%d,%llu,%llu,%llu,%llu,%.4f,%.4f\n",
                      operator_name(row.op), s.height, s.width, s.channels, s.radius,
                      static_cast<unsigned long long>(row.flops),
                      static_cast<unsigned long long>(row.params),
                      static_cast<unsigned long long>(row.median_ns),
                      static_cast<unsigned long long>(row.mem_bytes), ratio_flops,
                      ratio_grid);
        out += line;
    }
    return out;
}

}  // namespace corrtrack
