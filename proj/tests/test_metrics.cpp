#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "corrtrack/metrics.hpp"
#include "corrtrack/rng.hpp"
#include "oracles.hpp"

using corrtrack::Box;
using corrtrack::MotMetrics;
using corrtrack::MotRow;
using corrtrack::Rng;
using corrtrack::ValueError;

namespace {

MotRow row(int frame, long long id, Box box) {
    MotRow r;
    r.frame = frame;
    r.id = id;
    r.box = box;
    return r;
}

// The hand-counted reference scenario: one object over ten frames, two
// missed frames, one identity change after the gap.
void fixture(std::vector<MotRow>& gt, std::vector<MotRow>& hyp) {
    const Box box{0, 0, 10, 10};
    for (int f = 1; f <= 10; ++f) gt.push_back(row(f, 1, box));
    for (int f = 1; f <= 5; ++f) hyp.push_back(row(f, 1, box));
    for (int f = 8; f <= 10; ++f) hyp.push_back(row(f, 2, box));
}

}  // namespace

TEST_CASE("perfect tracking scores perfectly") {
    std::vector<MotRow> gt;
    for (int f = 1; f <= 5; ++f) {
        gt.push_back(row(f, 1, Box{0, 0, 10, 10}));
        gt.push_back(row(f, 2, Box{30, 0, 10, 10}));
    }
    const MotMetrics m = corrtrack::evaluate_clear_mot(gt, gt);
    CHECK(m.mota == 1.0);
    CHECK(m.idf1 == 1.0);
    CHECK(m.fp == 0);
    CHECK(m.fn == 0);
    CHECK(m.idsw == 0);
    CHECK(m.mt == 2);
    CHECK(m.ml == 0);
    CHECK(m.gt_total == 10);
}

TEST_CASE("an empty hypothesis misses everything") {
    std::vector<MotRow> gt;
    for (int f = 1; f <= 10; ++f) gt.push_back(row(f, 1, Box{0, 0, 10, 10}));
    const MotMetrics m = corrtrack::evaluate_clear_mot(gt, {});
    CHECK(m.mota == 0.0);
    CHECK(m.fn == 10);
    CHECK(m.fp == 0);
    CHECK(m.idsw == 0);
    CHECK(m.idf1 == 0.0);
    CHECK(m.ml == 1);
    CHECK(m.mt == 0);
}

TEST_CASE("empty ground truth") {
    CHECK(corrtrack::evaluate_clear_mot({}, {}).mota == 1.0);
    CHECK(corrtrack::idf1_score({}, {}) == 1.0);
    std::vector<MotRow> hyp{row(1, 1, Box{0, 0, 5, 5})};
    const MotMetrics m = corrtrack::evaluate_clear_mot({}, hyp);
    CHECK(m.mota == 0.0);
    CHECK(m.fp == 1);
    CHECK(m.idf1 == 0.0);
}

TEST_CASE("the ten-frame fixture reproduces the hand counts exactly") {
    std::vector<MotRow> gt, hyp;
    fixture(gt, hyp);
    const MotMetrics m = corrtrack::evaluate_clear_mot(gt, hyp, 0.5);
    CHECK(m.fn == 2);
    CHECK(m.fp == 0);
    CHECK(m.idsw == 1);
    CHECK(m.gt_total == 10);
    CHECK(m.mota == 1.0 - 3.0 / 10.0);
    CHECK(m.idf1 == 10.0 / 18.0);
    CHECK(m.mt == 1);  // matched 8 of 10 frames: exactly the 80% line
    CHECK(m.ml == 0);
}

TEST_CASE("match carry-over beats per-frame re-matching") {
    // Frame 2 offers a perfect new hypothesis, but the frame-1 match still
    // overlaps at the threshold, so continuity keeps it.
    std::vector<MotRow> gt{row(1, 1, Box{0, 0, 10, 10}), row(2, 1, Box{0, 0, 10, 10})};
    std::vector<MotRow> hyp{
        row(1, 1, Box{0, 0, 10, 10}),
        row(2, 1, Box{5, 0, 10, 10}),  // IoU 1/3 with gt: above the 0.3 threshold
        row(2, 3, Box{0, 0, 10, 10}),  // perfect overlap, arrives too late
    };
    const MotMetrics m = corrtrack::evaluate_clear_mot(gt, hyp, 0.3);
    CHECK(m.idsw == 0);
    CHECK(m.fp == 1);
    CHECK(m.fn == 0);
    CHECK(m.mota == 1.0 - 1.0 / 2.0);
}

TEST_CASE("identity switches are counted across gaps") {
    std::vector<MotRow> gt;
    for (int f = 1; f <= 10; ++f) gt.push_back(row(f, 7, Box{0, 0, 10, 10}));

    std::vector<MotRow> switched;
    for (int f = 1; f <= 3; ++f) switched.push_back(row(f, 1, Box{0, 0, 10, 10}));
    for (int f = 6; f <= 10; ++f) switched.push_back(row(f, 2, Box{0, 0, 10, 10}));
    CHECK(corrtrack::evaluate_clear_mot(gt, switched).idsw == 1);

    std::vector<MotRow> consistent;
    for (int f = 1; f <= 3; ++f) consistent.push_back(row(f, 1, Box{0, 0, 10, 10}));
    for (int f = 6; f <= 10; ++f) consistent.push_back(row(f, 1, Box{0, 0, 10, 10}));
    CHECK(corrtrack::evaluate_clear_mot(gt, consistent).idsw == 0);
}

TEST_CASE("exact ties go to the lowest ids") {
    // Two identical ground-truth boxes, one hypothesis: gt 1 wins the tie.
    std::vector<MotRow> gt{row(1, 1, Box{0, 0, 10, 10}), row(1, 2, Box{0, 0, 10, 10})};
    std::vector<MotRow> hyp{row(1, 5, Box{0, 0, 10, 10})};
    const MotMetrics two_gt = corrtrack::evaluate_clear_mot(gt, hyp);
    CHECK(two_gt.fn == 1);
    CHECK(two_gt.mt == 1);  // gt 1 fully tracked
    CHECK(two_gt.ml == 1);  // gt 2 never matched

    // One ground truth, two identical hypotheses: the lower hyp id wins, so
    // frame 2 (which only has that id) sees no switch.
    std::vector<MotRow> gt2{row(1, 1, Box{0, 0, 10, 10}), row(2, 1, Box{0, 0, 10, 10})};
    std::vector<MotRow> hyp2{row(1, 4, Box{0, 0, 10, 10}), row(1, 9, Box{0, 0, 10, 10}),
                             row(2, 4, Box{0, 0, 10, 10})};
    const MotMetrics m2 = corrtrack::evaluate_clear_mot(gt2, hyp2);
    CHECK(m2.idsw == 0);
    CHECK(m2.fp == 1);
}

TEST_CASE("a match exactly at the IoU threshold counts") {
    std::vector<MotRow> gt{row(1, 1, Box{0, 0, 10, 10})};
    std::vector<MotRow> hyp{row(1, 1, Box{0, 0, 10, 5})};  // IoU exactly 0.5
    const MotMetrics m = corrtrack::evaluate_clear_mot(gt, hyp, 0.5);
    CHECK(m.fn == 0);
    CHECK(m.fp == 0);
}

TEST_CASE("a spurious detection costs exactly one count") {
    std::vector<MotRow> gt, hyp;
    fixture(gt, hyp);
    const MotMetrics before = corrtrack::evaluate_clear_mot(gt, hyp);

    hyp.push_back(row(3, 9, Box{500, 500, 10, 10}));
    const MotMetrics after = corrtrack::evaluate_clear_mot(gt, hyp);
    CHECK(after.fp == before.fp + 1);
    CHECK(after.fn == before.fn);
    CHECK(after.idsw == before.idsw);
    // The published invariant: mota is exactly this expression of the counts.
    CHECK(after.mota ==
          1.0 - static_cast<double>(after.fp + after.fn + after.idsw) /
                    static_cast<double>(after.gt_total));
}

TEST_CASE("agrees with the exhaustive evaluator on random instances") {
    Rng rng(555);
    for (int trial = 0; trial < 100; ++trial) {
        const oracles::RandomMotInstance inst = oracles::random_mot_instance(rng);
        const MotMetrics got = corrtrack::evaluate_clear_mot(inst.gt, inst.hyp, 0.5);
        const oracles::BruteMot want = oracles::brute_clear_mot(inst.gt, inst.hyp, 0.5);
        REQUIRE(got.fp == want.fp);
        REQUIRE(got.fn == want.fn);
        REQUIRE(got.idsw == want.idsw);
        REQUIRE(got.gt_total == want.gt_total);
        REQUIRE(got.mt == want.mt);
        REQUIRE(got.ml == want.ml);
        REQUIRE(got.mota == want.mota);
        REQUIRE(got.idf1 == want.idf1);
    }
}

TEST_CASE("metrics are invariant under relabeling hypothesis ids") {
    Rng rng(556);
    for (int trial = 0; trial < 30; ++trial) {
        const oracles::RandomMotInstance inst = oracles::random_mot_instance(rng);
        const MotMetrics base = corrtrack::evaluate_clear_mot(inst.gt, inst.hyp, 0.5);

        // An order-reversing bijection exercises the within-frame reordering.
        std::vector<MotRow> relabeled = inst.hyp;
        for (MotRow& r : relabeled) r.id = 1000 - r.id * 3;
        const MotMetrics moved = corrtrack::evaluate_clear_mot(inst.gt, relabeled, 0.5);
        CHECK(base.fp == moved.fp);
        CHECK(base.fn == moved.fn);
        CHECK(base.idsw == moved.idsw);
        CHECK(base.mt == moved.mt);
        CHECK(base.ml == moved.ml);
        CHECK(base.mota == moved.mota);
        CHECK(base.idf1 == moved.idf1);
    }
}

TEST_CASE("idf1 matches the exhaustive identity matching") {
    Rng rng(557);
    for (int trial = 0; trial < 50; ++trial) {
        const oracles::RandomMotInstance inst = oracles::random_mot_instance(rng);
        const double got = corrtrack::idf1_score(inst.gt, inst.hyp, 0.5);
        const double want = oracles::brute_idf1(inst.gt, inst.hyp, 0.5);
        REQUIRE(got == want);
    }
}

TEST_CASE("threshold is validated") {
    CHECK_THROWS_AS(corrtrack::evaluate_clear_mot({}, {}, 0.0), ValueError);
    CHECK_THROWS_AS(corrtrack::evaluate_clear_mot({}, {}, 1.5), ValueError);
    CHECK_THROWS_AS(corrtrack::idf1_score({}, {}, -0.5), ValueError);
}

TEST_CASE("csv output carries the fixed column order") {
    std::vector<MotRow> gt, hyp;
    fixture(gt, hyp);
    const MotMetrics m = corrtrack::evaluate_clear_mot(gt, hyp);
    const std::string csv = corrtrack::metrics_to_csv(m);
    CHECK(csv.substr(0, 31) == "MOTA,IDF1,MT,ML,FP,FN,IDSW\n0.70");
    CHECK(csv.back() == '\n');
}

TEST_CASE("json output mirrors the metric fields") {
    std::vector<MotRow> gt, hyp;
    fixture(gt, hyp);
    const MotMetrics m = corrtrack::evaluate_clear_mot(gt, hyp);
    const nlohmann::json parsed = nlohmann::json::parse(corrtrack::metrics_to_json(m, "seq01"));
    CHECK(parsed["summary"]["mota"].get<double>() == m.mota);
    CHECK(parsed["summary"]["fn"].get<long long>() == 2);
    CHECK(parsed["sequences"][0]["name"].get<std::string>() == "seq01");
    CHECK(parsed["sequences"][0]["idsw"].get<long long>() == 1);
}
