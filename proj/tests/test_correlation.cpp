#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "corrtrack/correlation.hpp"
#include "corrtrack/rng.hpp"
#include "oracles.hpp"

using corrtrack::CorrelationVolume;
using corrtrack::CorrParams;
using corrtrack::EmbeddingParams;
using corrtrack::FeatureMap;
using corrtrack::FeaturePyramid;
using corrtrack::FrameMemory;
using corrtrack::Matrix;
using corrtrack::MlpParams;
using corrtrack::Rng;
using corrtrack::ShapeError;
using corrtrack::ValueError;

namespace {

CorrParams params(int radius, int dilation) {
    CorrParams p;
    p.radius = radius;
    p.dilation = dilation;
    return p;
}

MlpParams random_mlp(Rng& rng, int entries, int hidden, int channels) {
    MlpParams mlp;
    mlp.w1 = Matrix(hidden, entries);
    mlp.w2 = Matrix(channels, hidden);
    for (double& v : mlp.w1.m) v = rng.uniform(-0.5, 0.5);
    for (double& v : mlp.w2.m) v = rng.uniform(-0.5, 0.5);
    mlp.b1.resize(hidden);
    mlp.b2.resize(channels);
    for (double& v : mlp.b1) v = rng.uniform(-0.2, 0.2);
    for (double& v : mlp.b2) v = rng.uniform(-0.2, 0.2);
    return mlp;
}

}  // namespace

TEST_CASE("correlation window indexing on a hand instance") {
    // Single channel, 2x2 grid, R=1, D=1.  fq all ones, fr = [[1,2],[3,4]].
    FeatureMap fq(1, 2, 2, std::vector<double>(4, 1.0));
    FeatureMap fr(1, 2, 2, {1.0, 2.0, 3.0, 4.0});

    const CorrelationVolume vol =
        corrtrack::spatial_local_correlation(fq, fr, params(1, 1));
    REQUIRE(vol.window() == 3);
    REQUIRE(vol.entries_per_position() == 9);

    // k = (dy+1)*3 + (dx+1); centre k=4 is displacement (0,0).
    CHECK(vol.at(0, 0, 4) == 1.0);
    CHECK(vol.at(1, 0, 4) == 2.0);
    CHECK(vol.at(0, 1, 4) == 3.0);
    CHECK(vol.at(1, 1, 4) == 4.0);
    // From (0,0), displacement (dx=1, dy=0) -> k=5 lands on fr(0,1)=2.
    CHECK(vol.at(0, 0, 5) == 2.0);
    // Displacement (dx=0, dy=1) -> k=7 lands on fr(1,0)=3.
    CHECK(vol.at(0, 0, 7) == 3.0);
    // Out-of-bounds displacements stay exactly zero.
    CHECK(vol.at(0, 0, 0) == 0.0);
    CHECK(vol.at(0, 0, 1) == 0.0);
    CHECK(vol.at(0, 0, 3) == 0.0);
    CHECK(vol.at(1, 1, 8) == 0.0);
}

TEST_CASE("correlation with multiple channels accumulates dot products") {
    FeatureMap fq(2, 1, 2);
    fq.at(0, 0, 0) = 2.0;
    fq.at(1, 0, 0) = -1.0;
    FeatureMap fr(2, 1, 2);
    fr.at(0, 0, 1) = 3.0;
    fr.at(1, 0, 1) = 5.0;
    const CorrelationVolume vol =
        corrtrack::spatial_local_correlation(fq, fr, params(1, 1));
    // (0,0) -> dx=+1: 2*3 + (-1)*5 = 1.
    CHECK(vol.at(0, 0, 5) == 1.0);
}

TEST_CASE("correlation dilation strides the sampled displacements") {
    Rng rng(11);
    const FeatureMap fq = oracles::random_map(rng, 2, 5, 5);
    const FeatureMap fr = oracles::random_map(rng, 2, 5, 5);
    const CorrelationVolume vol =
        corrtrack::spatial_local_correlation(fq, fr, params(1, 2));
    // From (2,2), k=5 is (dx=+1, dy=0) -> reference pixel (4,2) with D=2.
    double want = 0.0;
    for (int c = 0; c < 2; ++c) want += fq.at(c, 2, 2) * fr.at(c, 2, 4);
    CHECK(vol.at(2, 2, 5) == want);
    // From (2,2), dx=+1 with D=2 overshoots at x=4: k=5 there must be 0.
    CHECK(vol.at(4, 2, 5) == 0.0);
}

TEST_CASE("correlation rejects invalid arguments") {
    const FeatureMap a(1, 2, 2), b(1, 3, 2);
    CHECK_THROWS_AS(corrtrack::spatial_local_correlation(a, b, params(1, 1)),
                    ShapeError);
    CHECK_THROWS_AS(corrtrack::spatial_local_correlation(a, a, params(-1, 1)),
                    ValueError);
    CHECK_THROWS_AS(corrtrack::spatial_local_correlation(a, a, params(1, 0)),
                    ValueError);
}

TEST_CASE("correlation matches the brute-force oracle exactly") {
    Rng rng(101);
    for (int i = 0; i < 40; ++i) {
        const int h = rng.uniform_int(1, 8), w = rng.uniform_int(1, 8);
        const int c = rng.uniform_int(1, 4);
        const CorrParams p = params(rng.uniform_int(0, 3), rng.uniform_int(1, 2));
        const FeatureMap fq = oracles::random_map(rng, c, h, w);
        const FeatureMap fr = oracles::random_map(rng, c, h, w);
        const CorrelationVolume got = corrtrack::spatial_local_correlation(fq, fr, p);
        const CorrelationVolume want = oracles::brute_correlation(fq, fr, p);
        REQUIRE(got.values() == want.values());
    }
}

TEST_CASE("global cover: D=1 with a window spanning the grid equals the "
          "all-pairs reference") {
    Rng rng(202);
    for (int i = 0; i < 10; ++i) {
        const int h = rng.uniform_int(1, 5), w = rng.uniform_int(1, 5);
        const int c = rng.uniform_int(1, 3);
        const FeatureMap f = oracles::random_map(rng, c, h, w);
        const int r = std::max(h, w);
        const CorrelationVolume vol =
            corrtrack::spatial_local_correlation(f, f, params(r, 1));
        const Matrix dense = corrtrack::nonlocal_reference(f);
        const int win = 2 * r + 1;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int ry = 0; ry < h; ++ry)
                    for (int rx = 0; rx < w; ++rx) {
                        const int k = (ry - y + r) * win + (rx - x + r);
                        REQUIRE(vol.at(x, y, k) == dense(y * w + x, ry * w + rx));
                    }
    }
}

TEST_CASE("correlation adjoint matches central finite differences") {
    Rng rng(303);
    FeatureMap fq = oracles::random_map(rng, 2, 4, 3);
    FeatureMap fr = oracles::random_map(rng, 2, 4, 3);
    const CorrParams p = params(1, 1);

    // Scalar head: weighted sum of all volume entries.
    CorrelationVolume weights(4, 3, 1, 1);
    for (double& v : weights.values()) v = rng.uniform(-1.0, 1.0);

    const auto value = [&]() {
        const CorrelationVolume vol = corrtrack::spatial_local_correlation(fq, fr, p);
        double s = 0.0;
        for (std::size_t i = 0; i < vol.values().size(); ++i)
            s += vol.values()[i] * weights.values()[i];
        return s;
    };

    const corrtrack::CorrelationGrad grad =
        corrtrack::correlation_backward(fq, fr, p, weights);
    for (std::size_t i = 0; i < fq.data().size(); i += 3) {
        const double fd = oracles::central_diff(value, fq.data()[i]);
        CHECK(oracles::rel_err(fd, grad.dfq.data()[i]) < 1e-6);
    }
    for (std::size_t i = 0; i < fr.data().size(); i += 3) {
        const double fd = oracles::central_diff(value, fr.data()[i]);
        CHECK(oracles::rel_err(fd, grad.dfr.data()[i]) < 1e-6);
    }
}

TEST_CASE("fusion with zero MLP weights is the identity plus output bias") {
    Rng rng(404);
    const FeatureMap f = oracles::random_map(rng, 3, 3, 3);
    const CorrelationVolume vol =
        corrtrack::spatial_local_correlation(f, f, params(1, 1));
    MlpParams mlp;
    mlp.w1 = Matrix(2, 9);
    mlp.b1 = {0.0, 0.0};
    mlp.w2 = Matrix(3, 2);
    mlp.b2 = {0.25, -0.5, 1.0};
    const FeatureMap out = corrtrack::fuse_correlation(f, vol, mlp);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x)
                CHECK(out.at(c, y, x) == f.at(c, y, x) + mlp.b2[c]);
}

TEST_CASE("fusion applies the ReLU hidden layer") {
    // One position, one volume entry, one hidden unit, one channel.
    FeatureMap f(1, 1, 1, {2.0});
    CorrelationVolume vol(1, 1, 0, 1);
    MlpParams mlp;
    mlp.w1 = Matrix(1, 1);
    mlp.w1(0, 0) = 1.0;
    mlp.b1 = {0.0};
    mlp.w2 = Matrix(1, 1);
    mlp.w2(0, 0) = 3.0;
    mlp.b2 = {0.0};

    vol.at(0, 0, 0) = 1.5;  // hidden pre-activation 1.5 > 0
    CHECK(corrtrack::fuse_correlation(f, vol, mlp).at(0, 0, 0) == 2.0 + 4.5);
    vol.at(0, 0, 0) = -1.5;  // clamped by the ReLU
    CHECK(corrtrack::fuse_correlation(f, vol, mlp).at(0, 0, 0) == 2.0);
}

TEST_CASE("fusion adjoint matches central finite differences") {
    Rng rng(505);
    FeatureMap f = oracles::random_map(rng, 2, 3, 3);
    const FeatureMap other = oracles::random_map(rng, 2, 3, 3);
    const CorrParams p = params(1, 1);
    CorrelationVolume vol = corrtrack::spatial_local_correlation(f, other, p);
    const MlpParams mlp = random_mlp(rng, vol.entries_per_position(), 3, 2);

    FeatureMap head = oracles::random_map(rng, 2, 3, 3);
    const auto value = [&]() {
        const FeatureMap out = corrtrack::fuse_correlation(f, vol, mlp);
        double s = 0.0;
        for (std::size_t i = 0; i < out.data().size(); ++i)
            s += out.data()[i] * head.data()[i];
        return s;
    };

    const corrtrack::FuseGrad grad =
        corrtrack::fuse_correlation_backward(f, vol, mlp, head);
    for (std::size_t i = 0; i < f.data().size(); i += 2) {
        const double fd = oracles::central_diff(value, f.data()[i]);
        CHECK(oracles::rel_err(fd, grad.df.data()[i]) < 1e-6);
    }
    for (std::size_t i = 0; i < vol.values().size(); i += 5) {
        const double fd = oracles::central_diff(value, vol.values()[i]);
        CHECK(oracles::rel_err(fd, grad.dvol.values()[i]) < 1e-6);
    }
}

TEST_CASE("pyramid propagation refines top-down with upsampled laterals") {
    // Two levels; identity lateral, zero bias.  Finest level must receive
    // the upsampled coarser level on top of its own content.
    std::vector<FeatureMap> levels;
    levels.emplace_back(1, 4, 4, 0.0);
    levels.emplace_back(1, 2, 2, 1.0);
    std::vector<corrtrack::Conv1x1Params> lateral(1);
    lateral[0].weights = Matrix::identity(1);
    lateral[0].bias = {0.0};

    const std::vector<FeatureMap> out = corrtrack::pyramid_propagate(levels, lateral);
    REQUIRE(out.size() == 2u);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) CHECK(out[1].at(0, y, x) == 1.0);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) CHECK(out[0].at(0, y, x) == 1.0);
}

TEST_CASE("pyramid propagation is cumulative across three levels") {
    // Coarsest contributes through the middle level into the finest.
    std::vector<FeatureMap> levels;
    levels.emplace_back(1, 8, 8, 0.0);
    levels.emplace_back(1, 4, 4, 0.0);
    levels.emplace_back(1, 2, 2, 2.0);
    std::vector<corrtrack::Conv1x1Params> lateral(2);
    for (auto& l : lateral) {
        l.weights = Matrix::identity(1);
        l.bias = {0.0};
    }
    const std::vector<FeatureMap> out = corrtrack::pyramid_propagate(levels, lateral);
    CHECK(out[2].at(0, 0, 0) == 2.0);
    CHECK(out[1].at(0, 3, 3) == 2.0);  // refined middle = 0 + upsample(coarse)
    CHECK(out[0].at(0, 7, 7) == 2.0);  // refined finest sees the coarse signal
}

TEST_CASE("pyramid propagation demands exact doubling and one conv per step") {
    std::vector<FeatureMap> bad;
    bad.emplace_back(1, 6, 6);
    bad.emplace_back(1, 3, 3);  // 3 upsamples to 6: fine
    bad.emplace_back(1, 2, 2);  // 2 upsamples to 4 != 3: rejected
    std::vector<corrtrack::Conv1x1Params> lateral(2);
    for (auto& l : lateral) {
        l.weights = Matrix::identity(1);
        l.bias = {0.0};
    }
    CHECK_THROWS_AS(corrtrack::pyramid_propagate(bad, lateral), ShapeError);

    std::vector<FeatureMap> good;
    good.emplace_back(1, 4, 4);
    good.emplace_back(1, 2, 2);
    std::vector<corrtrack::Conv1x1Params> too_many(2);
    for (auto& l : too_many) {
        l.weights = Matrix::identity(1);
        l.bias = {0.0};
    }
    CHECK_THROWS_AS(corrtrack::pyramid_propagate(good, too_many), ShapeError);
}

TEST_CASE("aggregation matches the brute-force oracle exactly") {
    Rng rng(606);
    for (int i = 0; i < 30; ++i) {
        const int h = rng.uniform_int(1, 7), w = rng.uniform_int(1, 7);
        const int c = rng.uniform_int(1, 4);
        const CorrParams p = params(rng.uniform_int(0, 3), rng.uniform_int(1, 2));
        const FeatureMap fq = oracles::random_map(rng, c, h, w);
        const FeatureMap fr = oracles::random_map(rng, c, h, w);
        const FeatureMap got = corrtrack::temporal_aggregate(fq, fr, p);
        const FeatureMap want = oracles::brute_temporal_aggregate(fq, fr, p);
        REQUIRE(got.data() == want.data());
    }
}

TEST_CASE("aggregation of a constant reference is bounded by that constant") {
    // Every output is an average of window scores times fr values; with
    // fr == 1 and fq == 1 the centre row sums to in-bounds-count / win^2.
    FeatureMap fq(1, 3, 3, std::vector<double>(9, 1.0));
    FeatureMap fr(1, 3, 3, std::vector<double>(9, 1.0));
    const FeatureMap out = corrtrack::temporal_aggregate(fq, fr, params(1, 1));
    CHECK(out.at(0, 1, 1) == doctest::Approx(9.0 / 9.0));
    CHECK(out.at(0, 0, 0) == doctest::Approx(4.0 / 9.0));
}

TEST_CASE("temporal aggregation adjoint matches finite differences") {
    Rng rng(707);
    FeatureMap fq = oracles::random_map(rng, 2, 3, 4);
    FeatureMap fr = oracles::random_map(rng, 2, 3, 4);
    const CorrParams p = params(1, 1);
    FeatureMap head = oracles::random_map(rng, 2, 3, 4);

    const auto value = [&]() {
        const FeatureMap out = corrtrack::temporal_aggregate(fq, fr, p);
        double s = 0.0;
        for (std::size_t i = 0; i < out.data().size(); ++i)
            s += out.data()[i] * head.data()[i];
        return s;
    };

    const corrtrack::TemporalGrad grad =
        corrtrack::temporal_aggregate_backward(fq, fr, p, head);
    for (std::size_t i = 0; i < fq.data().size(); i += 3) {
        const double fd = oracles::central_diff(value, fq.data()[i]);
        CHECK(oracles::rel_err(fd, grad.dfq.data()[i]) < 1e-6);
    }
    for (std::size_t i = 0; i < fr.data().size(); i += 3) {
        const double fd = oracles::central_diff(value, fr.data()[i]);
        CHECK(oracles::rel_err(fd, grad.dfr.data()[i]) < 1e-6);
    }
}

TEST_CASE("embedded aggregation with identity projections matches the plain one") {
    Rng rng(808);
    const FeatureMap fq = oracles::random_map(rng, 2, 4, 4);
    const FeatureMap fr = oracles::random_map(rng, 2, 4, 4);
    const CorrParams p = params(1, 1);

    EmbeddingParams emb;
    emb.query.weights = Matrix::identity(2);
    emb.query.bias = {0.0, 0.0};
    emb.reference.weights = Matrix::identity(2);
    emb.reference.bias = {0.0, 0.0};

    const FeatureMap plain = corrtrack::temporal_aggregate(fq, fr, p);
    const FeatureMap embedded = corrtrack::temporal_aggregate_embedded(fq, fr, p, emb);
    CHECK(plain.data() == embedded.data());
}

TEST_CASE("embedded aggregation with a zero query projection yields zeros") {
    Rng rng(809);
    const FeatureMap fq = oracles::random_map(rng, 2, 3, 3);
    const FeatureMap fr = oracles::random_map(rng, 2, 3, 3);
    EmbeddingParams emb;
    emb.query.weights = Matrix(2, 2);  // all-zero weights
    emb.query.bias = {0.0, 0.0};
    emb.reference.weights = Matrix::identity(2);
    emb.reference.bias = {0.0, 0.0};
    const FeatureMap out =
        corrtrack::temporal_aggregate_embedded(fq, fr, params(1, 1), emb);
    for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("frame memory keeps the newest frames up to capacity") {
    FrameMemory mem(2);
    auto make = [](double fill) {
        std::vector<FeatureMap> ls;
        ls.emplace_back(1, 2, 2, fill);
        return FeaturePyramid(std::move(ls));
    };
    mem.push(make(1.0));
    mem.push(make(2.0));
    CHECK(mem.size() == 2);
    mem.push(make(3.0));
    CHECK(mem.size() == 2);
    CHECK(mem.frames().front().level(0).at(0, 0, 0) == 2.0);
    CHECK(mem.frames().back().level(0).at(0, 0, 0) == 3.0);

    std::vector<FeatureMap> other;
    other.emplace_back(1, 4, 4);
    CHECK_THROWS_AS(mem.push(FeaturePyramid(std::move(other))), ShapeError);
    CHECK_THROWS_AS(FrameMemory(0), ValueError);
}

TEST_CASE("memory aggregation is the residual mean over stored frames") {
    Rng rng(909);
    std::vector<FeatureMap> q_levels;
    q_levels.push_back(oracles::random_map(rng, 2, 4, 4));
    q_levels.push_back(oracles::random_map(rng, 2, 2, 2));
    const FeaturePyramid fq(std::move(q_levels));
    const CorrParams p = params(1, 1);

    std::vector<FeatureMap> r_levels;
    r_levels.push_back(oracles::random_map(rng, 2, 4, 4));
    r_levels.push_back(oracles::random_map(rng, 2, 2, 2));
    const FeaturePyramid frame(std::move(r_levels));

    FrameMemory mem(5);
    mem.push(frame);
    const FeaturePyramid once = corrtrack::temporal_aggregate_memory(fq, mem, p);
    for (int l = 0; l < 2; ++l) {
        const FeatureMap agg = corrtrack::temporal_aggregate(fq.level(l), frame.level(l), p);
        for (std::size_t i = 0; i < agg.data().size(); ++i) {
            CHECK(once.level(l).data()[i] ==
                  doctest::Approx(fq.level(l).data()[i] + agg.data()[i]).epsilon(1e-12));
        }
    }

    // Identical frames leave the mean unchanged.
    mem.push(frame);
    mem.push(frame);
    const FeaturePyramid thrice = corrtrack::temporal_aggregate_memory(fq, mem, p);
    for (int l = 0; l < 2; ++l)
        for (std::size_t i = 0; i < once.level(l).data().size(); ++i)
            CHECK(thrice.level(l).data()[i] ==
                  doctest::Approx(once.level(l).data()[i]).epsilon(1e-12));

    CHECK_THROWS_AS(corrtrack::temporal_aggregate_memory(fq, FrameMemory(3), p),
                    ValueError);
}

TEST_CASE("all-pairs reference is symmetric with squared norms on the diagonal") {
    Rng rng(111);
    const FeatureMap f = oracles::random_map(rng, 3, 3, 4);
    const Matrix dense = corrtrack::nonlocal_reference(f);
    REQUIRE(dense.rows == 12);
    REQUIRE(dense.cols == 12);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) CHECK(dense(i, j) == dense(j, i));
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) {
            double norm2 = 0.0;
            for (int c = 0; c < 3; ++c) norm2 += f.at(c, y, x) * f.at(c, y, x);
            CHECK(dense(y * 4 + x, y * 4 + x) == doctest::Approx(norm2).epsilon(1e-15));
        }
}

TEST_CASE("cost model follows the closed forms") {
    // Local: flops = C_inter*(2R+1)^2*H*W*L, params = 2*C_in*C_inter + (2R+1)^2*C_in.
    const corrtrack::FlopsReport local =
        corrtrack::flops_local_correlation(64, 64, 1, 152, 272, 5);
    CHECK(local.flops == 64ull * 121ull * 152ull * 272ull);
    CHECK(local.params == 64ull * 64ull * 2ull + 121ull * 64ull);
    CHECK(local.params == 15936ull);

    // Non-local: flops = C_inter*(HW)^2*L, params = 4*C_in*C_inter.
    const corrtrack::FlopsReport dense = corrtrack::flops_nonlocal(64, 64, 1, 152, 272);
    const std::uint64_t hw = 152ull * 272ull;
    CHECK(dense.flops == 64ull * hw * hw);
    CHECK(dense.params == 4ull * 64ull * 64ull);

    // Frame count multiplies the work.
    CHECK(corrtrack::flops_local_correlation(8, 8, 3, 16, 16, 2).flops ==
          3ull * corrtrack::flops_local_correlation(8, 8, 1, 16, 16, 2).flops);

    CHECK_THROWS_AS(corrtrack::flops_local_correlation(0, 8, 1, 4, 4, 1), ValueError);
    CHECK_THROWS_AS(corrtrack::flops_nonlocal(8, 8, 1, 0, 4), ValueError);
    CHECK_THROWS_AS(corrtrack::flops_local_correlation(8, 8, 1, 4, 4, -1), ValueError);
}
