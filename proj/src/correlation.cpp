#include "corrtrack/correlation.hpp"

#include <string>

namespace corrtrack {

namespace {

void check_corr_params(const CorrParams& p) {
    if (p.radius < 0) throw ValueError("correlation radius must be >= 0");
    if (p.dilation < 1) throw ValueError("correlation dilation must be >= 1");
    if (p.level < 0) throw ValueError("pyramid level must be >= 0");
}

void check_same_shape(const FeatureMap& fq, const FeatureMap& fr) {
    if (!fq.same_shape(fr)) {
        throw ShapeError("query and reference maps must share one shape");
    }
}

void check_mlp(const MlpParams& mlp, int entries, int channels) {
    if (mlp.w1.cols != entries) {
        throw ShapeError("fusion MLP first layer expects " + std::to_string(mlp.w1.cols) +
                         " inputs, volume has " + std::to_string(entries));
    }
    if (static_cast<int>(mlp.b1.size()) != mlp.w1.rows) {
        throw ShapeError("fusion MLP hidden bias size mismatch");
    }
    if (mlp.w2.cols != mlp.w1.rows) {
        throw ShapeError("fusion MLP layer widths do not chain");
    }
    if (mlp.w2.rows != channels || static_cast<int>(mlp.b2.size()) != channels) {
        throw ShapeError("fusion MLP output width must match the feature channels");
    }
}

}  // namespace

CorrelationVolume::CorrelationVolume(int height, int width, int radius,
                                     int dilation, double fill)
    : height_(height), width_(width), radius_(radius), dilation_(dilation) {
    if (height < 1 || width < 1) throw ShapeError("volume dims must be positive");
    if (radius < 0) throw ValueError("correlation radius must be >= 0");
    if (dilation < 1) throw ValueError("correlation dilation must be >= 1");
    values_.assign(static_cast<std::size_t>(height) * width * entries_per_position(),
                   fill);
}

FrameMemory::FrameMemory(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw ValueError("frame memory capacity must be >= 1");
}

void FrameMemory::push(const FeaturePyramid& frame) {
    if (frame.num_levels() == 0) throw ShapeError("cannot store an empty pyramid");
    if (!frames_.empty() && !frames_.front().same_shape(frame)) {
        throw ShapeError("frame shape differs from the stored frames");
    }
    frames_.push_back(frame);
    if (static_cast<int>(frames_.size()) > capacity_) frames_.pop_front();
}

CorrelationVolume spatial_local_correlation(const FeatureMap& fq,
                                            const FeatureMap& fr,
                                            const CorrParams& p) {
    check_corr_params(p);
    check_same_shape(fq, fr);
    const int h = fq.height(), w = fq.width(), c = fq.channels();
    const int r = p.radius, d = p.dilation, win = 2 * r + 1;
    CorrelationVolume vol(h, w, r, d);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int dy = -r; dy <= r; ++dy) {
                const int ry = y + d * dy;
                if (ry < 0 || ry >= h) continue;  // out of bounds stays 0
                for (int dx = -r; dx <= r; ++dx) {
                    const int rx = x + d * dx;
                    if (rx < 0 || rx >= w) continue;
                    double acc = 0.0;
                    for (int ch = 0; ch < c; ++ch)
                        acc += fq.at(ch, y, x) * fr.at(ch, ry, rx);
                    vol.at(x, y, (dy + r) * win + (dx + r)) = acc;
                }
            }
        }
    }
    return vol;
}

CorrelationGrad correlation_backward(const FeatureMap& fq, const FeatureMap& fr,
                                     const CorrParams& p,
                                     const CorrelationVolume& dvol) {
    check_corr_params(p);
    check_same_shape(fq, fr);
    const int h = fq.height(), w = fq.width(), c = fq.channels();
    const int r = p.radius, d = p.dilation, win = 2 * r + 1;
    if (dvol.height() != h || dvol.width() != w || dvol.radius() != r ||
        dvol.dilation() != d) {
        throw ShapeError("volume gradient shape does not match the inputs");
    }
    CorrelationGrad g{FeatureMap(c, h, w, 0.0), FeatureMap(c, h, w, 0.0)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int dy = -r; dy <= r; ++dy) {
                const int ry = y + d * dy;
                if (ry < 0 || ry >= h) continue;
                for (int dx = -r; dx <= r; ++dx) {
                    const int rx = x + d * dx;
                    if (rx < 0 || rx >= w) continue;
                    const double gv = dvol.at(x, y, (dy + r) * win + (dx + r));
                    if (gv == 0.0) continue;
                    for (int ch = 0; ch < c; ++ch) {
                        g.dfq.at(ch, y, x) += gv * fr.at(ch, ry, rx);
                        g.dfr.at(ch, ry, rx) += gv * fq.at(ch, y, x);
                    }
                }
            }
        }
    }
    return g;
}

FeatureMap fuse_correlation(const FeatureMap& f, const CorrelationVolume& vol,
                            const MlpParams& mlp) {
    if (vol.height() != f.height() || vol.width() != f.width()) {
        throw ShapeError("volume grid does not match the feature map");
    }
    const int entries = vol.entries_per_position();
    check_mlp(mlp, entries, f.channels());
    const int hidden = mlp.w1.rows;

    FeatureMap out = f;
    std::vector<double> h(hidden);
    for (int y = 0; y < f.height(); ++y) {
        for (int x = 0; x < f.width(); ++x) {
            for (int j = 0; j < hidden; ++j) {
                double acc = mlp.b1[j];
                for (int k = 0; k < entries; ++k) acc += mlp.w1(j, k) * vol.at(x, y, k);
                h[j] = acc > 0.0 ? acc : 0.0;
            }
            for (int c = 0; c < f.channels(); ++c) {
                double acc = mlp.b2[c];
                for (int j = 0; j < hidden; ++j) acc += mlp.w2(c, j) * h[j];
                out.at(c, y, x) += acc;
            }
        }
    }
    return out;
}

FuseGrad fuse_correlation_backward(const FeatureMap& f,
                                   const CorrelationVolume& vol,
                                   const MlpParams& mlp, const FeatureMap& dout) {
    if (vol.height() != f.height() || vol.width() != f.width()) {
        throw ShapeError("volume grid does not match the feature map");
    }
    if (!dout.same_shape(f)) {
        throw ShapeError("output gradient shape does not match the feature map");
    }
    const int entries = vol.entries_per_position();
    check_mlp(mlp, entries, f.channels());
    const int hidden = mlp.w1.rows;

    FuseGrad g{dout, CorrelationVolume(vol.height(), vol.width(), vol.radius(),
                                       vol.dilation(), 0.0)};
    std::vector<double> pre(hidden), dh(hidden);
    for (int y = 0; y < f.height(); ++y) {
        for (int x = 0; x < f.width(); ++x) {
            for (int j = 0; j < hidden; ++j) {
                double acc = mlp.b1[j];
                for (int k = 0; k < entries; ++k) acc += mlp.w1(j, k) * vol.at(x, y, k);
                pre[j] = acc;
            }
            for (int j = 0; j < hidden; ++j) {
                double acc = 0.0;
                for (int c = 0; c < f.channels(); ++c)
                    acc += mlp.w2(c, j) * dout.at(c, y, x);
                dh[j] = pre[j] > 0.0 ? acc : 0.0;  // ReLU kills the rest
            }
            for (int k = 0; k < entries; ++k) {
                double acc = 0.0;
                for (int j = 0; j < hidden; ++j) acc += mlp.w1(j, k) * dh[j];
                g.dvol.at(x, y, k) = acc;
            }
        }
    }
    return g;
}

std::vector<FeatureMap> pyramid_propagate(const std::vector<FeatureMap>& levels,
                                          const std::vector<Conv1x1Params>& lateral) {
    if (levels.empty()) throw ShapeError("pyramid propagation needs levels");
    if (lateral.size() + 1 != levels.size()) {
        throw ShapeError("need exactly one lateral conv per level transition");
    }
    std::vector<FeatureMap> out = levels;
    // Top-down: each refined coarser level feeds the next transition.
    for (int l = static_cast<int>(levels.size()) - 2; l >= 0; --l) {
        const FeatureMap up = upsample_nearest2x(out[l + 1]);
        if (up.height() != levels[l].height() || up.width() != levels[l].width()) {
            throw ShapeError("level " + std::to_string(l + 1) + " upsamples to " +
                             std::to_string(up.height()) + "x" + std::to_string(up.width()) +
                             ", level " + std::to_string(l) + " is " +
                             std::to_string(levels[l].height()) + "x" +
                             std::to_string(levels[l].width()));
        }
        const FeatureMap mixed = conv1x1(up, lateral[l]);
        if (mixed.channels() != levels[l].channels()) {
            throw ShapeError("lateral conv " + std::to_string(l) +
                             " output channels do not match the finer level");
        }
        for (std::size_t i = 0; i < out[l].data().size(); ++i)
            out[l].data()[i] = mixed.data()[i] + levels[l].data()[i];
    }
    return out;
}

FeatureMap aggregate_with_volume(const CorrelationVolume& vol,
                                 const FeatureMap& fr, const CorrParams& p) {
    check_corr_params(p);
    const int h = fr.height(), w = fr.width(), c = fr.channels();
    const int r = p.radius, d = p.dilation, win = 2 * r + 1;
    if (vol.height() != h || vol.width() != w || vol.radius() != r ||
        vol.dilation() != d) {
        throw ShapeError("volume shape does not match the reference map");
    }
    const double norm = static_cast<double>(win) * win;
    FeatureMap out(c, h, w, 0.0);
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int k = 0; k < win * win; ++k) {
                    const int ry = y + d * (k / win - r);
                    const int rx = x + d * (k % win - r);
                    if (ry < 0 || ry >= h || rx < 0 || rx >= w) continue;
                    acc += vol.at(x, y, k) / norm * fr.at(ch, ry, rx);
                }
                out.at(ch, y, x) = acc;
            }
        }
    }
    return out;
}

FeatureMap temporal_aggregate(const FeatureMap& fq, const FeatureMap& fr,
                              const CorrParams& p) {
    return aggregate_with_volume(spatial_local_correlation(fq, fr, p), fr, p);
}

TemporalGrad temporal_aggregate_backward(const FeatureMap& fq,
                                         const FeatureMap& fr,
                                         const CorrParams& p,
                                         const FeatureMap& dout) {
    check_corr_params(p);
    check_same_shape(fq, fr);
    if (!dout.same_shape(fq)) {
        throw ShapeError("output gradient shape does not match the inputs");
    }
    const int h = fq.height(), w = fq.width(), c = fq.channels();
    const int r = p.radius, d = p.dilation, win = 2 * r + 1;
    const double norm = static_cast<double>(win) * win;

    const CorrelationVolume vol = spatial_local_correlation(fq, fr, p);

    // Volume-side chain: d out / d vol(x,y,k) = fr(:, disp) . dout(:, x, y) / K.
    CorrelationVolume dvol(h, w, r, d, 0.0);
    TemporalGrad g{FeatureMap(c, h, w, 0.0), FeatureMap(c, h, w, 0.0)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int k = 0; k < win * win; ++k) {
                const int ry = y + d * (k / win - r);
                const int rx = x + d * (k % win - r);
                if (ry < 0 || ry >= h || rx < 0 || rx >= w) continue;
                double acc = 0.0;
                for (int ch = 0; ch < c; ++ch)
                    acc += fr.at(ch, ry, rx) * dout.at(ch, y, x);
                dvol.at(x, y, k) = acc / norm;
                // Value-side chain: fr also appears as the averaged payload.
                const double wgt = vol.at(x, y, k) / norm;
                for (int ch = 0; ch < c; ++ch)
                    g.dfr.at(ch, ry, rx) += wgt * dout.at(ch, y, x);
            }
        }
    }
    const CorrelationGrad cg = correlation_backward(fq, fr, p, dvol);
    for (std::size_t i = 0; i < g.dfq.data().size(); ++i) {
        g.dfq.data()[i] = cg.dfq.data()[i];
        g.dfr.data()[i] += cg.dfr.data()[i];
    }
    return g;
}

FeatureMap temporal_aggregate_embedded(const FeatureMap& fq, const FeatureMap& fr,
                                       const CorrParams& p,
                                       const EmbeddingParams& emb) {
    const FeatureMap q = conv1x1(fq, emb.query);
    const FeatureMap r = conv1x1(fr, emb.reference);
    return aggregate_with_volume(spatial_local_correlation(q, r, p), fr, p);
}

FeaturePyramid temporal_aggregate_memory(const FeaturePyramid& fq,
                                         const FrameMemory& memory,
                                         const CorrParams& p) {
    if (memory.empty()) throw ValueError("frame memory is empty");
    if (!memory.frames().front().same_shape(fq)) {
        throw ShapeError("query pyramid shape does not match the stored frames");
    }
    const double n = static_cast<double>(memory.size());
    std::vector<FeatureMap> out;
    out.reserve(fq.num_levels());
    for (int l = 0; l < fq.num_levels(); ++l) {
        const FeatureMap& base = fq.level(l);
        FeatureMap acc(base.channels(), base.height(), base.width(), 0.0);
        for (const FeaturePyramid& frame : memory.frames()) {
            const FeatureMap agg = temporal_aggregate(base, frame.level(l), p);
            for (std::size_t i = 0; i < acc.data().size(); ++i)
                acc.data()[i] += agg.data()[i];
        }
        FeatureMap level = base;
        for (std::size_t i = 0; i < level.data().size(); ++i)
            level.data()[i] += acc.data()[i] / n;
        out.push_back(std::move(level));
    }
    return FeaturePyramid(std::move(out));
}

Matrix nonlocal_reference(const FeatureMap& f) {
    const int h = f.height(), w = f.width(), c = f.channels();
    const int n = h * w;
    Matrix out(n, n, 0.0);
    for (int i = 0; i < n; ++i) {
        const int yi = i / w, xi = i % w;
        for (int j = 0; j < n; ++j) {
            const int yj = j / w, xj = j % w;
            double acc = 0.0;
            for (int ch = 0; ch < c; ++ch) acc += f.at(ch, yi, xi) * f.at(ch, yj, xj);
            out(i, j) = acc;
        }
    }
    return out;
}

namespace {

void check_flops_args(int cin, int cinter, int frames, int height, int width) {
    if (cin < 1 || cinter < 1 || frames < 1 || height < 1 || width < 1) {
        throw ValueError("flops inputs must all be >= 1");
    }
}

}  // namespace

FlopsReport flops_local_correlation(int cin, int cinter, int frames, int height,
                                    int width, int radius) {
    check_flops_args(cin, cinter, frames, height, width);
    if (radius < 0) throw ValueError("flops radius must be >= 0");
    const std::uint64_t win2 = static_cast<std::uint64_t>(2 * radius + 1) *
                               static_cast<std::uint64_t>(2 * radius + 1);
    FlopsReport rep;
    rep.op = CorrOperator::local_correlation;
    rep.inputs = {cin, cinter, frames, height, width, radius};
    rep.params = static_cast<std::uint64_t>(cin) * cinter * 2 + win2 * cin;
    rep.flops = static_cast<std::uint64_t>(cinter) * win2 * height * width * frames;
    return rep;
}

FlopsReport flops_nonlocal(int cin, int cinter, int frames, int height, int width) {
    check_flops_args(cin, cinter, frames, height, width);
    const std::uint64_t hw = static_cast<std::uint64_t>(height) * width;
    FlopsReport rep;
    rep.op = CorrOperator::non_local;
    rep.inputs = {cin, cinter, frames, height, width, 0};
    rep.params = static_cast<std::uint64_t>(cin) * cinter * 4;
    rep.flops = static_cast<std::uint64_t>(cinter) * hw * hw * frames;
    return rep;
}

}  // namespace corrtrack
