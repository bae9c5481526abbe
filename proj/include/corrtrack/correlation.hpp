#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "corrtrack/tensor.hpp"

namespace corrtrack {

// Geometry of one local correlation window.
struct CorrParams {
    int radius = 5;    // R: max displacement steps, infinity norm
    int dilation = 2;  // D: pixel spacing between sampled displacements
    int level = 0;     // pyramid level the window lives on
};

// H x W x (2R+1)^2 match scores.  Entry k at position (x, y) holds the
// score for pixel offset (D*dx, D*dy) where k = (dy+R)*(2R+1) + (dx+R);
// displacements landing outside the grid stay exactly 0.
class CorrelationVolume {
public:
    CorrelationVolume() = default;
    CorrelationVolume(int height, int width, int radius, int dilation,
                      double fill = 0.0);

    int height() const { return height_; }
    int width() const { return width_; }
    int radius() const { return radius_; }
    int dilation() const { return dilation_; }
    int window() const { return 2 * radius_ + 1; }
    int entries_per_position() const { return window() * window(); }

    double at(int x, int y, int k) const { return values_[index(x, y, k)]; }
    double& at(int x, int y, int k) { return values_[index(x, y, k)]; }

    bool same_shape(const CorrelationVolume& other) const {
        return height_ == other.height_ && width_ == other.width_ &&
               radius_ == other.radius_ && dilation_ == other.dilation_;
    }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

private:
    std::size_t index(int x, int y, int k) const {
        return (static_cast<std::size_t>(y) * width_ + x) * entries_per_position() + k;
    }

    int height_ = 0;
    int width_ = 0;
    int radius_ = 0;
    int dilation_ = 1;
    std::vector<double> values_;
};

// Two-layer MLP applied per position to the displacement vector.
struct MlpParams {
    Matrix w1;               // C_inter x (2R+1)^2
    std::vector<double> b1;  // C_inter
    Matrix w2;               // C_out x (C_inter); C_out must match the feature map
    std::vector<double> b2;  // C_out
};

// FIFO of the most recent reference-frame pyramids (default capacity 5).
class FrameMemory {
public:
    explicit FrameMemory(int capacity = 5);

    // Appends one frame, evicting the oldest when over capacity.
    // All stored frames must share one pyramid shape.
    void push(const FeaturePyramid& frame);

    int size() const { return static_cast<int>(frames_.size()); }
    int capacity() const { return capacity_; }
    bool empty() const { return frames_.empty(); }
    const std::deque<FeaturePyramid>& frames() const { return frames_; }

private:
    int capacity_ = 5;
    std::deque<FeaturePyramid> frames_;
};

// Local correlation: vol(x, y, k) = <fq(:, y, x), fr(:, y+D*dy, x+D*dx)>.
CorrelationVolume spatial_local_correlation(const FeatureMap& fq,
                                            const FeatureMap& fr,
                                            const CorrParams& p);

struct CorrelationGrad {
    FeatureMap dfq;
    FeatureMap dfr;
};

// Adjoint of spatial_local_correlation w.r.t. both feature maps.
CorrelationGrad correlation_backward(const FeatureMap& fq, const FeatureMap& fr,
                                     const CorrParams& p,
                                     const CorrelationVolume& dvol);

// Residual fusion: out = f + MLP(vol) applied per position (ReLU hidden).
FeatureMap fuse_correlation(const FeatureMap& f, const CorrelationVolume& vol,
                            const MlpParams& mlp);

struct FuseGrad {
    FeatureMap df;
    CorrelationVolume dvol;
};

// Adjoint of fuse_correlation w.r.t. the feature map and the volume.
FuseGrad fuse_correlation_backward(const FeatureMap& f,
                                   const CorrelationVolume& vol,
                                   const MlpParams& mlp, const FeatureMap& dout);

// Top-down refinement over pyramid levels, finest first in `levels`:
// coarsest level passes through unchanged, then each finer level adds a
// 1x1-conv of the nearest-upsampled refined coarser level.  lateral[l]
// mixes the upsampled level l+1 before adding it to level l.
std::vector<FeatureMap> pyramid_propagate(const std::vector<FeatureMap>& levels,
                                          const std::vector<Conv1x1Params>& lateral);

// Correlation-weighted average of reference features:
// out(c, y, x) = sum_k vol(x,y,k)/(2R+1)^2 * fr(c, y+D*dy, x+D*dx).
FeatureMap aggregate_with_volume(const CorrelationVolume& vol,
                                 const FeatureMap& fr, const CorrParams& p);

// aggregate_with_volume on the correlation of (fq, fr).
FeatureMap temporal_aggregate(const FeatureMap& fq, const FeatureMap& fr,
                              const CorrParams& p);

struct TemporalGrad {
    FeatureMap dfq;
    FeatureMap dfr;
};

// Adjoint of temporal_aggregate w.r.t. both feature maps.
TemporalGrad temporal_aggregate_backward(const FeatureMap& fq,
                                         const FeatureMap& fr,
                                         const CorrParams& p,
                                         const FeatureMap& dout);

// Optional query/reference embeddings: match scores come from the projected
// maps while the aggregated values stay raw.
struct EmbeddingParams {
    Conv1x1Params query;
    Conv1x1Params reference;
};

FeatureMap temporal_aggregate_embedded(const FeatureMap& fq, const FeatureMap& fr,
                                       const CorrParams& p,
                                       const EmbeddingParams& emb);

// Residual mean over every stored frame, per pyramid level:
// out = fq + mean_over_frames(temporal_aggregate(fq, frame, p)).
FeaturePyramid temporal_aggregate_memory(const FeaturePyramid& fq,
                                         const FrameMemory& memory,
                                         const CorrParams& p);

// Dense (H*W) x (H*W) all-pairs correlation, row/col index i = y*W + x.
Matrix nonlocal_reference(const FeatureMap& f);

enum class CorrOperator { local_correlation, non_local };

struct FlopsInputs {
    int cin = 0;
    int cinter = 0;
    int frames = 0;
    int height = 0;
    int width = 0;
    int radius = 0;  // unused for non_local
};

struct FlopsReport {
    CorrOperator op = CorrOperator::local_correlation;
    std::uint64_t params = 0;
    std::uint64_t flops = 0;
    FlopsInputs inputs;
};

// Closed-form multiply-accumulate and parameter counts.
FlopsReport flops_local_correlation(int cin, int cinter, int frames, int height,
                                    int width, int radius);
FlopsReport flops_nonlocal(int cin, int cinter, int frames, int height,
                           int width);

}  // namespace corrtrack
