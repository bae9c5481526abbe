#pragma once

#include <cstddef>
#include <vector>

#include "corrtrack/errors.hpp"

namespace corrtrack {

// Dense channel-major feature map: index(c, y, x) = (c*H + y)*W + x.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int channels, int height, int width, double fill = 0.0);
    FeatureMap(int channels, int height, int width, std::vector<double> data);

    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double at(int c, int y, int x) const { return data_[index(c, y, x)]; }
    double& at(int c, int y, int x) { return data_[index(c, y, x)]; }

    // Channel vector at one position; bounds-checked.
    std::vector<double> feature_at(int x, int y) const;

    bool same_shape(const FeatureMap& other) const {
        return channels_ == other.channels_ && height_ == other.height_ &&
               width_ == other.width_;
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

private:
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

// Small row-major dense matrix for 1x1-conv / MLP weights.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> m;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0);
    static Matrix identity(int n);

    double operator()(int r, int c) const { return m[static_cast<std::size_t>(r) * cols + c]; }
    double& operator()(int r, int c) { return m[static_cast<std::size_t>(r) * cols + c]; }
};

// Weights of one pointwise (1x1) convolution.
struct Conv1x1Params {
    Matrix weights;             // C_out x C_in
    std::vector<double> bias;   // C_out
};

// Duplicates every pixel into a 2x2 block.
FeatureMap upsample_nearest2x(const FeatureMap& map);

// Pointwise channel mix: out(o,y,x) = bias[o] + sum_c W(o,c) * in(c,y,x).
FeatureMap conv1x1(const FeatureMap& map, const Conv1x1Params& params);

// Ordered finest (level 0) to coarsest; every coarser level halves the
// spatial dims of the previous one, rounding up.
class FeaturePyramid {
public:
    FeaturePyramid() = default;
    explicit FeaturePyramid(std::vector<FeatureMap> levels);

    int num_levels() const { return static_cast<int>(levels_.size()); }
    const FeatureMap& level(int l) const;
    const std::vector<FeatureMap>& levels() const { return levels_; }

    bool same_shape(const FeaturePyramid& other) const;

private:
    std::vector<FeatureMap> levels_;
};

}  // namespace corrtrack
