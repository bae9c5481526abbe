#include "corrtrack/tensor.hpp"

#include <string>

namespace corrtrack {

namespace {

void check_dims(int channels, int height, int width) {
    if (channels < 1 || height < 1 || width < 1) {
        throw ShapeError("feature map dims must be positive, got " +
                         std::to_string(channels) + "x" + std::to_string(height) +
                         "x" + std::to_string(width));
    }
}

}  // namespace

FeatureMap::FeatureMap(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
    check_dims(channels, height, width);
    data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

FeatureMap::FeatureMap(int channels, int height, int width, std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    check_dims(channels, height, width);
    if (data_.size() != static_cast<std::size_t>(channels) * height * width) {
        throw ShapeError("feature data has " + std::to_string(data_.size()) +
                         " values, shape needs " +
                         std::to_string(static_cast<std::size_t>(channels) * height * width));
    }
}

std::vector<double> FeatureMap::feature_at(int x, int y) const {
    if (x < 0 || x >= width_ || y < 0 || y >= height_) {
        throw BoundsError("position (" + std::to_string(x) + ", " + std::to_string(y) +
                          ") outside " + std::to_string(width_) + "x" +
                          std::to_string(height_) + " grid");
    }
    std::vector<double> out(channels_);
    for (int c = 0; c < channels_; ++c) out[c] = at(c, y, x);
    return out;
}

Matrix::Matrix(int r, int c, double fill) : rows(r), cols(c) {
    if (r < 0 || c < 0) throw ShapeError("matrix dims must be non-negative");
    m.assign(static_cast<std::size_t>(r) * c, fill);
}

Matrix Matrix::identity(int n) {
    Matrix out(n, n, 0.0);
    for (int i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
}

FeatureMap upsample_nearest2x(const FeatureMap& map) {
    FeatureMap out(map.channels(), map.height() * 2, map.width() * 2);
    for (int c = 0; c < map.channels(); ++c)
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x)
                out.at(c, y, x) = map.at(c, y / 2, x / 2);
    return out;
}

FeatureMap conv1x1(const FeatureMap& map, const Conv1x1Params& params) {
    const Matrix& w = params.weights;
    if (w.cols != map.channels()) {
        throw ShapeError("conv1x1 weights expect " + std::to_string(w.cols) +
                         " input channels, map has " + std::to_string(map.channels()));
    }
    if (static_cast<int>(params.bias.size()) != w.rows) {
        throw ShapeError("conv1x1 bias length " + std::to_string(params.bias.size()) +
                         " does not match " + std::to_string(w.rows) + " outputs");
    }
    FeatureMap out(w.rows, map.height(), map.width());
    for (int o = 0; o < w.rows; ++o)
        for (int y = 0; y < map.height(); ++y)
            for (int x = 0; x < map.width(); ++x) {
                double acc = params.bias[o];
                for (int c = 0; c < map.channels(); ++c)
                    acc += w(o, c) * map.at(c, y, x);
                out.at(o, y, x) = acc;
            }
    return out;
}

FeaturePyramid::FeaturePyramid(std::vector<FeatureMap> levels)
    : levels_(std::move(levels)) {
    if (levels_.empty()) throw ShapeError("pyramid needs at least one level");
    for (std::size_t l = 1; l < levels_.size(); ++l) {
        const FeatureMap& fine = levels_[l - 1];
        const FeatureMap& coarse = levels_[l];
        const int want_h = (fine.height() + 1) / 2;
        const int want_w = (fine.width() + 1) / 2;
        if (coarse.height() != want_h || coarse.width() != want_w) {
            throw ShapeError("pyramid level " + std::to_string(l) + " is " +
                             std::to_string(coarse.height()) + "x" +
                             std::to_string(coarse.width()) + ", expected " +
                             std::to_string(want_h) + "x" + std::to_string(want_w));
        }
    }
}

const FeatureMap& FeaturePyramid::level(int l) const {
    if (l < 0 || l >= num_levels()) {
        throw BoundsError("pyramid level " + std::to_string(l) + " out of range");
    }
    return levels_[static_cast<std::size_t>(l)];
}

bool FeaturePyramid::same_shape(const FeaturePyramid& other) const {
    if (num_levels() != other.num_levels()) return false;
    for (int l = 0; l < num_levels(); ++l)
        if (!levels_[l].same_shape(other.levels_[l])) return false;
    return true;
}

}  // namespace corrtrack
