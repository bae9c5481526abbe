#pragma once

#include <cstdint>
#include <vector>

#include "corrtrack/correlation.hpp"

namespace corrtrack {

// Per-pixel instance ids on one grid; negative means background.
struct IdentityMap {
    int height = 0;
    int width = 0;
    std::vector<int> ids;  // y*W + x

    IdentityMap() = default;
    IdentityMap(int height_, int width_, int fill = -1);

    int at(int x, int y) const;
    int& at(int x, int y);
};

// Supervision target per volume entry: 1 same id, 0 different id (a
// background reference pixel under a foreground query also counts as
// different), -1 ignored (background query or displacement out of bounds).
class LabelVolume {
public:
    LabelVolume() = default;
    LabelVolume(int height, int width, int radius, int dilation,
                std::int8_t fill = -1);

    int height() const { return height_; }
    int width() const { return width_; }
    int radius() const { return radius_; }
    int dilation() const { return dilation_; }
    int window() const { return 2 * radius_ + 1; }
    int entries_per_position() const { return window() * window(); }

    std::int8_t at(int x, int y, int k) const { return labels_[index(x, y, k)]; }
    std::int8_t& at(int x, int y, int k) { return labels_[index(x, y, k)]; }

    const std::vector<std::int8_t>& labels() const { return labels_; }
    std::vector<std::int8_t>& labels() { return labels_; }

private:
    std::size_t index(int x, int y, int k) const {
        return (static_cast<std::size_t>(y) * width_ + x) * entries_per_position() + k;
    }

    int height_ = 0;
    int width_ = 0;
    int radius_ = 0;
    int dilation_ = 1;
    std::vector<std::int8_t> labels_;
};

// Builds the {1, 0, -1} target volume from query/reference identity maps.
LabelVolume make_correlation_labels(const IdentityMap& yq, const IdentityMap& yr,
                                    const CorrParams& p);

struct LossResult {
    double loss = 0.0;
    CorrelationVolume grad;  // d loss / d volume entry
};

// Class-balanced binary cross-entropy over volume entries as logits:
// positives and negatives each carry total weight 0.5, split evenly
// inside their class; label -1 entries are ignored.
LossResult balanced_bce_loss(const CorrelationVolume& vol,
                             const LabelVolume& labels);

// Per-pixel color class in [0, k^3) from uniform per-channel quantization.
struct QuantizedImage {
    int height = 0;
    int width = 0;
    int classes = 0;
    std::vector<int> class_map;  // y*W + x

    int at(int x, int y) const;
    int& at(int x, int y);
};

// image must have exactly 3 channels with values in [0, 1].
QuantizedImage quantize_colors(const FeatureMap& image, int k_per_channel);

// Class scores per position: score(cls, y, x) sums volume weights whose
// displaced reference pixel has color class cls (out-of-bounds entries
// contribute nothing).
FeatureMap colorization_scores(const CorrelationVolume& vol,
                               const QuantizedImage& reference);

// Mean softmax cross-entropy of colorization_scores against the target
// classes, with the analytic gradient w.r.t. the volume.
LossResult colorization_loss(const CorrelationVolume& vol,
                             const QuantizedImage& reference,
                             const QuantizedImage& target);

}  // namespace corrtrack
