#include "corrtrack/self_supervision.hpp"

#include <cmath>
#include <string>

namespace corrtrack {

namespace {

// log(1 + e^t) without overflow on either tail.
double softplus(double t) {
    const double pos = t > 0.0 ? t : 0.0;
    return pos + std::log1p(std::exp(-std::abs(t)));
}

// Logistic function, stable on both tails.
double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace

IdentityMap::IdentityMap(int height_, int width_, int fill)
    : height(height_), width(width_) {
    if (height < 1 || width < 1) throw ShapeError("identity map dims must be positive");
    ids.assign(static_cast<std::size_t>(height) * width, fill);
}

int IdentityMap::at(int x, int y) const {
    if (x < 0 || x >= width || y < 0 || y >= height)
        throw BoundsError("identity position out of range");
    return ids[static_cast<std::size_t>(y) * width + x];
}

int& IdentityMap::at(int x, int y) {
    if (x < 0 || x >= width || y < 0 || y >= height)
        throw BoundsError("identity position out of range");
    return ids[static_cast<std::size_t>(y) * width + x];
}

LabelVolume::LabelVolume(int height, int width, int radius, int dilation,
                         std::int8_t fill)
    : height_(height), width_(width), radius_(radius), dilation_(dilation) {
    if (height < 1 || width < 1) throw ShapeError("label volume dims must be positive");
    if (radius < 0) throw ValueError("label volume radius must be >= 0");
    if (dilation < 1) throw ValueError("label volume dilation must be >= 1");
    labels_.assign(static_cast<std::size_t>(height) * width * entries_per_position(),
                   fill);
}

LabelVolume make_correlation_labels(const IdentityMap& yq, const IdentityMap& yr,
                                    const CorrParams& p) {
    if (yq.height != yr.height || yq.width != yr.width) {
        throw ShapeError("identity maps must share one shape");
    }
    const int h = yq.height, w = yq.width;
    const int r = p.radius, d = p.dilation, win = 2 * r + 1;
    LabelVolume labels(h, w, r, d, -1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int qid = yq.at(x, y);
            if (qid < 0) continue;  // background query: every entry stays ignored
            for (int dy = -r; dy <= r; ++dy) {
                const int ry = y + d * dy;
                if (ry < 0 || ry >= h) continue;  // out of bounds stays ignored
                for (int dx = -r; dx <= r; ++dx) {
                    const int rx = x + d * dx;
                    if (rx < 0 || rx >= w) continue;
                    labels.at(x, y, (dy + r) * win + (dx + r)) =
                        yr.at(rx, ry) == qid ? 1 : 0;
                }
            }
        }
    }
    return labels;
}

LossResult balanced_bce_loss(const CorrelationVolume& vol,
                             const LabelVolume& labels) {
    if (vol.height() != labels.height() || vol.width() != labels.width() ||
        vol.radius() != labels.radius() || vol.dilation() != labels.dilation()) {
        throw ShapeError("volume and label shapes differ");
    }
    const std::vector<double>& z = vol.values();
    const std::vector<std::int8_t>& lab = labels.labels();

    // Raw per-class sums first, weights applied once at the end, so that
    // duplicating a class's entries rescales its sum and count together.
    double pos_sum = 0.0, neg_sum = 0.0;
    long long pos_n = 0, neg_n = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (lab[i] == 1) {
            pos_sum += softplus(-z[i]);
            ++pos_n;
        } else if (lab[i] == 0) {
            neg_sum += softplus(z[i]);
            ++neg_n;
        }
    }

    LossResult out;
    out.grad = CorrelationVolume(vol.height(), vol.width(), vol.radius(),
                                 vol.dilation(), 0.0);
    if (pos_n > 0) out.loss += 0.5 * pos_sum / static_cast<double>(pos_n);
    if (neg_n > 0) out.loss += 0.5 * neg_sum / static_cast<double>(neg_n);

    const double wp = pos_n > 0 ? 0.5 / static_cast<double>(pos_n) : 0.0;
    const double wn = neg_n > 0 ? 0.5 / static_cast<double>(neg_n) : 0.0;
    std::vector<double>& g = out.grad.values();
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (lab[i] == 1) {
            g[i] = wp * (sigmoid(z[i]) - 1.0);
        } else if (lab[i] == 0) {
            g[i] = wn * sigmoid(z[i]);
        }
    }
    return out;
}

int QuantizedImage::at(int x, int y) const {
    if (x < 0 || x >= width || y < 0 || y >= height)
        throw BoundsError("quantized position out of range");
    return class_map[static_cast<std::size_t>(y) * width + x];
}

int& QuantizedImage::at(int x, int y) {
    if (x < 0 || x >= width || y < 0 || y >= height)
        throw BoundsError("quantized position out of range");
    return class_map[static_cast<std::size_t>(y) * width + x];
}

QuantizedImage quantize_colors(const FeatureMap& image, int k_per_channel) {
    if (image.channels() != 3) throw ShapeError("color quantization expects 3 channels");
    if (k_per_channel < 1) throw ValueError("bins per channel must be >= 1");
    const int k = k_per_channel;
    QuantizedImage out;
    out.height = image.height();
    out.width = image.width();
    out.classes = k * k * k;
    out.class_map.assign(static_cast<std::size_t>(out.height) * out.width, 0);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            int cls = 0, scale = 1;
            for (int c = 0; c < 3; ++c) {
                const double v = image.at(c, y, x);
                if (!(v >= 0.0 && v <= 1.0)) {
                    throw ValueError("pixel value " + std::to_string(v) +
                                     " outside [0, 1]");
                }
                int bin = static_cast<int>(v * k);
                if (bin > k - 1) bin = k - 1;
                cls += bin * scale;
                scale *= k;
            }
            out.at(x, y) = cls;
        }
    }
    return out;
}

FeatureMap colorization_scores(const CorrelationVolume& vol,
                               const QuantizedImage& reference) {
    if (vol.height() != reference.height || vol.width() != reference.width) {
        throw ShapeError("volume grid does not match the reference image");
    }
    const int h = vol.height(), w = vol.width();
    const int r = vol.radius(), d = vol.dilation(), win = vol.window();
    const double norm = static_cast<double>(win) * win;
    FeatureMap scores(reference.classes, h, w, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int k = 0; k < win * win; ++k) {
                const int ry = y + d * (k / win - r);
                const int rx = x + d * (k % win - r);
                if (ry < 0 || ry >= h || rx < 0 || rx >= w) continue;
                scores.at(reference.at(rx, ry), y, x) += vol.at(x, y, k) / norm;
            }
        }
    }
    return scores;
}

LossResult colorization_loss(const CorrelationVolume& vol,
                             const QuantizedImage& reference,
                             const QuantizedImage& target) {
    if (reference.classes != target.classes) {
        throw ValueError("reference and target use different class counts");
    }
    if (target.height != reference.height || target.width != reference.width) {
        throw ShapeError("reference and target image shapes differ");
    }
    const FeatureMap scores = colorization_scores(vol, reference);
    const int h = vol.height(), w = vol.width(), kcls = reference.classes;
    const int r = vol.radius(), d = vol.dilation(), win = vol.window();
    const double norm = static_cast<double>(win) * win;
    const double npos = static_cast<double>(h) * w;

    LossResult out;
    out.grad = CorrelationVolume(h, w, r, d, 0.0);
    std::vector<double> p(kcls);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double mx = scores.at(0, y, x);
            for (int c = 1; c < kcls; ++c) mx = std::max(mx, scores.at(c, y, x));
            double denom = 0.0;
            for (int c = 0; c < kcls; ++c) {
                p[c] = std::exp(scores.at(c, y, x) - mx);
                denom += p[c];
            }
            const int t = target.at(x, y);
            if (t < 0 || t >= kcls) throw ValueError("target class out of range");
            out.loss += (std::log(denom) - (scores.at(t, y, x) - mx)) / npos;
            // dL/dscore = (softmax - onehot)/N, then back through the
            // window normalizer that built the scores.
            for (int k = 0; k < win * win; ++k) {
                const int ry = y + d * (k / win - r);
                const int rx = x + d * (k % win - r);
                if (ry < 0 || ry >= h || rx < 0 || rx >= w) continue;
                const int cls = reference.at(rx, ry);
                const double dscore = (p[cls] / denom - (cls == t ? 1.0 : 0.0)) / npos;
                out.grad.at(x, y, k) = dscore / norm;
            }
        }
    }
    return out;
}

}  // namespace corrtrack
