#include "corrtrack/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "corrtrack/correlation.hpp"
#include "corrtrack/rng.hpp"
#include "corrtrack/self_supervision.hpp"

namespace corrtrack {

namespace {

constexpr double kFdStep = 1e-5;

double rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

FeatureMap random_map(Rng& rng, int c, int h, int w, double lo, double hi) {
    FeatureMap out(c, h, w);
    for (double& v : out.data()) v = rng.uniform(lo, hi);
    return out;
}

CorrelationVolume random_volume(Rng& rng, int h, int w, int r, int d, double lo,
                                double hi) {
    CorrelationVolume out(h, w, r, d);
    for (double& v : out.values()) v = rng.uniform(lo, hi);
    return out;
}

// Negates the largest-magnitude analytic partial; if the gradient is
// identically zero, biases one entry instead.  Either way the finite
// differences must catch it.
void sabotage(std::vector<double*> grads) {
    double** best = nullptr;
    double best_mag = 0.0;
    for (double*& g : grads) {
        if (std::abs(*g) >= best_mag) {
            best_mag = std::abs(*g);
            best = &g;
        }
    }
    if (best == nullptr) return;
    if (best_mag > 0.0) {
        **best = -**best;
    } else {
        **best = 1.0;
    }
}

// Central finite differences of `objective` w.r.t. every entry behind
// `inputs`, compared against the matching `analytic` pointers.
double check_against_fd(const std::function<double()>& objective,
                        const std::vector<double*>& inputs,
                        const std::vector<double>& analytic) {
    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        double& x = *inputs[i];
        const double keep = x;
        x = keep + kFdStep;
        const double up = objective();
        x = keep - kFdStep;
        const double down = objective();
        x = keep;
        const double numeric = (up - down) / (2.0 * kFdStep);
        worst = std::max(worst, rel_err(analytic[i], numeric));
    }
    return worst;
}

std::vector<double*> entry_pointers(FeatureMap& map) {
    std::vector<double*> out;
    out.reserve(map.data().size());
    for (double& v : map.data()) out.push_back(&v);
    return out;
}

std::vector<double*> entry_pointers(CorrelationVolume& vol) {
    std::vector<double*> out;
    out.reserve(vol.values().size());
    for (double& v : vol.values()) out.push_back(&v);
    return out;
}

double weighted_sum(const FeatureMap& map, const FeatureMap& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < map.data().size(); ++i)
        acc += w.data()[i] * map.data()[i];
    return acc;
}

double weighted_sum(const CorrelationVolume& vol, const CorrelationVolume& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < vol.values().size(); ++i)
        acc += w.values()[i] * vol.values()[i];
    return acc;
}

double check_correlation(Rng& rng, const CorrParams& p, int c, int h, int w,
                         bool flip) {
    FeatureMap fq = random_map(rng, c, h, w, -1.0, 1.0);
    FeatureMap fr = random_map(rng, c, h, w, -1.0, 1.0);
    CorrelationVolume weights =
        random_volume(rng, h, w, p.radius, p.dilation, -1.0, 1.0);

    CorrelationGrad g = correlation_backward(fq, fr, p, weights);
    std::vector<double*> inputs = entry_pointers(fq);
    const std::vector<double*> fr_inputs = entry_pointers(fr);
    inputs.insert(inputs.end(), fr_inputs.begin(), fr_inputs.end());

    std::vector<double> analytic;
    for (double v : g.dfq.data()) analytic.push_back(v);
    for (double v : g.dfr.data()) analytic.push_back(v);
    if (flip) {
        std::vector<double*> handles;
        for (double& v : analytic) handles.push_back(&v);
        sabotage(handles);
    }

    const auto objective = [&]() {
        return weighted_sum(spatial_local_correlation(fq, fr, p), weights);
    };
    return check_against_fd(objective, inputs, analytic);
}

double check_fusion(Rng& rng, const CorrParams& p, int c, int h, int w,
                    int hidden, bool flip) {
    FeatureMap f = random_map(rng, c, h, w, -1.0, 1.0);
    const int entries = (2 * p.radius + 1) * (2 * p.radius + 1);
    MlpParams mlp;
    mlp.w1 = Matrix(hidden, entries);
    mlp.w2 = Matrix(c, hidden);
    mlp.b1.resize(hidden);
    mlp.b2.resize(c);
    for (double& v : mlp.w1.m) v = rng.uniform(-0.5, 0.5);
    for (double& v : mlp.w2.m) v = rng.uniform(-0.5, 0.5);
    for (double& v : mlp.b1) v = rng.uniform(-0.5, 0.5);
    for (double& v : mlp.b2) v = rng.uniform(-0.5, 0.5);
    FeatureMap weights = random_map(rng, c, h, w, -1.0, 1.0);

    const CorrelationVolume vol = spatial_local_correlation(f, f, p);
    const FuseGrad fg = fuse_correlation_backward(f, vol, mlp, weights);
    const CorrelationGrad cg = correlation_backward(f, f, p, fg.dvol);
    std::vector<double> analytic;
    for (std::size_t i = 0; i < f.data().size(); ++i)
        analytic.push_back(fg.df.data()[i] + cg.dfq.data()[i] + cg.dfr.data()[i]);
    if (flip) {
        std::vector<double*> handles;
        for (double& v : analytic) handles.push_back(&v);
        sabotage(handles);
    }

    const auto objective = [&]() {
        return weighted_sum(
            fuse_correlation(f, spatial_local_correlation(f, f, p), mlp), weights);
    };
    return check_against_fd(objective, entry_pointers(f), analytic);
}

double check_aggregation(Rng& rng, const CorrParams& p, int c, int h, int w,
                         bool flip) {
    FeatureMap fq = random_map(rng, c, h, w, -1.0, 1.0);
    FeatureMap fr = random_map(rng, c, h, w, -1.0, 1.0);
    FeatureMap weights = random_map(rng, c, h, w, -1.0, 1.0);

    const TemporalGrad g = temporal_aggregate_backward(fq, fr, p, weights);
    std::vector<double*> inputs = entry_pointers(fq);
    const std::vector<double*> fr_inputs = entry_pointers(fr);
    inputs.insert(inputs.end(), fr_inputs.begin(), fr_inputs.end());

    std::vector<double> analytic;
    for (double v : g.dfq.data()) analytic.push_back(v);
    for (double v : g.dfr.data()) analytic.push_back(v);
    if (flip) {
        std::vector<double*> handles;
        for (double& v : analytic) handles.push_back(&v);
        sabotage(handles);
    }

    const auto objective = [&]() {
        return weighted_sum(temporal_aggregate(fq, fr, p), weights);
    };
    return check_against_fd(objective, inputs, analytic);
}

double check_balanced_bce(Rng& rng, int h, int w, int r, int d, bool flip) {
    CorrelationVolume vol = random_volume(rng, h, w, r, d, -2.0, 2.0);
    LabelVolume labels(h, w, r, d, -1);
    // Random labels with at least one positive and one negative.
    for (std::int8_t& label : labels.labels()) {
        const int roll = rng.uniform_int(0, 2);
        label = roll == 2 ? std::int8_t(-1) : std::int8_t(roll);
    }
    labels.labels()[0] = 1;
    labels.labels()[1] = 0;

    const LossResult res = balanced_bce_loss(vol, labels);
    std::vector<double> analytic = res.grad.values();
    if (flip) {
        std::vector<double*> handles;
        for (double& v : analytic) handles.push_back(&v);
        sabotage(handles);
    }

    const auto objective = [&]() { return balanced_bce_loss(vol, labels).loss; };
    return check_against_fd(objective, entry_pointers(vol), analytic);
}

double check_colorization(Rng& rng, int h, int w, int r, int d, int k, bool flip) {
    CorrelationVolume vol = random_volume(rng, h, w, r, d, -1.0, 1.0);
    FeatureMap ref_img(3, h, w), tgt_img(3, h, w);
    for (double& v : ref_img.data()) v = rng.uniform(0.0, 1.0);
    for (double& v : tgt_img.data()) v = rng.uniform(0.0, 1.0);
    const QuantizedImage ref = quantize_colors(ref_img, k);
    const QuantizedImage tgt = quantize_colors(tgt_img, k);

    const LossResult res = colorization_loss(vol, ref, tgt);
    std::vector<double> analytic = res.grad.values();
    if (flip) {
        std::vector<double*> handles;
        for (double& v : analytic) handles.push_back(&v);
        sabotage(handles);
    }

    const auto objective = [&]() { return colorization_loss(vol, ref, tgt).loss; };
    return check_against_fd(objective, entry_pointers(vol), analytic);
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed,
                                           const std::string& flip_component) {
    Rng rng(seed);
    std::vector<GradCheckResult> out;

    {
        const bool flip = flip_component == "correlation";
        double worst = check_correlation(rng, CorrParams{1, 1, 0}, 2, 4, 4, flip);
        worst = std::max(worst,
                         check_correlation(rng, CorrParams{2, 2, 0}, 3, 5, 5, flip));
        out.push_back({"correlation", worst});
    }
    {
        const bool flip = flip_component == "fusion";
        double worst = check_fusion(rng, CorrParams{1, 1, 0}, 2, 4, 4, 3, flip);
        worst =
            std::max(worst, check_fusion(rng, CorrParams{2, 1, 0}, 2, 5, 5, 4, flip));
        out.push_back({"fusion", worst});
    }
    {
        const bool flip = flip_component == "aggregation";
        double worst = check_aggregation(rng, CorrParams{1, 1, 0}, 2, 4, 4, flip);
        worst = std::max(worst,
                         check_aggregation(rng, CorrParams{2, 2, 0}, 2, 5, 5, flip));
        out.push_back({"aggregation", worst});
    }
    {
        const bool flip = flip_component == "balanced_bce";
        double worst = check_balanced_bce(rng, 4, 4, 1, 1, flip);
        worst = std::max(worst, check_balanced_bce(rng, 3, 5, 2, 1, flip));
        out.push_back({"balanced_bce", worst});
    }
    {
        const bool flip = flip_component == "colorization";
        double worst = check_colorization(rng, 4, 4, 1, 1, 2, flip);
        worst = std::max(worst, check_colorization(rng, 3, 4, 1, 2, 2, flip));
        out.push_back({"colorization", worst});
    }
    return out;
}

}  // namespace corrtrack
