#include "corrtrack/kalman.hpp"

#include <string>

#include "corrtrack/errors.hpp"

namespace corrtrack {

namespace {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat48 = Eigen::Matrix<double, 4, 8>;

// Aspect (w/h) noise is box-size independent; everything else scales with h.
constexpr double kAspectStdInit = 1e-2;
constexpr double kAspectStdProcess = 1e-2;
constexpr double kAspectVelStd = 1e-5;
constexpr double kAspectStdMeasure = 1e-1;

void check_box(const Box& box) {
    if (!(box.w > 0.0) || !(box.h > 0.0)) {
        throw ValueError("box size must be positive, got " + std::to_string(box.w) +
                         "x" + std::to_string(box.h));
    }
}

Vec4 measurement_of(const Box& box) {
    Vec4 z;
    z << box.cx(), box.cy(), box.w / box.h, box.h;
    return z;
}

Mat8 transition() {
    Mat8 f = Mat8::Identity();
    for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;  // dt = 1 frame
    return f;
}

Mat8 process_noise(double h, const KalmanParams& kp) {
    Vec8 std;
    std << kp.std_weight_position * h, kp.std_weight_position * h, kAspectStdProcess,
        kp.std_weight_position * h, kp.std_weight_velocity * h,
        kp.std_weight_velocity * h, kAspectVelStd, kp.std_weight_velocity * h;
    return (std.array() * std.array()).matrix().asDiagonal() * kp.process_scale;
}

Mat4 measurement_noise(double h, const KalmanParams& kp) {
    Vec4 std;
    std << kp.std_weight_position * h, kp.std_weight_position * h, kAspectStdMeasure,
        kp.std_weight_position * h;
    return (std.array() * std.array()).matrix().asDiagonal() * kp.measurement_scale;
}

}  // namespace

KalmanState kalman_init(const Box& box, const KalmanParams& kp) {
    check_box(box);
    KalmanState s;
    s.mean.setZero();
    s.mean.head<4>() = measurement_of(box);

    const double h = box.h;
    Vec8 std;
    std << 2.0 * kp.std_weight_position * h, 2.0 * kp.std_weight_position * h,
        kAspectStdInit, 2.0 * kp.std_weight_position * h,
        10.0 * kp.std_weight_velocity * h, 10.0 * kp.std_weight_velocity * h,
        kAspectVelStd, 10.0 * kp.std_weight_velocity * h;
    s.covariance = (std.array() * std.array()).matrix().asDiagonal();
    return s;
}

KalmanState kalman_predict(const KalmanState& s, const KalmanParams& kp) {
    const Mat8 f = transition();
    KalmanState out;
    out.mean = f * s.mean;
    out.covariance =
        f * s.covariance * f.transpose() + process_noise(s.mean(3), kp);
    return out;
}

KalmanState kalman_update(const KalmanState& s, const Box& box,
                          const KalmanParams& kp) {
    check_box(box);
    Mat48 h = Mat48::Zero();
    for (int i = 0; i < 4; ++i) h(i, i) = 1.0;

    const Mat4 r = measurement_noise(s.mean(3), kp);
    const Mat4 innovation_cov = h * s.covariance * h.transpose() + r;
    const Eigen::Matrix<double, 8, 4> gain =
        s.covariance * h.transpose() * innovation_cov.inverse();

    KalmanState out;
    out.mean = s.mean + gain * (measurement_of(box) - h * s.mean);
    // Joseph form keeps the covariance symmetric PSD under rounding.
    const Mat8 ikh = Mat8::Identity() - gain * h;
    out.covariance =
        ikh * s.covariance * ikh.transpose() + gain * r * gain.transpose();
    return out;
}

Box kalman_box(const KalmanState& s) {
    const double h = s.mean(3);
    const double w = s.mean(2) * h;
    return Box{s.mean(0) - w / 2.0, s.mean(1) - h / 2.0, w, h};
}

}  // namespace corrtrack
