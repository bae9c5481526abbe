#pragma once

#include <Eigen/Dense>

#include "corrtrack/box.hpp"

namespace corrtrack {

// Constant-velocity filter over (cx, cy, aspect, h) plus velocities.
// Noise follows the usual pedestrian-tracking convention: position and
// velocity stds scale with box height, aspect stds are small constants.
struct KalmanParams {
    double std_weight_position = 1.0 / 20.0;
    double std_weight_velocity = 1.0 / 160.0;
    // Global gains on the process / measurement covariances.  1.0 keeps the
    // standard behaviour; 0 process noise turns the filter into recursive
    // least squares on the motion model (useful for noiseless replays).
    double process_scale = 1.0;
    double measurement_scale = 1.0;
};

struct KalmanState {
    Eigen::Matrix<double, 8, 1> mean;        // cx, cy, a, h, and their rates
    Eigen::Matrix<double, 8, 8> covariance;
};

// Starts a track at the box with zero velocity and the standard prior.
KalmanState kalman_init(const Box& box, const KalmanParams& kp = {});

// Advances one frame under constant velocity and inflates uncertainty.
KalmanState kalman_predict(const KalmanState& s, const KalmanParams& kp = {});

// Folds one box measurement in (Joseph-form covariance update).
KalmanState kalman_update(const KalmanState& s, const Box& box,
                          const KalmanParams& kp = {});

// Current mean as a top-left box.
Box kalman_box(const KalmanState& s);

}  // namespace corrtrack
