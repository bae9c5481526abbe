#pragma once

#include <utility>
#include <vector>

#include "corrtrack/box.hpp"
#include "corrtrack/hungarian.hpp"
#include "corrtrack/io_formats.hpp"
#include "corrtrack/kalman.hpp"

namespace corrtrack {

// One measurement in one frame, optionally with a unit-norm appearance vector.
struct Detection {
    int frame = 0;
    Box box;
    double confidence = 1.0;
    std::vector<double> feature;  // empty = no appearance available

    bool has_feature() const { return !feature.empty(); }

    // Stores a normalized copy; zero-norm or non-finite input is rejected.
    void set_feature(const std::vector<double>& f);
};

enum class TrackState { inactive, active, lost, removed };

struct TrackerConfig {
    double alpha = 0.5;          // weight of the IoU term in the match cost
    int tau_loss = 30;           // frames a lost track survives unmatched
    double ema_beta = 0.1;       // appearance update rate
    double gate = 0.7;           // max admissible match cost
    double min_confidence = 0.4; // detections below are dropped at ingest
    KalmanParams kalman;
};

struct Track {
    long long id = 0;
    TrackState state = TrackState::inactive;
    KalmanState kalman;
    std::vector<double> feature;  // EMA appearance, unit norm (may be empty)
    Box last_box;                 // most recent measurement (or prediction)
    int t_loss = 0;               // consecutive unmatched frames while lost
    std::vector<std::pair<int, Box>> history;  // (frame, reported box)
};

// EMA blend of two unit vectors, renormalized.
std::vector<double> feature_ema_update(const std::vector<double>& ema,
                                       const std::vector<double>& fresh,
                                       double beta);

// cost(i, j) = (1 - cos_sim) + alpha * (1 - IoU) between detection i and
// track j; IoU uses the track's predicted box.  Pairs above the gate are
// marked inadmissible.  Tracks and detections must agree on whether
// appearance features are present.
CostMatrix affinity_matrix(const std::vector<Detection>& dets,
                           const std::vector<Track>& tracks,
                           const TrackerConfig& cfg);

struct LifecycleResult {
    std::vector<MotRow> rows;  // active tracks only, reported at the det box
    int created = 0;
    int removed = 0;
};

// Applies one frame of matches to the track set: updates matched tracks,
// walks unmatched ones down the inactive->active->lost->removed ladder, and
// opens a new inactive track per unmatched detection.  Removed tracks stay
// in the vector flagged as removed; the caller prunes them.
LifecycleResult lifecycle_step(std::vector<Track>& tracks,
                               const std::vector<Detection>& dets,
                               const Assignment& assignment,
                               const TrackerConfig& cfg, int frame,
                               long long& next_id);

// Online tracker over one sequence; feed frames in increasing order.
class Tracker {
public:
    explicit Tracker(TrackerConfig cfg = {});

    // Predict, associate, and update for one frame; returns result rows.
    std::vector<MotRow> step(int frame, const std::vector<Detection>& dets);

    const std::vector<Track>& tracks() const { return tracks_; }
    const std::vector<Track>& removed_tracks() const { return removed_; }
    const TrackerConfig& config() const { return cfg_; }
    long long tracks_created() const { return next_id_ - 1; }
    int frames_processed() const { return frames_processed_; }

private:
    TrackerConfig cfg_;
    std::vector<Track> tracks_;
    std::vector<Track> removed_;
    long long next_id_ = 1;
    int last_frame_ = 0;
    int frames_processed_ = 0;
};

struct TrackStats {
    int frames = 0;
    long long created = 0;
    long long removed = 0;
};

// Runs a tracker over flat detections (sorted by frame), stepping through
// every frame between the first and the last so gaps age lost tracks.
std::vector<MotRow> track_sequence(const std::vector<Detection>& dets,
                                   const TrackerConfig& cfg = {},
                                   TrackStats* stats = nullptr);

}  // namespace corrtrack
