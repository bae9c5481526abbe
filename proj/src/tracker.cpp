#include "corrtrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace corrtrack {

namespace {

void check_config(const TrackerConfig& cfg) {
    if (cfg.alpha < 0.0) throw ValueError("alpha must be >= 0");
    if (cfg.tau_loss < 0) throw ValueError("tau_loss must be >= 0");
    if (cfg.ema_beta < 0.0 || cfg.ema_beta > 1.0)
        throw ValueError("ema_beta must lie in [0, 1]");
    if (cfg.gate < 0.0) throw ValueError("gate must be >= 0");
    if (cfg.min_confidence < 0.0 || cfg.min_confidence > 1.0)
        throw ValueError("min_confidence must lie in [0, 1]");
}

std::vector<double> normalized(const std::vector<double>& f) {
    double sq = 0.0;
    for (double v : f) {
        if (!std::isfinite(v)) throw ValueError("feature has non-finite entries");
        sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0)) throw ValueError("feature vector has zero norm");
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] / norm;
    return out;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return std::clamp(dot, -1.0, 1.0);  // both unit norm
}

}  // namespace

void Detection::set_feature(const std::vector<double>& f) {
    if (f.empty()) throw ValueError("cannot set an empty feature");
    feature = normalized(f);
}

std::vector<double> feature_ema_update(const std::vector<double>& ema,
                                       const std::vector<double>& fresh,
                                       double beta) {
    if (ema.size() != fresh.size()) throw ValueError("feature dims differ in EMA update");
    if (beta < 0.0 || beta > 1.0) throw ValueError("EMA beta must lie in [0, 1]");
    std::vector<double> mixed(ema.size());
    for (std::size_t i = 0; i < ema.size(); ++i)
        mixed[i] = (1.0 - beta) * ema[i] + beta * fresh[i];
    return normalized(mixed);  // throws on a degenerate (zero) blend
}

CostMatrix affinity_matrix(const std::vector<Detection>& dets,
                           const std::vector<Track>& tracks,
                           const TrackerConfig& cfg) {
    check_config(cfg);
    const bool any_track_feature =
        std::any_of(tracks.begin(), tracks.end(),
                    [](const Track& t) { return !t.feature.empty(); });
    CostMatrix m(static_cast<int>(dets.size()), static_cast<int>(tracks.size()));
    for (int i = 0; i < m.rows; ++i) {
        const Detection& det = dets[i];
        if (any_track_feature && !det.has_feature()) {
            throw ValueError("tracks carry features but detection " +
                             std::to_string(i) + " has none");
        }
        for (int j = 0; j < m.cols; ++j) {
            const Track& trk = tracks[j];
            double appearance = 0.0;
            if (det.has_feature() && !trk.feature.empty()) {
                if (det.feature.size() != trk.feature.size())
                    throw ValueError("feature dims differ between detection and track");
                appearance = 1.0 - cosine_similarity(det.feature, trk.feature);
            } else if (det.has_feature() != !trk.feature.empty()) {
                // One side has appearance, the other does not.
                if (!trk.feature.empty())
                    throw ValueError("track carries a feature but the detection has none");
                throw ValueError("detection carries a feature but the track has none");
            }
            const double overlap = iou(det.box, kalman_box(trk.kalman));
            const double cost = appearance + cfg.alpha * (1.0 - overlap);
            m.cost_at(i, j) = cost;
            m.set_admissible(i, j, cost <= cfg.gate);
        }
    }
    return m;
}

LifecycleResult lifecycle_step(std::vector<Track>& tracks,
                               const std::vector<Detection>& dets,
                               const Assignment& assignment,
                               const TrackerConfig& cfg, int frame,
                               long long& next_id) {
    check_config(cfg);
    const int n_dets = static_cast<int>(dets.size());
    const int n_tracks = static_cast<int>(tracks.size());

    std::vector<int> det_of_track(n_tracks, -1);
    std::vector<char> det_used(n_dets, 0);
    for (const auto& [di, tj] : assignment.pairs) {
        if (di < 0 || di >= n_dets || tj < 0 || tj >= n_tracks)
            throw ValueError("assignment references indices outside dets/tracks");
        if (det_used[di] || det_of_track[tj] != -1)
            throw ValueError("assignment matches one det or track twice");
        det_used[di] = 1;
        det_of_track[tj] = di;
    }

    LifecycleResult out;
    for (int j = 0; j < n_tracks; ++j) {
        Track& trk = tracks[j];
        if (trk.state == TrackState::removed)
            throw ValueError("removed track still present in the live set");
        const int di = det_of_track[j];
        if (di >= 0) {
            const Detection& det = dets[di];
            trk.kalman = kalman_update(trk.kalman, det.box, cfg.kalman);
            if (det.has_feature()) {
                trk.feature = trk.feature.empty()
                                  ? det.feature
                                  : feature_ema_update(trk.feature, det.feature,
                                                       cfg.ema_beta);
            }
            trk.state = TrackState::active;
            trk.t_loss = 0;
            trk.last_box = det.box;
            trk.history.emplace_back(frame, det.box);
            out.rows.push_back(MotRow{frame, trk.id, det.box, det.confidence, 1, 1.0});
        } else {
            switch (trk.state) {
                case TrackState::inactive:
                    // Unconfirmed on its second frame: drop immediately.
                    trk.state = TrackState::removed;
                    ++out.removed;
                    break;
                case TrackState::active:
                    trk.state = TrackState::lost;
                    trk.t_loss = 1;
                    break;
                case TrackState::lost:
                    ++trk.t_loss;
                    if (trk.t_loss > cfg.tau_loss) {
                        trk.state = TrackState::removed;
                        ++out.removed;
                    }
                    break;
                case TrackState::removed:
                    break;  // unreachable, checked above
            }
        }
    }

    for (int di = 0; di < n_dets; ++di) {
        if (det_used[di]) continue;
        Track fresh;
        fresh.id = next_id++;
        fresh.state = TrackState::inactive;
        fresh.kalman = kalman_init(dets[di].box, cfg.kalman);
        fresh.feature = dets[di].feature;
        fresh.last_box = dets[di].box;
        fresh.history.emplace_back(frame, dets[di].box);
        tracks.push_back(std::move(fresh));
        ++out.created;
    }
    return out;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg) { check_config(cfg_); }

std::vector<MotRow> Tracker::step(int frame, const std::vector<Detection>& dets) {
    if (frame <= last_frame_)
        throw ValueError("frames must arrive in increasing order");
    last_frame_ = frame;
    ++frames_processed_;

    std::vector<Detection> kept;
    kept.reserve(dets.size());
    for (const Detection& det : dets) {
        if (!(det.box.w > 0.0) || !(det.box.h > 0.0))
            throw ValueError("detection box size must be positive");
        if (det.confidence >= cfg_.min_confidence) kept.push_back(det);
    }

    for (Track& trk : tracks_) trk.kalman = kalman_predict(trk.kalman, cfg_.kalman);

    const Assignment assignment =
        hungarian_solve(affinity_matrix(kept, tracks_, cfg_));
    LifecycleResult result =
        lifecycle_step(tracks_, kept, assignment, cfg_, frame, next_id_);

    auto dead = std::stable_partition(
        tracks_.begin(), tracks_.end(),
        [](const Track& t) { return t.state != TrackState::removed; });
    std::move(dead, tracks_.end(), std::back_inserter(removed_));
    tracks_.erase(dead, tracks_.end());

    std::sort(result.rows.begin(), result.rows.end(),
              [](const MotRow& a, const MotRow& b) { return a.id < b.id; });
    return result.rows;
}

std::vector<MotRow> track_sequence(const std::vector<Detection>& dets,
                                   const TrackerConfig& cfg, TrackStats* stats) {
    for (std::size_t i = 1; i < dets.size(); ++i) {
        if (dets[i].frame < dets[i - 1].frame)
            throw ValueError("detections must be sorted by increasing frame");
    }
    std::vector<MotRow> rows;
    if (dets.empty()) {
        if (stats) *stats = TrackStats{};
        return rows;
    }

    Tracker tracker(cfg);
    const int first = dets.front().frame;
    const int last = dets.back().frame;
    std::size_t cursor = 0;
    // Every frame in [first, last] is stepped, detections or not, so lost
    // counters age through real gaps.
    for (int frame = first; frame <= last; ++frame) {
        std::vector<Detection> frame_dets;
        while (cursor < dets.size() && dets[cursor].frame == frame)
            frame_dets.push_back(dets[cursor++]);
        std::vector<MotRow> frame_rows = tracker.step(frame, frame_dets);
        rows.insert(rows.end(), frame_rows.begin(), frame_rows.end());
    }
    if (stats) {
        stats->frames = tracker.frames_processed();
        stats->created = tracker.tracks_created();
        stats->removed = static_cast<long long>(tracker.removed_tracks().size());
    }
    return rows;
}

}  // namespace corrtrack
