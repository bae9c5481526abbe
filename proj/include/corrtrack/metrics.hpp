#pragma once

#include <string>
#include <vector>

#include "corrtrack/io_formats.hpp"

namespace corrtrack {

struct MotMetrics {
    double mota = 0.0;
    double idf1 = 0.0;
    int mt = 0;             // trajectories tracked >= 80% of their life
    int ml = 0;             // trajectories tracked <= 20% of their life
    long long fp = 0;
    long long fn = 0;
    long long idsw = 0;
    long long gt_total = 0; // ground-truth boxes
};

// Frame-by-frame matching at the IoU threshold, carrying the previous
// frame's matches forward while they still overlap, filling the rest with
// a minimum-cost assignment on 1-IoU.  Also fills idf1.
MotMetrics evaluate_clear_mot(const std::vector<MotRow>& gt,
                              const std::vector<MotRow>& hyp,
                              double iou_threshold = 0.5);

// Global one-to-one identity matching maximizing overlap frames:
// IDF1 = 2*IDTP / (gt boxes + hyp boxes).
double idf1_score(const std::vector<MotRow>& gt, const std::vector<MotRow>& hyp,
                  double iou_threshold = 0.5);

std::string metrics_to_json(const MotMetrics& m, const std::string& sequence_name);
std::string metrics_to_csv(const MotMetrics& m);

}  // namespace corrtrack
