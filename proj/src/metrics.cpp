#include "corrtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "json.hpp"

#include "corrtrack/hungarian.hpp"

namespace corrtrack {

namespace {

using IdBox = std::pair<long long, Box>;

std::map<int, std::vector<IdBox>> group_by_frame(const std::vector<MotRow>& rows) {
    std::map<int, std::vector<IdBox>> out;
    for (const MotRow& row : rows) out[row.frame].emplace_back(row.id, row.box);
    for (auto& [frame, items] : out) {
        std::sort(items.begin(), items.end(),
                  [](const IdBox& a, const IdBox& b) { return a.first < b.first; });
    }
    return out;
}

// Lexicographic tie reward: among equal-cost matchings prefer matching the
// lowest GT index, and give it the lowest hyp index.  Row terms decay
// geometrically so earlier rows dominate later ones; magnitudes stay far
// below any genuine IoU difference.
double tie_eps(int i, int j, int cols) {
    const double base = 1e-9;
    return -base * (cols + 1.0 - j) * std::pow(static_cast<double>(cols) + 2.0, -i);
}

}  // namespace

MotMetrics evaluate_clear_mot(const std::vector<MotRow>& gt,
                              const std::vector<MotRow>& hyp,
                              double iou_threshold) {
    if (!(iou_threshold > 0.0) || iou_threshold > 1.0)
        throw ValueError("iou threshold must lie in (0, 1]");

    const auto gt_frames = group_by_frame(gt);
    const auto hyp_frames = group_by_frame(hyp);

    std::set<int> frames;
    for (const auto& [f, items] : gt_frames) frames.insert(f);
    for (const auto& [f, items] : hyp_frames) frames.insert(f);

    std::map<long long, long long> span_of;     // gt id -> frames present
    std::map<long long, long long> matched_of;  // gt id -> frames matched
    for (const MotRow& row : gt) ++span_of[row.id];

    MotMetrics m;
    m.gt_total = static_cast<long long>(gt.size());

    std::map<long long, long long> last_match;  // gt id -> last hyp id ever matched
    std::map<long long, long long> prev;        // matches alive in the previous frame

    static const std::vector<IdBox> kEmpty;
    for (int frame : frames) {
        const auto git = gt_frames.find(frame);
        const auto hit = hyp_frames.find(frame);
        const std::vector<IdBox>& gts = git == gt_frames.end() ? kEmpty : git->second;
        const std::vector<IdBox>& hyps = hit == hyp_frames.end() ? kEmpty : hit->second;

        std::vector<char> g_used(gts.size(), 0), h_used(hyps.size(), 0);
        std::map<long long, long long> cur;

        // Continuity rule: keep last frame's pairs while they still overlap.
        for (const auto& [gid, hid] : prev) {
            const auto gpos = std::lower_bound(
                gts.begin(), gts.end(), gid,
                [](const IdBox& a, long long id) { return a.first < id; });
            const auto hpos = std::lower_bound(
                hyps.begin(), hyps.end(), hid,
                [](const IdBox& a, long long id) { return a.first < id; });
            if (gpos == gts.end() || gpos->first != gid) continue;
            if (hpos == hyps.end() || hpos->first != hid) continue;
            if (iou(gpos->second, hpos->second) < iou_threshold) continue;
            g_used[gpos - gts.begin()] = 1;
            h_used[hpos - hyps.begin()] = 1;
            cur[gid] = hid;
        }

        // Fill the rest with a minimum-cost assignment on 1 - IoU.
        std::vector<int> rg, rh;
        for (std::size_t i = 0; i < gts.size(); ++i)
            if (!g_used[i]) rg.push_back(static_cast<int>(i));
        for (std::size_t j = 0; j < hyps.size(); ++j)
            if (!h_used[j]) rh.push_back(static_cast<int>(j));
        if (!rg.empty() && !rh.empty()) {
            CostMatrix costs(static_cast<int>(rg.size()), static_cast<int>(rh.size()));
            for (int i = 0; i < costs.rows; ++i)
                for (int j = 0; j < costs.cols; ++j) {
                    const double ov = iou(gts[rg[i]].second, hyps[rh[j]].second);
                    costs.cost_at(i, j) = 1.0 - ov + tie_eps(i, j, costs.cols);
                    costs.set_admissible(i, j, ov >= iou_threshold);
                }
            const Assignment a = hungarian_solve(costs);
            for (const auto& [i, j] : a.pairs) {
                g_used[rg[i]] = 1;
                h_used[rh[j]] = 1;
                cur[gts[rg[i]].first] = hyps[rh[j]].first;
            }
        }

        for (std::size_t i = 0; i < gts.size(); ++i)
            if (!g_used[i]) ++m.fn;
        for (std::size_t j = 0; j < hyps.size(); ++j)
            if (!h_used[j]) ++m.fp;

        for (const auto& [gid, hid] : cur) {
            ++matched_of[gid];
            const auto known = last_match.find(gid);
            if (known != last_match.end() && known->second != hid) ++m.idsw;
            last_match[gid] = hid;
        }
        prev = std::move(cur);
    }

    if (m.gt_total > 0) {
        m.mota = 1.0 - static_cast<double>(m.fp + m.fn + m.idsw) /
                           static_cast<double>(m.gt_total);
    } else {
        m.mota = (m.fp + m.idsw) == 0 ? 1.0 : 0.0;
    }

    for (const auto& [gid, span] : span_of) {
        const long long matched = matched_of.count(gid) ? matched_of[gid] : 0;
        if (matched * 5 >= span * 4) ++m.mt;  // >= 80% of the trajectory
        if (matched * 5 <= span) ++m.ml;      // <= 20%
    }

    m.idf1 = idf1_score(gt, hyp, iou_threshold);
    return m;
}

double idf1_score(const std::vector<MotRow>& gt, const std::vector<MotRow>& hyp,
                  double iou_threshold) {
    if (!(iou_threshold > 0.0) || iou_threshold > 1.0)
        throw ValueError("iou threshold must lie in (0, 1]");
    if (gt.empty() && hyp.empty()) return 1.0;
    if (gt.empty() || hyp.empty()) return 0.0;

    // Per identity: frame -> box.
    std::map<long long, std::map<int, Box>> gid_boxes, hid_boxes;
    for (const MotRow& row : gt) gid_boxes[row.id][row.frame] = row.box;
    for (const MotRow& row : hyp) hid_boxes[row.id][row.frame] = row.box;

    std::vector<long long> gids, hids;
    for (const auto& [id, boxes] : gid_boxes) gids.push_back(id);
    for (const auto& [id, boxes] : hid_boxes) hids.push_back(id);

    // overlap(g, h): frames where the two identities overlap at threshold.
    CostMatrix costs(static_cast<int>(gids.size()), static_cast<int>(hids.size()));
    for (int i = 0; i < costs.rows; ++i) {
        const auto& gframes = gid_boxes[gids[i]];
        for (int j = 0; j < costs.cols; ++j) {
            const auto& hframes = hid_boxes[hids[j]];
            long long overlap = 0;
            for (const auto& [frame, gbox] : gframes) {
                const auto hpos = hframes.find(frame);
                if (hpos != hframes.end() && iou(gbox, hpos->second) >= iou_threshold)
                    ++overlap;
            }
            costs.cost_at(i, j) = -static_cast<double>(overlap);
        }
    }
    const Assignment a = hungarian_solve(costs);
    long long idtp = 0;
    for (const auto& [i, j] : a.pairs)
        idtp += static_cast<long long>(-costs.cost_at(i, j));

    // IDF1 = 2*IDTP / (2*IDTP + IDFP + IDFN) = 2*IDTP / (gt boxes + hyp boxes).
    return 2.0 * static_cast<double>(idtp) /
           static_cast<double>(gt.size() + hyp.size());
}

namespace {

nlohmann::json metrics_json_object(const MotMetrics& m) {
    return nlohmann::json{{"mota", m.mota}, {"idf1", m.idf1}, {"mt", m.mt},
                          {"ml", m.ml},     {"fp", m.fp},     {"fn", m.fn},
                          {"idsw", m.idsw}, {"gt_total", m.gt_total}};
}

}  // namespace

std::string metrics_to_json(const MotMetrics& m, const std::string& sequence_name) {
    nlohmann::json seq = metrics_json_object(m);
    seq["name"] = sequence_name;
    const nlohmann::json out{{"summary", metrics_json_object(m)},
                             {"sequences", nlohmann::json::array({seq})}};
    return out.dump(2) + "\n";
}

std::string metrics_to_csv(const MotMetrics& m) {
    char line[160];
    std::snprintf(line, sizeof(line), "%.6f,%.6f,%d,%d,%lld,%lld,%lld\n", m.mota,
                  m.idf1, m.mt, m.ml, m.fp, m.fn, m.idsw);
    return std::string("MOTA,IDF1,MT,ML,FP,FN,IDSW\n") + line;
}

}  // namespace corrtrack
