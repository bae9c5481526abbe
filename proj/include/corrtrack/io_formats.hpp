#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "corrtrack/box.hpp"
#include "corrtrack/errors.hpp"

namespace corrtrack {

// One MOTChallenge CSV row:
// frame,id,x,y,w,h,conf,class,visibility
struct MotRow {
    int frame = 1;
    long long id = -1;
    Box box;
    double conf = 1.0;
    int cls = 1;
    double visibility = 1.0;
};

struct ParseResult {
    std::vector<MotRow> rows;
    int rejected = 0;  // syntactically fine rows dropped for w<=0, h<=0, or frame<1
};

// Parses MOTChallenge CSV.  Missing trailing fields default to
// conf=1, class=1, visibility=1; malformed lines raise ParseError with the
// line number; rows with non-positive size or frame are counted and dropped.
ParseResult parse_mot_stream(std::istream& in);
ParseResult parse_mot_file(const std::string& path);  // ValueError when unreadable

// Result rows as "frame,id,x,y,w,h,conf,-1,-1,-1", reals at 2 decimals,
// sorted by (frame, id).  All ids must be >= 1.
std::string write_mot_results(std::vector<MotRow> rows);

// Same layout for raw detections: id written verbatim (usually -1).
std::string write_mot_detections(std::vector<MotRow> rows);

// Appearance sidecar: one whitespace-separated real vector per detection
// row, same order as the detection file.
std::vector<std::vector<double>> parse_feature_sidecar(std::istream& in);
std::string write_feature_sidecar(const std::vector<std::vector<double>>& features);

enum class FeatureMode { orthogonal, identical, noisy };

// One synthetic object on a linear path; frames listed in miss_frames get a
// ground-truth row but no detection.
struct ObjectSpec {
    long long id = 1;
    Box start;
    double vx = 0.0;
    double vy = 0.0;
    std::vector<int> miss_frames;
};

struct ScenarioSpec {
    int n_objects = 1;
    int n_frames = 10;
    int feature_dim = 8;
    FeatureMode feature_mode = FeatureMode::orthogonal;
    double sigma = 0.0;        // feature noise for FeatureMode::noisy
    std::uint64_t seed = 1;
    std::vector<ObjectSpec> objects;  // default paths are derived when empty
};

struct Scenario {
    std::vector<MotRow> gt;
    std::vector<MotRow> dets;  // id==-1, per frame ordered by (x, y)
    std::vector<std::vector<double>> det_features;  // parallel to dets
};

// Deterministic: the same ScenarioSpec always yields the same bytes.
Scenario generate_scenario(const ScenarioSpec& spec);

// Flat key=value config, '#' comments.  Multi-object fields use
// "objN." prefixes (objN.id, objN.x, objN.y, objN.w, objN.h, objN.vx,
// objN.vy, objN.miss=comma-list).
ScenarioSpec parse_scenario_spec(std::istream& in);

const char* feature_mode_name(FeatureMode mode);

}  // namespace corrtrack
