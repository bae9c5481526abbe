#include "corrtrack/io_formats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "corrtrack/rng.hpp"

namespace corrtrack {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    return out;
}

std::string trimmed(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_real(const std::string& raw, long line) {
    const std::string s = trimmed(raw);
    if (s.empty()) throw ParseError("empty field", line);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw ParseError("'" + s + "' is not a finite number", line);
    }
    return v;
}

long long parse_integer(const std::string& raw, long line) {
    const double v = parse_real(raw, line);
    const long long i = static_cast<long long>(v);
    if (static_cast<double>(i) != v) {
        throw ParseError("'" + trimmed(raw) + "' is not an integer", line);
    }
    return i;
}

}  // namespace

ParseResult parse_mot_stream(std::istream& in) {
    ParseResult out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        const std::vector<std::string> fields = split(line, ',');
        if (fields.size() < 6) {
            throw ParseError("expected at least 6 comma-separated fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        MotRow row;
        row.frame = static_cast<int>(parse_integer(fields[0], line_no));
        row.id = parse_integer(fields[1], line_no);
        row.box.x = parse_real(fields[2], line_no);
        row.box.y = parse_real(fields[3], line_no);
        row.box.w = parse_real(fields[4], line_no);
        row.box.h = parse_real(fields[5], line_no);
        row.conf = fields.size() > 6 ? parse_real(fields[6], line_no) : 1.0;
        row.cls = fields.size() > 7
                      ? static_cast<int>(parse_integer(fields[7], line_no))
                      : 1;
        row.visibility = fields.size() > 8 ? parse_real(fields[8], line_no) : 1.0;
        if (row.frame < 1 || row.box.w <= 0.0 || row.box.h <= 0.0) {
            ++out.rejected;  // structurally fine, semantically unusable
            continue;
        }
        out.rows.push_back(row);
    }
    return out;
}

ParseResult parse_mot_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValueError("cannot open '" + path + "'");
    return parse_mot_stream(in);
}

namespace {

std::string format_rows(const std::vector<MotRow>& rows) {
    std::string out;
    char line[192];
    for (const MotRow& row : rows) {
        std::snprintf(line, sizeof(line), "%d,%lld,%.2f,%.2f,%.2f,%.2f,%.2f,-1,-1,-1\n",
                      row.frame, row.id, row.box.x, row.box.y, row.box.w, row.box.h,
                      row.conf);
        out += line;
    }
    return out;
}

}  // namespace

std::string write_mot_results(std::vector<MotRow> rows) {
    for (const MotRow& row : rows) {
        if (row.id < 1) {
            throw ValueError("result rows need id >= 1, got " + std::to_string(row.id));
        }
    }
    std::sort(rows.begin(), rows.end(), [](const MotRow& a, const MotRow& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });
    return format_rows(rows);
}

std::string write_mot_detections(std::vector<MotRow> rows) {
    // Detections keep their within-frame order; only frames are ordered.
    std::stable_sort(rows.begin(), rows.end(),
                     [](const MotRow& a, const MotRow& b) { return a.frame < b.frame; });
    return format_rows(rows);
}

std::vector<std::vector<double>> parse_feature_sidecar(std::istream& in) {
    std::vector<std::vector<double>> out;
    std::string line;
    long line_no = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        std::vector<double> feature;
        std::istringstream fields(line);
        std::string field;
        while (fields >> field) feature.push_back(parse_real(field, line_no));
        if (dim == 0) dim = feature.size();
        if (feature.size() != dim) {
            throw ParseError("feature has " + std::to_string(feature.size()) +
                                 " entries, previous rows had " + std::to_string(dim),
                             line_no);
        }
        out.push_back(std::move(feature));
    }
    return out;
}

std::string write_feature_sidecar(const std::vector<std::vector<double>>& features) {
    std::string out;
    char buf[64];
    for (const std::vector<double>& feature : features) {
        for (std::size_t i = 0; i < feature.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", feature[i]);
            if (i) out += ' ';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

const char* feature_mode_name(FeatureMode mode) {
    switch (mode) {
        case FeatureMode::orthogonal: return "orthogonal";
        case FeatureMode::identical: return "identical";
        case FeatureMode::noisy: return "noisy";
    }
    return "orthogonal";
}

namespace {

void check_spec(const ScenarioSpec& spec) {
    if (spec.n_objects < 1) throw ValueError("scenario needs at least one object");
    if (spec.n_frames < 1) throw ValueError("scenario needs at least one frame");
    if (spec.feature_dim < 1) throw ValueError("feature dim must be >= 1");
    if (spec.sigma < 0.0) throw ValueError("feature noise sigma must be >= 0");
    if (!spec.objects.empty() &&
        static_cast<int>(spec.objects.size()) != spec.n_objects) {
        throw ValueError("explicit object list must match n_objects");
    }
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
        const ObjectSpec& obj = spec.objects[i];
        if (obj.id < 1) throw ValueError("object ids must be >= 1");
        if (obj.start.w <= 0.0 || obj.start.h <= 0.0)
            throw ValueError("object boxes must have positive size");
        for (std::size_t j = 0; j < i; ++j) {
            if (spec.objects[j].id == obj.id) {
                throw ValueError("object id " + std::to_string(obj.id) +
                                 " used more than once");
            }
        }
    }
}

ObjectSpec default_object_at(int index) {
    ObjectSpec obj;
    obj.id = index + 1;
    obj.start = Box{20.0 + 60.0 * index, 30.0 + 45.0 * index, 10.0, 20.0};
    obj.vx = 2.0;
    obj.vy = 0.0;
    return obj;
}

std::vector<ObjectSpec> default_objects(const ScenarioSpec& spec) {
    std::vector<ObjectSpec> out;
    out.reserve(spec.n_objects);
    for (int i = 0; i < spec.n_objects; ++i) out.push_back(default_object_at(i));
    return out;
}

std::vector<double> base_feature(const ScenarioSpec& spec, int object_index) {
    std::vector<double> f(spec.feature_dim, 0.0);
    const int axis = spec.feature_mode == FeatureMode::identical
                         ? 0
                         : object_index % spec.feature_dim;
    f[axis] = 1.0;
    return f;
}

}  // namespace

Scenario generate_scenario(const ScenarioSpec& spec) {
    check_spec(spec);
    const std::vector<ObjectSpec> objects =
        spec.objects.empty() ? default_objects(spec) : spec.objects;

    Rng rng(spec.seed);
    Scenario out;
    for (int frame = 1; frame <= spec.n_frames; ++frame) {
        struct Candidate {
            MotRow row;
            std::vector<double> feature;
            int object_index;
        };
        std::vector<Candidate> dets;
        for (std::size_t i = 0; i < objects.size(); ++i) {
            const ObjectSpec& obj = objects[i];
            MotRow row;
            row.frame = frame;
            row.id = obj.id;
            row.box = Box{obj.start.x + obj.vx * (frame - 1),
                          obj.start.y + obj.vy * (frame - 1), obj.start.w,
                          obj.start.h};
            out.gt.push_back(row);

            const bool missed = std::find(obj.miss_frames.begin(),
                                          obj.miss_frames.end(),
                                          frame) != obj.miss_frames.end();
            // The generator draws per (frame, object) even for missed
            // detections so miss lists never shift later draws.
            std::vector<double> feature = base_feature(spec, static_cast<int>(i));
            if (spec.feature_mode == FeatureMode::noisy) {
                double sq = 0.0;
                for (double& v : feature) {
                    v += spec.sigma * rng.gaussian();
                    sq += v * v;
                }
                if (sq > 1e-24) {
                    const double norm = std::sqrt(sq);
                    for (double& v : feature) v /= norm;
                } else {
                    feature = base_feature(spec, static_cast<int>(i));
                }
            }
            if (missed) continue;
            MotRow det = row;
            det.id = -1;
            dets.push_back(Candidate{det, std::move(feature), static_cast<int>(i)});
        }
        // Detection files carry no identity: rows surface in spatial order.
        std::sort(dets.begin(), dets.end(), [](const Candidate& a, const Candidate& b) {
            if (a.row.box.x != b.row.box.x) return a.row.box.x < b.row.box.x;
            if (a.row.box.y != b.row.box.y) return a.row.box.y < b.row.box.y;
            return a.object_index < b.object_index;
        });
        for (Candidate& c : dets) {
            out.dets.push_back(c.row);
            out.det_features.push_back(std::move(c.feature));
        }
    }
    return out;
}

ScenarioSpec parse_scenario_spec(std::istream& in) {
    ScenarioSpec spec;
    std::map<int, ObjectSpec> objects;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line.erase(comment);
        if (trimmed(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("expected key=value", line_no);
        }
        const std::string key = trimmed(line.substr(0, eq));
        const std::string value = trimmed(line.substr(eq + 1));

        if (key == "objects") {
            spec.n_objects = static_cast<int>(parse_integer(value, line_no));
        } else if (key == "frames") {
            spec.n_frames = static_cast<int>(parse_integer(value, line_no));
        } else if (key == "feature_dim") {
            spec.feature_dim = static_cast<int>(parse_integer(value, line_no));
        } else if (key == "sigma") {
            spec.sigma = parse_real(value, line_no);
        } else if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(parse_integer(value, line_no));
        } else if (key == "feature_mode") {
            if (value == "orthogonal") {
                spec.feature_mode = FeatureMode::orthogonal;
            } else if (value == "identical") {
                spec.feature_mode = FeatureMode::identical;
            } else if (value == "noisy") {
                spec.feature_mode = FeatureMode::noisy;
            } else {
                throw ParseError("unknown feature_mode '" + value + "'", line_no);
            }
        } else if (key.rfind("obj", 0) == 0) {
            const auto dot = key.find('.');
            if (dot == std::string::npos || dot <= 3) {
                throw ParseError("object keys look like objN.field", line_no);
            }
            const std::string index_text = key.substr(3, dot - 3);
            for (char ch : index_text) {
                if (ch < '0' || ch > '9')
                    throw ParseError("bad object index '" + index_text + "'", line_no);
            }
            const int index = std::atoi(index_text.c_str());
            const std::string field = key.substr(dot + 1);
            auto it = objects.find(index);
            if (it == objects.end()) {
                it = objects.emplace(index, default_object_at(index)).first;
            }
            ObjectSpec& obj = it->second;
            if (field == "id") {
                obj.id = parse_integer(value, line_no);
            } else if (field == "x") {
                obj.start.x = parse_real(value, line_no);
            } else if (field == "y") {
                obj.start.y = parse_real(value, line_no);
            } else if (field == "w") {
                obj.start.w = parse_real(value, line_no);
            } else if (field == "h") {
                obj.start.h = parse_real(value, line_no);
            } else if (field == "vx") {
                obj.vx = parse_real(value, line_no);
            } else if (field == "vy") {
                obj.vy = parse_real(value, line_no);
            } else if (field == "miss") {
                obj.miss_frames.clear();
                if (!value.empty()) {
                    for (const std::string& item : split(value, ',')) {
                        obj.miss_frames.push_back(
                            static_cast<int>(parse_integer(item, line_no)));
                    }
                }
            } else {
                throw ParseError("unknown object field '" + field + "'", line_no);
            }
        } else {
            throw ParseError("unknown key '" + key + "'", line_no);
        }
    }

    if (!objects.empty()) {
        spec.objects.clear();
        for (int i = 0; i < spec.n_objects; ++i) {
            const auto it = objects.find(i);
            if (it == objects.end()) {
                throw ParseError("missing obj" + std::to_string(i) +
                                 " entries for objects=" +
                                 std::to_string(spec.n_objects));
            }
            spec.objects.push_back(it->second);
        }
        if (static_cast<int>(objects.size()) != spec.n_objects) {
            throw ParseError("object indices exceed objects=" +
                             std::to_string(spec.n_objects));
        }
    }
    return spec;
}

}  // namespace corrtrack
