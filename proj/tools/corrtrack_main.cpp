#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "corrtrack/bench.hpp"
#include "corrtrack/gradcheck.hpp"
#include "corrtrack/io_formats.hpp"
#include "corrtrack/metrics.hpp"
#include "corrtrack/tracker.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitMissingInput = 2;
constexpr int kExitParseError = 3;

// Raised after a clean "missing file" diagnostic.
struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInput("cannot open input file '" + path + "'");
    return in;
}

void write_output(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingInput("cannot open output file '" + path + "'");
    out << content;
}

struct TrackOptions {
    std::string dets_path;
    std::string features_path;
    std::string out_path;
    corrtrack::TrackerConfig cfg;
};

int cmd_track(const TrackOptions& opt) {
    std::ifstream dets_in = open_input(opt.dets_path);
    const corrtrack::ParseResult parsed = corrtrack::parse_mot_stream(dets_in);

    std::vector<std::vector<double>> features;
    if (!opt.features_path.empty()) {
        std::ifstream feat_in = open_input(opt.features_path);
        features = corrtrack::parse_feature_sidecar(feat_in);
        if (features.size() != parsed.rows.size()) {
            throw corrtrack::ParseError(
                "feature sidecar has " + std::to_string(features.size()) +
                " rows for " + std::to_string(parsed.rows.size()) + " detections");
        }
    }

    std::vector<corrtrack::Detection> dets;
    dets.reserve(parsed.rows.size());
    for (std::size_t i = 0; i < parsed.rows.size(); ++i) {
        corrtrack::Detection det;
        det.frame = parsed.rows[i].frame;
        det.box = parsed.rows[i].box;
        det.confidence = parsed.rows[i].conf;
        if (!features.empty()) det.set_feature(features[i]);
        dets.push_back(std::move(det));
    }

    const auto t0 = std::chrono::steady_clock::now();
    corrtrack::TrackStats stats;
    const std::vector<corrtrack::MotRow> rows =
        corrtrack::track_sequence(dets, opt.cfg, &stats);
    const auto t1 = std::chrono::steady_clock::now();

    write_output(opt.out_path, corrtrack::write_mot_results(rows));

    const json summary{
        {"frames", stats.frames},
        {"rows", rows.size()},
        {"tracks_created", stats.created},
        {"tracks_removed", stats.removed},
        {"rejected_rows", parsed.rejected},
        {"wall_ms",
         std::chrono::duration<double, std::milli>(t1 - t0).count()}};
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

struct EvalOptions {
    std::string gt_path;
    std::string res_path;
    std::string format = "json";
};

int cmd_eval(const EvalOptions& opt) {
    std::ifstream gt_in = open_input(opt.gt_path);
    std::ifstream res_in = open_input(opt.res_path);
    const corrtrack::ParseResult gt = corrtrack::parse_mot_stream(gt_in);
    const corrtrack::ParseResult res = corrtrack::parse_mot_stream(res_in);
    const corrtrack::MotMetrics m = corrtrack::evaluate_clear_mot(gt.rows, res.rows);
    if (opt.format == "csv") {
        std::cout << corrtrack::metrics_to_csv(m);
    } else {
        std::cout << corrtrack::metrics_to_json(
            m, std::filesystem::path(opt.res_path).stem().string());
    }
    return kExitOk;
}

struct BenchOptions {
    std::vector<std::string> sizes{"64x64x16"};
    std::vector<int> radii{5};
    int dilation = 2;
    int levels = 1;
    int repeats = 5;
    std::string which = "both";
    std::string format = "csv";
};

corrtrack::BenchSize parse_bench_size(const std::string& text) {
    int h = 0, w = 0, c = 0;
    char extra = 0;
    if (std::sscanf(text.c_str(), "%dx%dx%d%c", &h, &w, &c, &extra) != 3 ||
        h < 1 || w < 1 || c < 1) {
        throw corrtrack::ParseError("bench size '" + text +
                                    "' is not of the form HxWxC");
    }
    corrtrack::BenchSize size;
    size.height = h;
    size.width = w;
    size.channels = c;
    return size;
}

int cmd_bench(const BenchOptions& opt) {
    std::vector<corrtrack::BenchSize> sizes;
    for (const std::string& text : opt.sizes) {
        const corrtrack::BenchSize base = parse_bench_size(text);
        // --levels benches the pyramid footprint: each level halves H and W.
        for (int l = 0; l < opt.levels; ++l) {
            corrtrack::BenchSize size = base;
            size.height = std::max(1, base.height >> l);
            size.width = std::max(1, base.width >> l);
            size.dilation = opt.dilation;
            for (int r : opt.radii) {
                size.radius = r;
                sizes.push_back(size);
            }
        }
    }

    std::vector<corrtrack::BenchRow> rows;
    if (opt.which == "local" || opt.which == "both") {
        const auto local = corrtrack::bench_operator(
            corrtrack::CorrOperator::local_correlation, sizes, opt.repeats);
        rows.insert(rows.end(), local.begin(), local.end());
    }
    if (opt.which == "nonlocal" || opt.which == "both") {
        const auto nl = corrtrack::bench_operator(corrtrack::CorrOperator::non_local,
                                                  sizes, opt.repeats);
        rows.insert(rows.end(), nl.begin(), nl.end());
    }

    if (opt.format == "json") {
        json out = json::array();
        for (const corrtrack::BenchRow& row : rows) {
            const double hw = static_cast<double>(row.size.height) * row.size.width;
            const double win2 = static_cast<double>(2 * row.size.radius + 1) *
                                (2 * row.size.radius + 1);
            out.push_back(json{{"operator", corrtrack::operator_name(row.op)},
                               {"h", row.size.height},
                               {"w", row.size.width},
                               {"c", row.size.channels},
                               {"r", row.size.radius},
                               {"flops", row.flops},
                               {"params", row.params},
                               {"median_ns", row.median_ns},
                               {"mem_bytes", row.mem_bytes},
                               {"ratio_flops", hw / win2},
                               {"ratio_grid", row.size.radius > 0
                                                  ? hw / (static_cast<double>(
                                                             row.size.radius) *
                                                          row.size.radius)
                                                  : 0.0}});
        }
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << corrtrack::bench_csv(rows);
    }
    return kExitOk;
}

struct GradcheckOptions {
    std::uint64_t seed = 1;
    std::string format = "text";
    std::string flip_component;
};

int cmd_gradcheck(const GradcheckOptions& opt) {
    const std::vector<corrtrack::GradCheckResult> results =
        corrtrack::run_gradcheck(opt.seed, opt.flip_component);
    bool all_pass = true;
    json components = json::array();
    for (const corrtrack::GradCheckResult& r : results) {
        const bool pass = r.max_rel_err < corrtrack::kGradCheckTolerance;
        all_pass = all_pass && pass;
        if (opt.format == "json") {
            components.push_back(json{{"component", r.component},
                                      {"max_rel_err", r.max_rel_err},
                                      {"pass", pass}});
        } else {
            std::printf("%-12s max_rel_err=%.3e %s\n", r.component.c_str(),
                        r.max_rel_err, pass ? "PASS" : "FAIL");
        }
        if (!pass) {
            std::fprintf(stderr, "gradient check failed for component '%s'\n",
                         r.component.c_str());
        }
    }
    if (opt.format == "json") {
        const json out{{"components", components},
                       {"tolerance", corrtrack::kGradCheckTolerance},
                       {"pass", all_pass}};
        std::cout << out.dump(2) << "\n";
    }
    return all_pass ? kExitOk : kExitCheckFailed;
}

struct ScenarioOptions {
    std::string spec_path;
    std::string gt_path;
    std::string dets_path;
    std::string features_path;
};

int cmd_scenario(const ScenarioOptions& opt) {
    std::ifstream spec_in = open_input(opt.spec_path);
    const corrtrack::ScenarioSpec spec = corrtrack::parse_scenario_spec(spec_in);
    const corrtrack::Scenario scenario = corrtrack::generate_scenario(spec);

    write_output(opt.gt_path, corrtrack::write_mot_results(scenario.gt));
    write_output(opt.dets_path, corrtrack::write_mot_detections(scenario.dets));
    if (!opt.features_path.empty()) {
        write_output(opt.features_path,
                     corrtrack::write_feature_sidecar(scenario.det_features));
    }

    const json summary{{"objects", spec.n_objects},
                       {"frames", spec.n_frames},
                       {"feature_mode", corrtrack::feature_mode_name(spec.feature_mode)},
                       {"gt_rows", scenario.gt.size()},
                       {"det_rows", scenario.dets.size()}};
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local-correlation multi-object tracking toolkit"};
    app.require_subcommand(1);

    TrackOptions track_opt;
    CLI::App* track = app.add_subcommand(
        "track", "Run the tracker over a MOTChallenge detection file");
    track->add_option("--dets", track_opt.dets_path, "detection file")->required();
    track->add_option("--features", track_opt.features_path,
                      "appearance sidecar (one vector per detection row)");
    track->add_option("--out", track_opt.out_path, "result file")->required();
    track->add_option("--alpha", track_opt.cfg.alpha, "IoU weight in the match cost");
    track->add_option("--tau-loss", track_opt.cfg.tau_loss,
                      "frames a lost track survives");
    track->add_option("--ema-beta", track_opt.cfg.ema_beta,
                      "appearance EMA update rate");
    track->add_option("--gate", track_opt.cfg.gate, "max admissible match cost");
    track->add_option("--min-conf", track_opt.cfg.min_confidence,
                      "detection confidence floor");

    EvalOptions eval_opt;
    CLI::App* eval = app.add_subcommand("eval", "Score a result file against GT");
    eval->add_option("--gt", eval_opt.gt_path, "ground-truth file")->required();
    eval->add_option("--res", eval_opt.res_path, "result file")->required();
    eval->add_option("--format", eval_opt.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));

    BenchOptions bench_opt;
    CLI::App* bench = app.add_subcommand(
        "bench", "Time local correlation against the all-pairs reference");
    bench->add_option("--sizes", bench_opt.sizes, "problem sizes as HxWxC");
    bench->add_option("--radius", bench_opt.radii, "window radii to sweep");
    bench->add_option("--dilation", bench_opt.dilation, "window dilation");
    bench->add_option("--levels", bench_opt.levels,
                      "bench each pyramid level (halving H and W)")
        ->check(CLI::PositiveNumber);
    bench->add_option("--repeats", bench_opt.repeats, "timing repeats (median)");
    bench->add_option("--which", bench_opt.which, "operators to run")
        ->check(CLI::IsMember({"local", "nonlocal", "both"}));
    bench->add_option("--format", bench_opt.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));

    GradcheckOptions grad_opt;
    CLI::App* grad = app.add_subcommand(
        "gradcheck", "Finite-difference check of every analytic gradient");
    grad->add_option("--seed", grad_opt.seed, "random seed");
    grad->add_option("--format", grad_opt.format, "output format")
        ->check(CLI::IsMember({"text", "json"}));
    grad->add_option("--flip-sign", grad_opt.flip_component,
                     "negate one analytic partial in this component (negative control)")
        ->group("");  // hidden test hook

    ScenarioOptions scen_opt;
    CLI::App* scen = app.add_subcommand(
        "scenario", "Generate a synthetic GT + detections pair from a spec");
    scen->add_option("--spec", scen_opt.spec_path, "key=value scenario config")
        ->required();
    scen->add_option("--gt", scen_opt.gt_path, "ground-truth output path")->required();
    scen->add_option("--dets", scen_opt.dets_path, "detections output path")
        ->required();
    scen->add_option("--features", scen_opt.features_path,
                     "feature sidecar output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitParseError;
    }

    try {
        if (track->parsed()) return cmd_track(track_opt);
        if (eval->parsed()) return cmd_eval(eval_opt);
        if (bench->parsed()) return cmd_bench(bench_opt);
        if (grad->parsed()) return cmd_gradcheck(grad_opt);
        if (scen->parsed()) return cmd_scenario(scen_opt);
    } catch (const MissingInput& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitMissingInput;
    } catch (const corrtrack::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kExitParseError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCheckFailed;
    }
    return kExitOk;
}
