#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("corrtrack_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

RunResult run(const std::string& args) {
    const fs::path out_path = work_dir() / "stdout.txt";
    const fs::path err_path = work_dir() / "stderr.txt";
    const std::string cmd = std::string(CORRTRACK_BIN) + " " + args + " > " +
                            out_path.string() + " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    RunResult res;
    if (WIFEXITED(status)) res.code = WEXITSTATUS(status);
    res.out = slurp(out_path);
    res.err = slurp(err_path);
    return res;
}

// A two-object crossing scenario shared by the pipeline tests.
const char* kCrossingSpec =
    "objects = 2\n"
    "frames = 15\n"
    "feature_dim = 4\n"
    "feature_mode = orthogonal\n"
    "obj0.id = 1\n"
    "obj0.x = 0\n"
    "obj0.y = 10\n"
    "obj0.w = 10\n"
    "obj0.h = 10\n"
    "obj0.vx = 2\n"
    "obj1.id = 2\n"
    "obj1.x = 28\n"
    "obj1.y = 10\n"
    "obj1.w = 10\n"
    "obj1.h = 10\n"
    "obj1.vx = -2\n";

}  // namespace

TEST_CASE("bad invocations exit with the flag-misuse code") {
    CHECK(run("").code == 3);
    CHECK(run("explode").code == 3);
    CHECK(run("eval --gt only.txt").code == 3);  // missing required --res
    CHECK(run("--help").code == 0);
}

TEST_CASE("missing input files exit with their own code") {
    CHECK(run("track --dets /nonexistent/d.txt --out " +
              (work_dir() / "r.txt").string())
              .code == 2);
    CHECK(run("scenario --spec /nonexistent/s.cfg --gt g.txt --dets d.txt").code == 2);
}

TEST_CASE("parse failures exit with the parse code") {
    const fs::path bad = work_dir() / "bad_dets.txt";
    spit(bad, "1,2,3\n");
    const RunResult res = run("track --dets " + bad.string() + " --out " +
                              (work_dir() / "r.txt").string());
    CHECK(res.code == 3);
    CHECK(res.err.find("parse error") != std::string::npos);
}

TEST_CASE("scenario, track, and eval chain end to end") {
    const fs::path spec = work_dir() / "crossing.cfg";
    const fs::path gt = work_dir() / "gt.txt";
    const fs::path dets = work_dir() / "dets.txt";
    const fs::path feats = work_dir() / "feats.txt";
    const fs::path out = work_dir() / "result.txt";
    spit(spec, kCrossingSpec);

    const RunResult scen = run("scenario --spec " + spec.string() + " --gt " +
                               gt.string() + " --dets " + dets.string() +
                               " --features " + feats.string());
    REQUIRE(scen.code == 0);
    const nlohmann::json scen_summary = nlohmann::json::parse(scen.out);
    CHECK(scen_summary["objects"].get<int>() == 2);
    CHECK(scen_summary["gt_rows"].get<int>() == 30);
    CHECK(scen_summary["det_rows"].get<int>() == 30);
    CHECK(fs::exists(gt));
    CHECK(fs::exists(dets));
    CHECK(fs::exists(feats));

    const RunResult track = run("track --dets " + dets.string() + " --features " +
                                feats.string() + " --out " + out.string() +
                                " --alpha 0.5 --tau-loss 3");
    REQUIRE(track.code == 0);
    const nlohmann::json track_summary = nlohmann::json::parse(track.out);
    CHECK(track_summary["frames"].get<int>() == 15);
    CHECK(track_summary["tracks_created"].get<int>() >= 2);
    CHECK(fs::exists(out));

    const RunResult eval_json =
        run("eval --gt " + gt.string() + " --res " + out.string());
    REQUIRE(eval_json.code == 0);
    const nlohmann::json metrics = nlohmann::json::parse(eval_json.out);
    CHECK(metrics.contains("summary"));
    CHECK(metrics["summary"]["mota"].is_number());
    CHECK(metrics["sequences"][0]["name"].get<std::string>() == "result");

    const RunResult eval_csv =
        run("eval --gt " + gt.string() + " --res " + out.string() + " --format csv");
    REQUIRE(eval_csv.code == 0);
    CHECK(eval_csv.out.rfind("MOTA,IDF1,MT,ML,FP,FN,IDSW\n", 0) == 0);

    // The tracker is deterministic: identical invocations, identical bytes.
    const fs::path out2 = work_dir() / "result2.txt";
    const RunResult track2 = run("track --dets " + dets.string() + " --features " +
                                 feats.string() + " --out " + out2.string() +
                                 " --alpha 0.5 --tau-loss 3");
    REQUIRE(track2.code == 0);
    CHECK(slurp(out) == slurp(out2));
}

TEST_CASE("a mismatched feature sidecar is a parse failure") {
    const fs::path dets = work_dir() / "two_dets.txt";
    const fs::path feats = work_dir() / "one_feat.txt";
    spit(dets, "1,-1,0,0,5,5,1\n1,-1,20,0,5,5,1\n");
    spit(feats, "1 0\n");
    const RunResult res = run("track --dets " + dets.string() + " --features " +
                              feats.string() + " --out " +
                              (work_dir() / "r.txt").string());
    CHECK(res.code == 3);
}

TEST_CASE("bench emits one csv row per size, radius, and operator") {
    const RunResult res =
        run("bench --sizes 8x8x4 --radius 1 2 --repeats 3 --which both");
    REQUIRE(res.code == 0);
    std::istringstream lines(res.out);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line ==
          "operator,h,w,c,r,flops,params,median_ns,mem_bytes,ratio_flops,ratio_grid");
    int rows = 0;
    while (std::getline(lines, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4);  // 2 radii x 2 operators

    CHECK(run("bench --sizes 8x8").code == 3);
    CHECK(run("bench --which sideways").code == 3);
    CHECK(run("bench --sizes 8x8x4 --repeats 2").code == 1);  // below the floor
}

TEST_CASE("gradcheck passes, reruns identically, and flags sabotage") {
    const RunResult a = run("gradcheck --seed 7");
    REQUIRE(a.code == 0);
    const RunResult b = run("gradcheck --seed 7");
    CHECK(a.out == b.out);

    const RunResult json_run = run("gradcheck --seed 7 --format json");
    REQUIRE(json_run.code == 0);
    const nlohmann::json parsed = nlohmann::json::parse(json_run.out);
    CHECK(parsed["pass"].get<bool>());
    CHECK(parsed["components"].size() == 5);

    const RunResult flipped = run("gradcheck --seed 7 --flip-sign correlation");
    CHECK(flipped.code == 1);
    CHECK(flipped.err.find("correlation") != std::string::npos);
}
