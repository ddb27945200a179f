#include <doctest.h>

#include <sstream>

#include "arsent/cli.hpp"
#include "arsent/eval.hpp"
#include "arsent/manifest.hpp"
#include "support.hpp"

using namespace arsent;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string write_config(const testing::TempDir& dir, const std::filesystem::path& scenes) {
    const auto path = (dir / "config.json").string();
    write_text_file(path, json{{"backend", "oracle:" + scenes.string()}}.dump());
    return path;
}

}  // namespace

TEST_CASE("usage errors exit 2 with usage text") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {}, {"frobnicate"}, {"synth"}, {"eval", "--manifest", "/does/not/exist"}, {"--format", "xml", "synth", "--out", "x"},
             {"detect"}, {"synth", "--out", "x", "--count", "-3"}}) {
        const auto r = run(args);
        CAPTURE(args.size());
        CHECK(r.code == 2);
        CHECK(r.err.find("Usage:") != std::string::npos);
    }
    const auto help = run({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("detect") != std::string::npos);
}

TEST_CASE("synth writes the requested number of scenes") {
    testing::TempDir dir;
    const auto r = run({"--seed", "5", "synth", "--out", dir.path().string(), "--count", "50", "--parallelism", "2"});
    REQUIRE(r.code == 0);
    const auto pairs = load_manifest(dir / "manifest.jsonl");
    CHECK(pairs.size() == 50);

    testing::TempDir again;
    REQUIRE(run({"synth", "--seed", "5", "--out", again.path().string(), "--count", "50"}).code == 0);
    CHECK(read_file(dir / "scenes/scene_00049/ar.png") == read_file(again / "scenes/scene_00049/ar.png"));

    CHECK(run({"synth", "--out", dir.path().string(), "--mix", "none:0.7"}).code == 2);
    CHECK(run({"synth", "--out", dir.path().string(), "--glyphs", "~"}).code == 2);
}

TEST_CASE("detect exit codes follow the verdict") {
    testing::TempDir dir;
    const auto scenes = testing::shared_scene_set();
    const auto config = write_config(dir, scenes);
    const auto pairs = load_manifest(scenes / "manifest.jsonl");
    int attacked_seen = 0, clear_seen = 0;
    for (const auto& p : pairs) {
        if (p.truth->label == SceneLabel::vim) continue;
        const auto base = scenes / "scenes" / p.id;
        const auto r = run({"--config", config, "detect", "obstruction", "--raw", (base / "raw.png").string(), "--ar",
                            (base / "ar.png").string(), "--content-mask", (base / "content_mask.png").string(), "--id",
                            p.id});
        const bool attacked = p.truth->label == SceneLabel::obstruction;
        CHECK(r.code == (attacked ? 1 : 0));
        const auto j = json::parse(r.out);
        CHECK(j["verdict"]["attacked"] == attacked);
        CHECK(j["scene_id"] == p.id);
        (attacked ? attacked_seen : clear_seen)++;
        if (attacked_seen > 0 && clear_seen > 0) break;
    }
    CHECK(attacked_seen > 0);
    CHECK(clear_seen > 0);

    // RLE content masks and text output; the id is not needed to resolve the scene.
    for (const auto& p : pairs) {
        if (p.truth->label != SceneLabel::vim) continue;
        const auto base = scenes / "scenes" / p.id;
        write_text_file(dir / "mask.rle", mask_to_rle_text(p.content_mask));
        const auto r = run({"--config", config, "--format", "text", "detect", "vim", "--raw", (base / "raw.png").string(),
                            "--ar", (base / "ar.png").string(), "--content-mask", (dir / "mask.rle").string()});
        CHECK(r.code == 1);
        CHECK(r.out.find("ATTACKED (vim)") != std::string::npos);
        break;
    }

    const auto base = scenes / "scenes" / pairs.front().id;
    const auto no_backend = run({"detect", "vim", "--raw", (base / "raw.png").string(), "--ar", (base / "ar.png").string(),
                                 "--content-mask", (base / "content_mask.png").string()});
    CHECK(no_backend.code == 2);
}

TEST_CASE("eval prints a parseable report") {
    testing::TempDir dir;
    const auto scenes = testing::shared_scene_set();
    const auto config = write_config(dir, scenes);
    const auto r = run({"--config", config, "--format", "json", "eval", "--manifest", (scenes / "manifest.jsonl").string(),
                        "--pipeline", "vim", "--parallelism", "2"});
    REQUIRE(r.code == 0);
    const auto report = report_from_json(r.out);
    CHECK(report.pipeline == "vim");
    CHECK(report.n == 30);
    CHECK(*report.accuracy == 1.0);

    const auto text = run({"eval", "--config", config, "--manifest", (scenes / "manifest.jsonl").string()});
    REQUIRE(text.code == 0);
    CHECK(text.out.find("accuracy              100.00%") != std::string::npos);
    CHECK(text.out.find("config fingerprint") != std::string::npos);
}
