#include <doctest.h>

#include <algorithm>

#include "arsent/errors.hpp"
#include "arsent/manifest.hpp"
#include "arsent/obstruction.hpp"
#include "support.hpp"

using namespace arsent;

namespace {

const std::vector<ScenePair>& scenes() {
    static const auto pairs = load_manifest(testing::shared_scene_set() / "manifest.jsonl");
    return pairs;
}

KeyObject object(const std::string& name, PixelRect r, int w = 100, int h = 100) {
    return {name, {r.x, r.y, r.w, r.h, 1.0}, RasterMask::from_rect(w, h, r)};
}

}  // namespace

TEST_CASE("measures per object") {
    const auto content = RasterMask::from_rect(100, 100, {0, 0, 5, 100});
    const std::vector<KeyObject> objects{object("half", {0, 0, 10, 10})};
    const auto r = detections_to_measures(objects, content, 0.3);
    REQUIRE(r.size() == 1);
    REQUIRE(r[0].measure);
    CHECK(r[0].measure->ratio == 0.5);
    CHECK(r[0].measure->flagged);
    CHECK_FALSE(detections_to_measures(objects, content, 1.0)[0].measure->flagged);
    CHECK(detections_to_measures({}, content, 0.3).empty());

    const std::vector<KeyObject> empty_mask{{"ghost", {0, 0, 5, 5, 1.0}, RasterMask(100, 100)}};
    const auto invalid = detections_to_measures(empty_mask, content, 0.3);
    CHECK_FALSE(invalid[0].measure);
    CHECK(invalid[0].invalid_reason == "empty key object mask");

    const std::vector<KeyObject> wrong_size{object("x", {0, 0, 5, 5}, 50, 50)};
    CHECK_THROWS_AS(detections_to_measures(wrong_size, content, 0.3), DimensionError);
}

TEST_CASE("aggregation is OR, ignores invalid objects, and is order independent") {
    const auto content = RasterMask::from_rect(100, 100, {0, 0, 50, 100});
    std::vector<KeyObject> objects{object("a", {60, 0, 10, 10}), object("b", {40, 0, 20, 10}),
                                   {"c", {0, 0, 1, 1, 1.0}, RasterMask(100, 100)}, object("d", {0, 50, 10, 10})};
    std::vector<std::string> names{"a", "b", "c", "d"};
    const auto results = detections_to_measures(objects, content, 0.3);
    const auto v = aggregate_obstruction(results, names);
    CHECK(v.attacked);
    CHECK(v.kind == AttackKind::obstruction);
    CHECK(v.mitigation == Mitigation::make_translucent);
    CHECK(v.confidence == 1.0);

    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        std::vector<std::size_t> order{0, 1, 2, 3};
        for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
        std::vector<MeasureResult> r2;
        std::vector<std::string> n2;
        for (auto k : order) {
            r2.push_back(results[k]);
            n2.push_back(names[k]);
        }
        CHECK(aggregate_obstruction(r2, n2) == v);
    }

    const std::vector<MeasureResult> clear_results{results[0]};
    const auto c = aggregate_obstruction(clear_results, std::vector<std::string>{"a"});
    CHECK_FALSE(c.attacked);
    CHECK(c.kind == AttackKind::none);
    CHECK(c.mitigation == Mitigation::none);
    CHECK(c.confidence == 1.0);
}

TEST_CASE("perfect oracles reproduce labels and measures") {
    const auto cfg = testing::oracle_config(testing::shared_scene_set());
    for (const auto& p : scenes()) {
        const auto report = detect_obstruction(p, cfg);
        CAPTURE(p.id);
        CHECK(report.scene_id == p.id);
        REQUIRE(report.verdict.attacked == (p.truth->label == SceneLabel::obstruction));
        CHECK(validate_verdict(report.verdict).empty());
        CHECK(report.per_object.size() == p.truth->key_objects.size());
        for (const auto& f : report.per_object) {
            const bool target = std::count(p.truth->targets.begin(), p.truth->targets.end(), f.name) > 0;
            REQUIRE(f.result.measure);
            CHECK(f.result.measure->flagged == target);
            CHECK(f.result.measure->ratio == obstruction_ratio(f.mask, p.content_mask));
        }
        // One keyobjects call, one detect per object, one batched segment, one local step.
        CHECK(report.latency.count(Stage::keyobjects) == 1);
        CHECK(report.latency.count(Stage::detect) == p.truth->key_objects.size());
        CHECK(report.latency.count(Stage::segment) == 1);
        CHECK(report.latency.count(Stage::local_compute) == 1);
        CHECK(report.latency.busy_ns() <= report.latency.wall_ns);
    }
}

TEST_CASE("verdict is monotone in the threshold") {
    for (const auto& p : scenes()) {
        bool previous = true;
        for (int t = 1; t <= 10; ++t) {
            auto cfg = testing::oracle_config(testing::shared_scene_set());
            cfg.threshold = t / 10.0;
            const bool attacked = detect_obstruction(p, cfg).verdict.attacked;
            CHECK((previous || !attacked));
            previous = attacked;
        }
    }
}

TEST_CASE("no key objects and low-score detections") {
    const auto& p = scenes().front();
    const auto dropped = testing::oracle_config(testing::shared_scene_set(), "?drop_object_prob=1");
    const auto report = detect_obstruction(p, dropped);
    CHECK_FALSE(report.verdict.attacked);
    CHECK(report.verdict.rationale == "no key objects identified");

    auto strict = testing::oracle_config(testing::shared_scene_set());
    strict.min_detection_score = 1.0;
    CHECK(detect_obstruction(p, strict).unlocalized.empty());  // oracle scores are exactly 1.0

    auto capped = testing::oracle_config(testing::shared_scene_set());
    capped.max_key_objects = 1;
    for (const auto& s : scenes()) CHECK(detect_obstruction(s, capped).per_object.size() <= 1);
}

TEST_CASE("backend failures name the stage") {
    const auto& p = scenes().front();
    auto cfg = testing::oracle_config(testing::shared_scene_set());
    cfg.endpoint(BackendKind::detect).locator = "oracle:" + testing::shared_scene_set().string() + "?delay_ms=50";
    cfg.endpoint(BackendKind::detect).timeout_ms = 5;
    try {
        detect_obstruction(p, cfg);
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "detect");
        const auto closed = failure_verdict(AttackKind::obstruction, FailPolicy::fail_closed, e);
        CHECK(closed.attacked);
        CHECK(closed.mitigation == Mitigation::make_translucent);
        CHECK(closed.rationale.rfind("undetermined-treat-as-attacked", 0) == 0);
        const auto open = failure_verdict(AttackKind::obstruction, FailPolicy::fail_open, e);
        CHECK_FALSE(open.attacked);
        CHECK(validate_verdict(open).empty());
    }

    auto bad = testing::oracle_config(testing::shared_scene_set());
    bad.threshold = 1.5;
    CHECK_THROWS_AS(detect_obstruction(p, bad), ConfigError);

    auto broken = p;
    broken.content_mask = RasterMask(3, 3);
    CHECK_THROWS_AS(detect_obstruction(broken, testing::oracle_config(testing::shared_scene_set())), Error);
}
