#include <doctest.h>

#include <chrono>
#include <future>
#include <thread>

#include <httplib.h>

#include "arsent/errors.hpp"
#include "arsent/manifest.hpp"
#include "arsent/protocol.hpp"
#include "arsent/service.hpp"
#include "support.hpp"

using namespace arsent;
using nlohmann::json;

namespace {

const std::vector<ScenePair>& scenes() {
    static const auto pairs = load_manifest(testing::shared_scene_set() / "manifest.jsonl");
    return pairs;
}

const ScenePair& first_with(SceneLabel label) {
    for (const auto& p : scenes()) {
        if (p.truth->label == label) return p;
    }
    throw std::runtime_error("shared scene set lacks a label");
}

std::string analyze_body(const ScenePair& p, bool with_id = false) {
    json j = {{"raw", protocol::image_payload(p.raw)},
              {"ar", protocol::image_payload(p.ar)},
              {"content_mask", {{"rle", mask_to_rle_text(p.content_mask)}}}};
    if (with_id) j["id"] = p.id;
    return j.dump();
}

ServiceConfig service_config(const std::string& locator) {
    ServiceConfig c;
    c.port = 0;
    c.pipeline.set_locator(locator);
    return c;
}

/// Service listening on a background thread for the lifetime of the object.
struct RunningService {
    AnalysisService service;
    std::thread thread;
    httplib::Client client;

    explicit RunningService(ServiceConfig config)
        : service(std::move(config)), client("127.0.0.1", service.bind()) {
        thread = std::thread([this] { service.listen(); });
        while (!service.running()) std::this_thread::sleep_for(std::chrono::milliseconds(2));
        client.set_read_timeout(30, 0);
    }
    ~RunningService() {
        service.stop();
        thread.join();
    }
};

json strip_varying(json j) {
    j.erase("latency");
    j.erase("request_id");
    return j;
}

}  // namespace

TEST_CASE("health and redacted config") {
    auto cfg = service_config("oracle:" + testing::shared_scene_set().string());
    cfg.pipeline.endpoint(BackendKind::verdict).bearer_token = "very-secret";
    RunningService s(cfg);
    auto health = s.client.Get("/v1/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body)["status"] == "ok");
    auto config = s.client.Get("/v1/config");
    REQUIRE(config);
    CHECK(config->status == 200);
    CHECK(config->body.find("very-secret") == std::string::npos);
    CHECK(json::parse(config->body)["endpoints"]["verdict"]["bearer_token"] == "***");
    auto missing = s.client.Get("/v1/nothing");
    REQUIRE(missing);
    CHECK(missing->status == 404);
}

TEST_CASE("obstruction over HTTP") {
    RunningService s(service_config("oracle:" + testing::shared_scene_set().string()));
    const auto& attacked = first_with(SceneLabel::obstruction);
    auto res = s.client.Post("/v1/analyze/obstruction", analyze_body(attacked), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const auto j = json::parse(res->body);
    CHECK(j["verdict"]["attacked"] == true);
    CHECK(j["verdict"]["kind"] == "obstruction");
    CHECK(j["verdict"]["mitigation"] == "make_translucent");
    CHECK(j["status"] == "determined");
    CHECK(j["failure"].is_null());
    CHECK(j["request_id"].get<std::string>().rfind("req-", 0) == 0);

    auto again = s.client.Post("/v1/analyze/obstruction", analyze_body(attacked), "application/json");
    REQUIRE(again);
    const auto j2 = json::parse(again->body);
    CHECK(j2["request_id"] != j["request_id"]);
    CHECK(strip_varying(j2).dump() == strip_varying(j).dump());

    const auto& clean = first_with(SceneLabel::none);
    auto clear = s.client.Post("/v1/analyze/obstruction", analyze_body(clean, true), "application/json");
    REQUIRE(clear);
    const auto c = json::parse(clear->body);
    CHECK(c["verdict"]["attacked"] == false);
    CHECK(c["verdict"]["mitigation"] == "none");
    CHECK(c["scene_id"] == clean.id);
}

TEST_CASE("vim over HTTP") {
    RunningService s(service_config("oracle:" + testing::shared_scene_set().string()));
    const auto& vim = first_with(SceneLabel::vim);
    auto res = s.client.Post("/v1/analyze/vim", analyze_body(vim), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const auto j = json::parse(res->body);
    CHECK(j["verdict"]["attacked"] == true);
    CHECK(j["verdict"]["kind"] == "vim");
    CHECK(j["taxonomy"]["format"] == *vim.truth->vim_format);
    CHECK(j["template_id"] == "vim-diff-v1");
}

TEST_CASE("bad requests get 400") {
    RunningService s(service_config("oracle:" + testing::shared_scene_set().string()));
    const auto& p = scenes().front();
    auto body = json::parse(analyze_body(p));
    const std::vector<std::string> bad{
        "not json",
        "[]",
        json{{"raw", body["raw"]}, {"ar", body["ar"]}}.dump(),
        [&] { auto b = body; b["extra"] = 1; return b.dump(); }(),
        [&] { auto b = body; b["content_mask"]["rle"] = "3 3\n1,2"; return b.dump(); }(),
        [&] { auto b = body; b["raw"]["png_base64"] = "!!!"; return b.dump(); }(),
        [&] { auto b = body; b["content_mask"]["rle"] = mask_to_rle_text(RasterMask(8, 8)); return b.dump(); }(),
    };
    for (const auto& b : bad) {
        CAPTURE(b.substr(0, 60));
        auto res = s.client.Post("/v1/analyze/obstruction", b, "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
        CHECK(json::parse(res->body).contains("error"));
    }
}

TEST_CASE("backend down follows the fail policy") {
    const auto& p = first_with(SceneLabel::none);
    {
        auto cfg = service_config("http://127.0.0.1:1");
        cfg.fail_policy = FailPolicy::fail_closed;
        for (auto& ep : cfg.pipeline.endpoints) ep.timeout_ms = 500;
        RunningService s(cfg);
        auto res = s.client.Post("/v1/analyze/obstruction", analyze_body(p), "application/json");
        REQUIRE(res);
        CHECK(res->status == 200);
        const auto j = json::parse(res->body);
        CHECK(j["status"] == "undetermined-treat-as-attacked");
        CHECK(j["verdict"]["attacked"] == true);
        CHECK(j["verdict"]["mitigation"] == "make_translucent");
        CHECK(j["failure"]["stage"] == "keyobjects");
        CHECK(j["failure"]["policy"] == "fail_closed");

        auto vim = s.client.Post("/v1/analyze/vim", analyze_body(p), "application/json");
        REQUIRE(vim);
        CHECK(json::parse(vim->body)["status"] == "undetermined-treat-as-attacked");
        CHECK(json::parse(vim->body)["failure"]["stage"] == "ocr");
    }
    {
        auto cfg = service_config("http://127.0.0.1:1");
        cfg.fail_policy = FailPolicy::fail_open;
        RunningService s(cfg);
        auto res = s.client.Post("/v1/analyze/obstruction", analyze_body(p), "application/json");
        REQUIRE(res);
        const auto j = json::parse(res->body);
        CHECK(j["status"] == "undetermined-fail-open");
        CHECK(j["verdict"]["attacked"] == false);
        CHECK(j["verdict"]["kind"] == "none");
    }
}

TEST_CASE("requests over capacity get 429") {
    const auto dir = testing::shared_scene_set().string();
    auto cfg = service_config("oracle:" + dir);
    cfg.max_concurrent = 1;
    cfg.pipeline.endpoint(BackendKind::keyobjects).locator = "oracle:" + dir + "?delay_ms=600";
    RunningService s(cfg);
    const auto body = analyze_body(first_with(SceneLabel::obstruction));
    auto slow = std::async(std::launch::async, [&] {
        httplib::Client c("127.0.0.1", s.service.port());
        c.set_read_timeout(30, 0);
        auto r = c.Post("/v1/analyze/obstruction", body, "application/json");
        return r ? r->status : -1;
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    auto busy = s.client.Post("/v1/analyze/obstruction", body, "application/json");
    REQUIRE(busy);
    CHECK(busy->status == 429);
    CHECK(busy->get_header_value("Retry-After") == "1");
    CHECK(slow.get() == 200);
    auto after = s.client.Post("/v1/analyze/obstruction", body, "application/json");
    REQUIRE(after);
    CHECK(after->status == 200);
}

TEST_CASE("in-process analyze and invalid service config") {
    AnalysisService svc(service_config("oracle:" + testing::shared_scene_set().string()));
    const auto [status, body] = svc.analyze("obstruction", analyze_body(first_with(SceneLabel::obstruction)));
    CHECK(status == 200);
    CHECK(json::parse(body)["verdict"]["attacked"] == true);
    CHECK(svc.analyze("teleport", analyze_body(scenes().front())).first == 404);

    auto bad = service_config("");
    CHECK_THROWS_AS(AnalysisService{bad}, ConfigError);
}
