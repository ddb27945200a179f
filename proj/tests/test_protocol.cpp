#include <doctest.h>

#include "arsent/codec.hpp"
#include "arsent/errors.hpp"
#include "arsent/http_backend.hpp"
#include "arsent/manifest.hpp"
#include "arsent/obstruction.hpp"
#include "arsent/oracle_backend.hpp"
#include "arsent/protocol.hpp"
#include "arsent/vim.hpp"
#include "mock_model_server.hpp"
#include "support.hpp"

using namespace arsent;
using nlohmann::json;

namespace {

ImageRef tiny_image() { return ImageRef::from_pixels("t", 4, 3, PixelBuffer(4 * 3 * 3, 200)); }

std::shared_ptr<OracleBackend> shared_oracle() {
    return std::make_shared<OracleBackend>(OracleLocator::parse("oracle:" + testing::shared_scene_set().string()));
}

std::vector<ScenePair> scenes() { return load_manifest(testing::shared_scene_set() / "manifest.jsonl"); }

BackendEndpoint http_ep(BackendKind kind, const std::string& url, int timeout_ms = 2000) {
    auto ep = BackendEndpoint::with_defaults(kind, url);
    ep.timeout_ms = timeout_ms;
    return ep;
}

}  // namespace

TEST_CASE("request bodies use the wire field names") {
    const auto img = tiny_image();
    const auto k = protocol::keyobjects_request(img);
    CHECK(k.size() == 1);
    const auto png = base64_decode(k.at("image").at("png_base64").get<std::string>());
    CHECK(decode_png_rgb(png).data == *img.rgb());

    const auto d = protocol::detect_request(img, "stop sign");
    CHECK(d.at("query") == "stop sign");
    const auto s = protocol::segment_request(img, {{1, 1, 2, 2, 0.5}});
    CHECK(s.at("boxes") == json::parse(R"([{"x":1,"y":1,"w":2,"h":2,"score":0.5}])"));
    const auto v = protocol::verdict_request("p", {img, img});
    CHECK(v.at("prompt") == "p");
    CHECK(v.at("images").size() == 2);
    CHECK(protocol::ocr_request(img).contains("image"));
}

TEST_CASE("responses roundtrip through the parsers") {
    CHECK(protocol::parse_keyobjects_response(protocol::keyobjects_response({"a", "b"}).dump()) ==
          std::vector<std::string>{"a", "b"});
    const std::vector<BoundingBox> boxes{{1, 2, 3, 4, 0.75}};
    CHECK(protocol::parse_detect_response(protocol::detect_response(boxes).dump()) == boxes);
    RasterMask m(5, 4);
    m.set(2, 2);
    CHECK(protocol::parse_segment_response(protocol::segment_response({m}).dump()) == std::vector<RasterMask>{m});
    const std::vector<OcrToken> tokens{{"EXIT", {0, 0, 4, 3, 1.0}, 0.9}};
    CHECK(protocol::parse_ocr_response(protocol::ocr_response(tokens).dump()) == tokens);
    const SemanticVerdict sv{true, 0.5, "why"};
    CHECK(protocol::parse_verdict_response(protocol::verdict_response(sv).dump()) == sv);
}

TEST_CASE("schema violations raise ProtocolError with an excerpt") {
    const char* bad_detect[] = {
        "not json",
        "[]",
        R"({"boxes": 3})",
        R"({"boxes": [{"x":1,"y":2,"w":3,"h":4}]})",               // score required
        R"({"boxes": [{"x":1,"y":2,"w":3,"h":4,"score":1.5}]})",   // score out of range
        R"({"boxes": [{"x":1.5,"y":2,"w":3,"h":4,"score":1}]})",   // non-integer coordinate
        R"({"boxes": [{"x":1,"y":2,"w":3,"h":4,"score":"1"}]})",
    };
    for (const char* body : bad_detect) {
        CAPTURE(body);
        CHECK_THROWS_AS(protocol::parse_detect_response(body), ProtocolError);
    }
    try {
        protocol::parse_verdict_response(R"({"manipulated":"yes","confidence":1,"rationale":""})");
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        CHECK(e.excerpt().find("manipulated") != std::string::npos);
    }
    CHECK_THROWS_AS(protocol::parse_segment_response(R"({"masks":[{"rle":"4 1\n1,2"}]})"), ProtocolError);
    CHECK_THROWS_AS(protocol::parse_ocr_response(R"({"tokens":[{"text":"A","box":{"x":0,"y":0,"w":1,"h":1}}]})"),
                    ProtocolError);
    CHECK_THROWS_AS(protocol::parse_keyobjects_response(R"({"objects":[1]})"), ProtocolError);
    CHECK_THROWS_AS(protocol::parse_image(json{{"png_base64", "@@@@"}}, "x"), ProtocolError);
}

TEST_CASE("HTTP transport answers like the oracle it fronts") {
    auto oracle = shared_oracle();
    testing::MockModelServer server(oracle);
    const auto http = std::make_shared<HttpBackend>(server.url());
    for (const auto& p : scenes()) {
        if (p.truth->key_objects.empty()) continue;
        const auto& k = p.truth->key_objects.front();
        CHECK(http->identify_key_objects(p.raw, http_ep(BackendKind::keyobjects, server.url())) ==
              oracle->identify_key_objects(p.raw, http_ep(BackendKind::keyobjects, "")));
        const auto boxes = http->detect(p.raw, k.name, http_ep(BackendKind::detect, server.url()));
        REQUIRE(boxes.size() == 1);
        CHECK(boxes[0].rect() == k.box.rect());
        CHECK(http->segment(p.raw, boxes, http_ep(BackendKind::segment, server.url())).front() == k.mask);
        CHECK(http->ocr(p.ar, http_ep(BackendKind::ocr, server.url())) == p.truth->ar_tokens);
        CHECK(http->semantic_verdict("x", {p.raw, p.ar}, http_ep(BackendKind::verdict, server.url())).manipulated ==
              (p.truth->label == SceneLabel::vim));
        break;
    }
}

TEST_CASE("HTTP pipelines match oracle pipelines") {
    testing::MockModelServer server(shared_oracle());
    PipelineConfig http_cfg;
    http_cfg.set_locator(server.url());
    const auto oracle_cfg = testing::oracle_config(testing::shared_scene_set());
    int checked = 0;
    for (const auto& p : scenes()) {
        if (checked++ == 6) break;
        CHECK(detect_obstruction(p, http_cfg).verdict == detect_obstruction(p, oracle_cfg).verdict);
        const auto a = detect_vim(p, http_cfg);
        const auto b = detect_vim(p, oracle_cfg);
        CHECK(a.verdict == b.verdict);
        CHECK(a.prompt == b.prompt);
    }
}

TEST_CASE("HTTP faults surface as protocol errors") {
    testing::MockModelServer server(shared_oracle());
    HttpBackend http(server.url());
    const auto p = scenes().front();
    const auto box = p.truth->key_objects.front().box;

    for (auto fault : {testing::Fault::not_json, testing::Fault::missing_field, testing::Fault::wrong_type,
                       testing::Fault::status_500, testing::Fault::oversize}) {
        server.set_fault(fault);
        CAPTURE(static_cast<int>(fault));
        CHECK_THROWS_AS(http.ocr(p.raw, http_ep(BackendKind::ocr, server.url())), ProtocolError);
    }
    server.set_fault(testing::Fault::bad_rle);
    CHECK_THROWS_WITH_AS(http.segment(p.raw, {box}, http_ep(BackendKind::segment, server.url())),
                         doctest::Contains("malformed RLE"), ProtocolError);

    server.set_fault(testing::Fault::extra_mask);
    BackendClient seg(http_ep(BackendKind::segment, server.url()), std::make_shared<HttpBackend>(server.url()));
    CHECK_THROWS_WITH_AS(seg.segment(p.raw, {box}), doctest::Contains("masks for"), ProtocolError);

    server.set_fault(testing::Fault::status_500);
    auto ep = http_ep(BackendKind::ocr, server.url());
    ep.retries = 3;
    BackendClient ocr(ep, std::make_shared<HttpBackend>(server.url()));
    const int before = server.requests();
    CHECK_THROWS_AS(ocr.ocr(p.raw), ProtocolError);
    CHECK(server.requests() - before == 1);  // protocol errors are not retried
}

TEST_CASE("HTTP timeouts, unreachable hosts, bearer tokens and prefixes") {
    testing::MockModelServer server(shared_oracle());
    const auto p = scenes().front();

    server.set_fault(testing::Fault::slow, 400);
    HttpBackend http(server.url());
    try {
        http.ocr(p.raw, http_ep(BackendKind::ocr, server.url(), 100));
        FAIL("expected timeout");
    } catch (const TimeoutError& e) {
        CHECK(e.elapsed_ms() >= 100);
    }
    server.set_fault(testing::Fault::none);

    const std::string dead = "http://127.0.0.1:1";  // nothing listens on port 1
    auto ep = http_ep(BackendKind::ocr, dead, 500);
    ep.retries = 1;
    BackendClient client(ep, std::make_shared<HttpBackend>(dead));
    LatencyRecorder rec;
    CHECK_THROWS_AS(client.ocr(p.raw, &rec), TransportError);
    CHECK(rec.snapshot().spans.size() == 2);

    auto authed = http_ep(BackendKind::ocr, server.url());
    authed.bearer_token = "s3cret";
    HttpBackend(server.url() + "/").ocr(p.raw, authed);
    CHECK(server.last_authorization() == "Bearer s3cret");

    HttpBackend prefixed(server.url() + "/models/");
    CHECK_THROWS_AS(prefixed.ocr(p.raw, http_ep(BackendKind::ocr, server.url())), ProtocolError);  // 404
    CHECK(server.last_path() == "/models/v1/ocr");
}
