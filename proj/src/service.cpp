#include "arsent/service.hpp"

#include <csignal>
#include <iostream>
#include <thread>

#include <httplib.h>
#include <pthread.h>

#include <nlohmann/json.hpp>

#include "arsent/errors.hpp"
#include "arsent/obstruction.hpp"
#include "arsent/protocol.hpp"
#include "arsent/serialization.hpp"
#include "arsent/vim.hpp"

namespace arsent {

using json = nlohmann::json;

namespace {

std::string error_body(const std::string& message) { return json{{"error", message}}.dump(); }

/// Scenes without an explicit id are named after the raw image content, so
/// identical requests produce identical reports.
ScenePair parse_analyze_request(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("request is not JSON: ") + e.what(), excerpt_of(body));
    }
    if (!j.is_object()) throw ProtocolError("request must be a JSON object", excerpt_of(body));
    for (const auto& [key, _] : j.items()) {
        if (key != "raw" && key != "ar" && key != "content_mask" && key != "id") {
            throw ProtocolError("unknown request field '" + key + "'");
        }
    }
    for (const char* key : {"raw", "ar", "content_mask"}) {
        if (!j.contains(key)) throw ProtocolError(std::string("missing field '") + key + "'");
    }
    ScenePair pair;
    if (j.contains("id")) {
        if (!j["id"].is_string() || j["id"].get<std::string>().empty()) throw ProtocolError("id must be a non-empty string");
        pair.id = j["id"].get<std::string>();
    }
    pair.raw = protocol::parse_image(j["raw"], "");
    pair.ar = protocol::parse_image(j["ar"], "");
    if (pair.id.empty()) pair.id = "img-" + pair.raw.digest().substr(0, 16);
    pair.raw.id = pair.id + "/raw";
    pair.ar.id = pair.id + "/ar";
    const auto& cm = j["content_mask"];
    if (!cm.is_object() || !cm.contains("rle") || !cm["rle"].is_string()) {
        throw ProtocolError("content_mask must be {\"rle\": string}");
    }
    pair.content_mask = mask_from_rle_text(cm["rle"].get<std::string>());
    return pair;
}

}  // namespace

AnalysisService::AnalysisService(ServiceConfig config)
    : config_((config.validate(), std::move(config))), backends_(config_.pipeline.endpoints),
      server_(std::make_unique<httplib::Server>()) {
    const auto threads = static_cast<std::size_t>(config_.max_concurrent) + 4;
    server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    const auto timeout_s = std::max(1, config_.request_timeout_ms / 1000);
    server_->set_read_timeout(timeout_s, 0);
    server_->set_write_timeout(timeout_s, 0);
    server_->set_payload_max_length(64u << 20);

    server_->Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });
    server_->Get("/v1/config", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(to_json(config_, true).dump(), "application/json");
    });
    for (const char* pipeline : {"obstruction", "vim"}) {
        server_->Post(std::string("/v1/analyze/") + pipeline,
                      [this, pipeline](const httplib::Request& req, httplib::Response& res) {
                          if (in_flight_.fetch_add(1) >= config_.max_concurrent) {
                              in_flight_.fetch_sub(1);
                              res.status = 429;
                              res.set_header("Retry-After", "1");
                              res.set_content(error_body("too many concurrent requests"), "application/json");
                              return;
                          }
                          struct Release {
                              std::atomic<int>& n;
                              ~Release() { n.fetch_sub(1); }
                          } release{in_flight_};
                          auto [status, body] = analyze(pipeline, req.body);
                          res.status = status;
                          res.set_content(body, "application/json");
                      });
    }
}

AnalysisService::~AnalysisService() { stop(); }

int AnalysisService::bind() {
    if (config_.port == 0) {
        port_ = server_->bind_to_any_port(config_.host);
    } else if (server_->bind_to_port(config_.host, config_.port)) {
        port_ = config_.port;
    } else {
        port_ = -1;
    }
    if (port_ < 0) throw Error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    return port_;
}

void AnalysisService::listen() {
    if (port_ <= 0) bind();
    server_->listen_after_bind();
}

void AnalysisService::stop() {
    if (server_) server_->stop();
}

bool AnalysisService::running() const { return server_ && server_->is_running(); }

std::pair<int, std::string> AnalysisService::analyze(std::string_view pipeline, const std::string& body) {
    const std::string request_id = "req-" + std::to_string(next_request_id_.fetch_add(1) + 1);
    ScenePair pair;
    try {
        pair = parse_analyze_request(body);
        if (const auto v = validate_scene_pair(pair, config_.pipeline.validation()); !v.empty()) {
            throw ProtocolError("invalid scene: " + v.front());
        }
    } catch (const Error& e) {
        return {400, error_body(e.what())};
    }

    const bool attacked_on_failure = config_.fail_policy == FailPolicy::fail_closed;
    const std::string failed_status(attacked_on_failure ? kStatusUndeterminedAttacked : kStatusUndeterminedClear);
    json out;
    try {
        if (pipeline == "obstruction") {
            ObstructionReport report;
            try {
                report = detect_obstruction(pair, config_.pipeline, backends_);
            } catch (const PipelineError& e) {
                report = {};
                report.scene_id = pair.id;
                report.verdict = failure_verdict(AttackKind::obstruction, config_.fail_policy, e);
                report.status = failed_status;
                report.failure = StageFailure{e.stage(), e.cause(), config_.fail_policy};
            }
            out = to_json(report);
        } else if (pipeline == "vim") {
            VimReport report;
            try {
                report = detect_vim(pair, config_.pipeline, backends_);
            } catch (const PipelineError& e) {
                report = {};
                report.scene_id = pair.id;
                report.verdict = failure_verdict(AttackKind::vim, config_.fail_policy, e);
                report.status = failed_status;
                report.failure = StageFailure{e.stage(), e.cause(), config_.fail_policy};
            }
            out = to_json(report);
        } else {
            return {404, error_body("unknown pipeline '" + std::string(pipeline) + "'")};
        }
    } catch (const DimensionError& e) {
        return {400, error_body(e.what())};
    } catch (const std::exception& e) {
        return {500, error_body(e.what())};
    }
    out["request_id"] = request_id;
    return {200, out.dump()};
}

int serve(const ServiceConfig& config) {
    // Route SIGINT/SIGTERM to a waiter thread; every other thread inherits the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    AnalysisService service(config);
    const int port = service.bind();
    std::cerr << "arsent: listening on " << config.host << ":" << port << "\n";
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        std::cerr << "arsent: shutting down\n";
        service.stop();
    });
    service.listen();
    // listen() can return without a signal (e.g. socket error); wake the waiter.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

}  // namespace arsent
