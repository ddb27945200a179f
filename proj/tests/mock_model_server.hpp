#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>

#include "arsent/backend.hpp"
#include "arsent/protocol.hpp"

namespace testing {

/// Faults the mock model server can inject into its answers.
enum class Fault { none, not_json, missing_field, wrong_type, bad_rle, extra_mask, status_500, oversize, slow };

/// Speaks the backend wire protocol on a local port, answering from any ModelBackend
/// (normally an oracle). Used to exercise the HTTP transport end to end.
class MockModelServer {
public:
    explicit MockModelServer(std::shared_ptr<arsent::ModelBackend> backend) : backend_(std::move(backend)) {
        using arsent::BackendKind;
        using nlohmann::json;
        namespace protocol = arsent::protocol;
        route("/v1/keyobjects", BackendKind::keyobjects, [this](const json& req, const arsent::BackendEndpoint& ep) {
            return protocol::keyobjects_response(
                backend_->identify_key_objects(protocol::parse_image(req.at("image"), ""), ep));
        });
        route("/v1/detect", BackendKind::detect, [this](const json& req, const arsent::BackendEndpoint& ep) {
            return protocol::detect_response(backend_->detect(protocol::parse_image(req.at("image"), ""),
                                                              req.at("query").get<std::string>(), ep));
        });
        route("/v1/segment", BackendKind::segment, [this](const json& req, const arsent::BackendEndpoint& ep) {
            std::vector<arsent::BoundingBox> boxes;
            for (const auto& b : req.at("boxes")) boxes.push_back(protocol::parse_box(b, false));
            return protocol::segment_response(backend_->segment(protocol::parse_image(req.at("image"), ""), boxes, ep));
        });
        route("/v1/ocr", BackendKind::ocr, [this](const json& req, const arsent::BackendEndpoint& ep) {
            return protocol::ocr_response(backend_->ocr(protocol::parse_image(req.at("image"), ""), ep));
        });
        route("/v1/verdict", BackendKind::verdict, [this](const json& req, const arsent::BackendEndpoint& ep) {
            std::vector<arsent::ImageRef> images;
            for (const auto& i : req.at("images")) images.push_back(protocol::parse_image(i, ""));
            return protocol::verdict_response(backend_->semantic_verdict(req.at("prompt").get<std::string>(), images, ep));
        });
        server_.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response&) {
            std::lock_guard lock(mutex_);
            last_path_ = req.path;
            return httplib::Server::HandlerResponse::Unhandled;
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockModelServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int port() const { return port_; }

    void set_fault(Fault fault, int slow_ms = 0) {
        fault_ = fault;
        slow_ms_ = slow_ms;
    }
    int requests() const { return requests_; }
    std::string last_authorization() const {
        std::lock_guard lock(mutex_);
        return last_authorization_;
    }
    std::string last_path() const {
        std::lock_guard lock(mutex_);
        return last_path_;
    }

private:
    template <typename Fn>
    void route(const std::string& path, arsent::BackendKind kind, Fn fn) {
        server_.Post(path, [this, kind, fn](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            {
                std::lock_guard lock(mutex_);
                last_authorization_ = req.get_header_value("Authorization");
            }
            const Fault fault = fault_;
            if (fault == Fault::slow) std::this_thread::sleep_for(std::chrono::milliseconds(slow_ms_.load()));
            switch (fault) {
                case Fault::not_json: res.set_content("<html>oops</html>", "text/html"); return;
                case Fault::status_500: res.status = 500; res.set_content(R"({"error":"boom"})", "application/json"); return;
                case Fault::oversize: res.set_content(std::string((16u << 20) + 1024, ' '), "application/json"); return;
                default: break;
            }
            auto ep = arsent::BackendEndpoint::with_defaults(kind, "mock");
            nlohmann::json body;
            try {
                body = fn(nlohmann::json::parse(req.body), ep);
            } catch (const std::exception& e) {
                res.status = 400;
                res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
                return;
            }
            if (fault == Fault::missing_field) body.erase(body.begin());
            if (fault == Fault::wrong_type) body[body.begin().key()] = "not the right type";
            if (fault == Fault::bad_rle && body.contains("masks")) {
                for (auto& m : body["masks"]) m["rle"] = "4 1\n1,2";
            }
            if (fault == Fault::extra_mask && body.contains("masks")) body["masks"].push_back({{"rle", "1 1\n1"}});
            res.set_content(body.dump(), "application/json");
        });
    }

    std::shared_ptr<arsent::ModelBackend> backend_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<Fault> fault_{Fault::none};
    std::atomic<int> slow_ms_{0};
    std::atomic<int> requests_{0};
    mutable std::mutex mutex_;
    std::string last_authorization_;
    std::string last_path_;
};

}  // namespace testing
