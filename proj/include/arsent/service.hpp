#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "arsent/backend.hpp"
#include "arsent/config.hpp"

namespace httplib {
class Server;
}

namespace arsent {

/// HTTP analysis service for AR clients.
///
///   POST /v1/analyze/obstruction   POST /v1/analyze/vim
///   GET  /v1/health                GET  /v1/config (secrets redacted)
///
/// Requests beyond max_concurrent get 429. stop() drains in-flight requests.
class AnalysisService {
public:
    explicit AnalysisService(ServiceConfig config);
    ~AnalysisService();
    AnalysisService(const AnalysisService&) = delete;
    AnalysisService& operator=(const AnalysisService&) = delete;

    /// Binds the configured address (port 0 picks a free one); returns the bound port.
    int bind();
    /// Blocks serving until stop().
    void listen();
    void stop();
    bool running() const;
    int port() const { return port_; }

    /// Handles one analyze body; exposed for in-process use and tests.
    /// Returns (HTTP status, JSON body).
    std::pair<int, std::string> analyze(std::string_view pipeline, const std::string& body);

private:
    ServiceConfig config_;
    BackendSet backends_;
    std::unique_ptr<httplib::Server> server_;
    std::atomic<int> in_flight_{0};
    std::atomic<std::uint64_t> next_request_id_{0};
    int port_ = 0;
};

/// Runs the service until SIGINT/SIGTERM. Returns a process exit code.
int serve(const ServiceConfig& config);

}  // namespace arsent
