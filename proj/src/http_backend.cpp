#include "arsent/http_backend.hpp"

#include <httplib.h>

#include <chrono>

#include "arsent/errors.hpp"
#include "arsent/protocol.hpp"

namespace arsent {

HttpBackend::HttpBackend(std::string base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("backend URL needs a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    scheme_host_port_ = base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

std::string HttpBackend::post(const std::string& route, const std::string& body, const BackendEndpoint& ep) const {
    httplib::Client client(scheme_host_port_);
    const auto timeout = std::chrono::milliseconds(ep.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Request req;
    req.method = "POST";
    req.path = prefix_ + route;
    req.body = body;
    req.set_header("Content-Type", "application/json");
    if (!ep.bearer_token.empty()) req.set_header("Authorization", "Bearer " + ep.bearer_token);

    std::string received;
    bool oversized = false;
    req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
        if (received.size() + len > kMaxResponseBytes) {
            oversized = true;
            return false;
        }
        received.append(data, len);
        return true;
    };

    const auto start = std::chrono::steady_clock::now();
    httplib::Response res;
    httplib::Error error = httplib::Error::Success;
    const bool ok = client.send(req, res, error);
    const auto elapsed_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();

    if (oversized) throw ProtocolError(route + ": response exceeds 16 MiB cap", excerpt_of(received));
    if (!ok) {
        if (error == httplib::Error::Read || error == httplib::Error::ConnectionTimeout ||
            error == httplib::Error::Write) {
            if (elapsed_ms >= ep.timeout_ms) {
                throw TimeoutError(route + ": timed out after " + std::to_string(elapsed_ms) + " ms", elapsed_ms);
            }
        }
        throw TransportError(route + ": " + httplib::to_string(error));
    }
    if (elapsed_ms > ep.timeout_ms) {
        throw TimeoutError(route + ": answered after deadline (" + std::to_string(elapsed_ms) + " ms)", elapsed_ms);
    }
    if (res.status != 200) {
        throw ProtocolError(route + ": HTTP status " + std::to_string(res.status), excerpt_of(received));
    }
    return received;
}

std::vector<std::string> HttpBackend::identify_key_objects(const ImageRef& image, const BackendEndpoint& ep) {
    return protocol::parse_keyobjects_response(post("/v1/keyobjects", protocol::keyobjects_request(image).dump(), ep));
}

std::vector<BoundingBox> HttpBackend::detect(const ImageRef& image, const std::string& query,
                                             const BackendEndpoint& ep) {
    return protocol::parse_detect_response(post("/v1/detect", protocol::detect_request(image, query).dump(), ep));
}

std::vector<RasterMask> HttpBackend::segment(const ImageRef& image, const std::vector<BoundingBox>& boxes,
                                             const BackendEndpoint& ep) {
    return protocol::parse_segment_response(post("/v1/segment", protocol::segment_request(image, boxes).dump(), ep));
}

std::vector<OcrToken> HttpBackend::ocr(const ImageRef& image, const BackendEndpoint& ep) {
    return protocol::parse_ocr_response(post("/v1/ocr", protocol::ocr_request(image).dump(), ep));
}

SemanticVerdict HttpBackend::semantic_verdict(const std::string& prompt, const std::vector<ImageRef>& images,
                                              const BackendEndpoint& ep) {
    return protocol::parse_verdict_response(post("/v1/verdict", protocol::verdict_request(prompt, images).dump(), ep));
}

}  // namespace arsent
