#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arsent/core.hpp"
#include "arsent/latency.hpp"

namespace arsent {

enum class BackendKind { keyobjects, detect, segment, ocr, verdict };

inline constexpr BackendKind kAllBackendKinds[] = {BackendKind::keyobjects, BackendKind::detect,
                                                   BackendKind::segment, BackendKind::ocr,
                                                   BackendKind::verdict};

std::string_view to_string(BackendKind k);
BackendKind parse_backend_kind(std::string_view s);
Stage stage_of(BackendKind k);
/// edge for detect/segment/ocr, cloud for keyobjects/verdict.
Tier default_tier(BackendKind k);

/// Largest response body accepted from any backend call.
inline constexpr std::size_t kMaxResponseBytes = 16u << 20;

struct BackendEndpoint {
    BackendKind kind = BackendKind::keyobjects;
    std::string locator;  // http(s)://host:port[/prefix] or oracle:<dir>?params
    int timeout_ms = 5000;
    Tier tier = Tier::edge;
    int retries = 0;
    std::string bearer_token;  // forwarded as Authorization header when set

    static BackendEndpoint with_defaults(BackendKind kind, std::string locator);
};

/// Seeded perturbations applied by oracle backends.
struct NoiseProfile {
    std::uint64_t seed = 0;
    double drop_object_prob = 0.0;
    int box_jitter_px = 0;
    double char_error_rate = 0.0;
    double verdict_flip_prob = 0.0;
    int delay_ms = 0;  // artificial per-call latency

    bool operator==(const NoiseProfile&) const = default;
};

struct SemanticVerdict {
    bool manipulated = false;
    double confidence = 0.0;
    std::string rationale;

    bool operator==(const SemanticVerdict&) const = default;
};

/// Transport-level model backend. Implementations answer raw requests; the
/// BackendClient wrapper enforces protocol postconditions and records latency.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;

    virtual std::vector<std::string> identify_key_objects(const ImageRef& image, const BackendEndpoint& ep) = 0;
    virtual std::vector<BoundingBox> detect(const ImageRef& image, const std::string& query,
                                            const BackendEndpoint& ep) = 0;
    virtual std::vector<RasterMask> segment(const ImageRef& image, const std::vector<BoundingBox>& boxes,
                                            const BackendEndpoint& ep) = 0;
    virtual std::vector<OcrToken> ocr(const ImageRef& image, const BackendEndpoint& ep) = 0;
    virtual SemanticVerdict semantic_verdict(const std::string& prompt, const std::vector<ImageRef>& images,
                                             const BackendEndpoint& ep) = 0;
};

/// Builds the transport for a locator (oracle: or http:).
std::shared_ptr<ModelBackend> make_backend(const std::string& locator);

/// One endpoint bound to its transport.
///
/// Every call checks the endpoint kind, records a (stage, tier) span per
/// attempt into the optional recorder, retries timeouts/transport failures up
/// to endpoint.retries, and normalizes the response:
///   keyobjects: deduplicated, order preserved
///   detect:     clipped to the image, sorted by descending score
///   segment:    one mask per box with image dimensions
///   ocr:        raster order (top-to-bottom, then left-to-right)
class BackendClient {
public:
    BackendClient(BackendEndpoint endpoint, std::shared_ptr<ModelBackend> backend);

    const BackendEndpoint& endpoint() const { return endpoint_; }
    ModelBackend& backend() const { return *backend_; }

    std::vector<std::string> identify_key_objects(const ImageRef& image, LatencyRecorder* trace = nullptr) const;
    std::vector<BoundingBox> detect(const ImageRef& image, const std::string& query,
                                    LatencyRecorder* trace = nullptr) const;
    std::vector<RasterMask> segment(const ImageRef& image, const std::vector<BoundingBox>& boxes,
                                    LatencyRecorder* trace = nullptr) const;
    std::vector<OcrToken> ocr(const ImageRef& image, LatencyRecorder* trace = nullptr) const;
    SemanticVerdict semantic_verdict(const std::string& prompt, const std::vector<ImageRef>& images,
                                     LatencyRecorder* trace = nullptr) const;

private:
    void require_kind(BackendKind kind) const;
    template <typename Fn>
    auto call(Fn&& fn, LatencyRecorder* trace) const;

    BackendEndpoint endpoint_;
    std::shared_ptr<ModelBackend> backend_;
};

/// The five endpoints a pipeline needs. Endpoints sharing a locator share one
/// transport instance (and, for oracles, one sidecar index and noise log).
class BackendSet {
public:
    explicit BackendSet(const std::array<BackendEndpoint, 5>& endpoints);

    const BackendClient& client(BackendKind kind) const;
    const BackendClient& keyobjects() const { return client(BackendKind::keyobjects); }
    const BackendClient& detector() const { return client(BackendKind::detect); }
    const BackendClient& segmenter() const { return client(BackendKind::segment); }
    const BackendClient& ocr() const { return client(BackendKind::ocr); }
    const BackendClient& verdict() const { return client(BackendKind::verdict); }

private:
    std::vector<BackendClient> clients_;
};

}  // namespace arsent
