#include "arsent/backend.hpp"

#include <algorithm>
#include <unordered_set>

#include "arsent/errors.hpp"
#include "arsent/http_backend.hpp"
#include "arsent/oracle_backend.hpp"

namespace arsent {

namespace {
constexpr std::string_view kKindNames[] = {"keyobjects", "detect", "segment", "ocr", "verdict"};

bool has_line_break(const std::string& s) { return s.find_first_of("\r\n") != std::string::npos; }

/// Clips to the image; nullopt when nothing is left.
std::optional<BoundingBox> clip(const BoundingBox& b, int w, int h) {
    const int x0 = std::clamp(b.x, 0, w);
    const int y0 = std::clamp(b.y, 0, h);
    const int x1 = std::clamp(b.x + b.w, 0, w);
    const int y1 = std::clamp(b.y + b.h, 0, h);
    if (x1 <= x0 || y1 <= y0) return std::nullopt;
    return BoundingBox{x0, y0, x1 - x0, y1 - y0, b.score};
}

void check_unit(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ProtocolError(std::string(what) + " outside [0,1]");
}

}  // namespace

std::string_view to_string(BackendKind k) { return kKindNames[static_cast<int>(k)]; }

BackendKind parse_backend_kind(std::string_view s) {
    for (int i = 0; i < 5; ++i) {
        if (kKindNames[i] == s) return static_cast<BackendKind>(i);
    }
    throw Error("unknown backend kind '" + std::string(s) + "'");
}

Stage stage_of(BackendKind k) {
    switch (k) {
        case BackendKind::keyobjects: return Stage::keyobjects;
        case BackendKind::detect: return Stage::detect;
        case BackendKind::segment: return Stage::segment;
        case BackendKind::ocr: return Stage::ocr;
        case BackendKind::verdict: return Stage::verdict;
    }
    return Stage::local_compute;
}

Tier default_tier(BackendKind k) {
    return (k == BackendKind::keyobjects || k == BackendKind::verdict) ? Tier::cloud : Tier::edge;
}

BackendEndpoint BackendEndpoint::with_defaults(BackendKind kind, std::string locator) {
    BackendEndpoint ep;
    ep.kind = kind;
    ep.locator = std::move(locator);
    ep.tier = default_tier(kind);
    ep.timeout_ms = kind == BackendKind::verdict || kind == BackendKind::keyobjects ? 30000 : 5000;
    return ep;
}

std::shared_ptr<ModelBackend> make_backend(const std::string& locator) {
    if (locator.rfind("oracle:", 0) == 0) return std::make_shared<OracleBackend>(OracleLocator::parse(locator));
    if (locator.rfind("http://", 0) == 0 || locator.rfind("https://", 0) == 0) {
        return std::make_shared<HttpBackend>(locator);
    }
    throw ConfigError("unsupported backend locator '" + locator + "' (expected oracle: or http://)");
}

BackendClient::BackendClient(BackendEndpoint endpoint, std::shared_ptr<ModelBackend> backend)
    : endpoint_(std::move(endpoint)), backend_(std::move(backend)) {
    if (endpoint_.timeout_ms <= 0) throw ConfigError("endpoint timeout must be > 0");
    if (!backend_) throw ConfigError("endpoint has no backend");
}

void BackendClient::require_kind(BackendKind kind) const {
    if (endpoint_.kind != kind) {
        throw Error("endpoint kind is " + std::string(to_string(endpoint_.kind)) + ", call needs " +
                    std::string(to_string(kind)));
    }
}

template <typename Fn>
auto BackendClient::call(Fn&& fn, LatencyRecorder* trace) const {
    for (int attempt = 0;; ++attempt) {
        try {
            ScopedSpan span(trace, stage_of(endpoint_.kind), endpoint_.tier);
            return fn();
        } catch (const TimeoutError&) {
            if (attempt >= endpoint_.retries) throw;
        } catch (const TransportError&) {
            if (attempt >= endpoint_.retries) throw;
        }
    }
}

std::vector<std::string> BackendClient::identify_key_objects(const ImageRef& image, LatencyRecorder* trace) const {
    require_kind(BackendKind::keyobjects);
    auto names = call([&] { return backend_->identify_key_objects(image, endpoint_); }, trace);
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto& n : names) {
        if (n.empty() || has_line_break(n)) throw ProtocolError("invalid key object name", excerpt_of(n));
        if (seen.insert(n).second) out.push_back(std::move(n));
    }
    return out;
}

std::vector<BoundingBox> BackendClient::detect(const ImageRef& image, const std::string& query,
                                               LatencyRecorder* trace) const {
    require_kind(BackendKind::detect);
    if (query.empty()) throw Error("detect: query must be non-empty");
    auto boxes = call([&] { return backend_->detect(image, query, endpoint_); }, trace);
    std::vector<BoundingBox> out;
    for (const auto& b : boxes) {
        check_unit(b.score, "detection score");
        if (auto c = clip(b, image.width, image.height)) out.push_back(*c);
    }
    std::stable_sort(out.begin(), out.end(), [](const BoundingBox& a, const BoundingBox& b) { return a.score > b.score; });
    return out;
}

std::vector<RasterMask> BackendClient::segment(const ImageRef& image, const std::vector<BoundingBox>& boxes,
                                               LatencyRecorder* trace) const {
    require_kind(BackendKind::segment);
    for (const auto& b : boxes) {
        if (!b.fits(image.width, image.height)) throw Error("segment: box outside image");
    }
    if (boxes.empty()) return {};
    auto masks = call([&] { return backend_->segment(image, boxes, endpoint_); }, trace);
    if (masks.size() != boxes.size()) {
        throw ProtocolError("segment: " + std::to_string(masks.size()) + " masks for " + std::to_string(boxes.size()) +
                            " boxes");
    }
    for (const auto& m : masks) {
        if (m.width() != image.width || m.height() != image.height) {
            throw ProtocolError("segment: mask dimensions differ from image");
        }
    }
    return masks;
}

std::vector<OcrToken> BackendClient::ocr(const ImageRef& image, LatencyRecorder* trace) const {
    require_kind(BackendKind::ocr);
    auto tokens = call([&] { return backend_->ocr(image, endpoint_); }, trace);
    std::vector<OcrToken> out;
    for (auto& t : tokens) {
        if (t.text.empty() || has_line_break(t.text)) throw ProtocolError("invalid OCR token text", excerpt_of(t.text));
        check_unit(t.confidence, "OCR confidence");
        if (auto c = clip(t.box, image.width, image.height)) {
            t.box = *c;
            out.push_back(std::move(t));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const OcrToken& a, const OcrToken& b) {
        return a.box.y != b.box.y ? a.box.y < b.box.y : a.box.x < b.box.x;
    });
    return out;
}

SemanticVerdict BackendClient::semantic_verdict(const std::string& prompt, const std::vector<ImageRef>& images,
                                                LatencyRecorder* trace) const {
    require_kind(BackendKind::verdict);
    if (prompt.empty()) throw Error("verdict: prompt must be non-empty");
    if (images.empty() || images.size() > 2) throw Error("verdict: needs 1 or 2 images");
    auto v = call([&] { return backend_->semantic_verdict(prompt, images, endpoint_); }, trace);
    check_unit(v.confidence, "verdict confidence");
    return v;
}

BackendSet::BackendSet(const std::array<BackendEndpoint, 5>& endpoints) {
    std::map<std::string, std::shared_ptr<ModelBackend>> shared;
    for (BackendKind kind : kAllBackendKinds) {
        const auto it = std::find_if(endpoints.begin(), endpoints.end(),
                                     [&](const BackendEndpoint& e) { return e.kind == kind; });
        if (it == endpoints.end()) throw ConfigError("missing endpoint for " + std::string(to_string(kind)));
        auto& backend = shared[it->locator];
        if (!backend) backend = make_backend(it->locator);
        clients_.emplace_back(*it, backend);
    }
}

const BackendClient& BackendSet::client(BackendKind kind) const { return clients_[static_cast<int>(kind)]; }

}  // namespace arsent
