#pragma once

#include <string>

#include "arsent/backend.hpp"

namespace arsent {

/// JSON-over-HTTP transport for the /v1/{keyobjects,detect,segment,ocr,verdict} protocol.
class HttpBackend final : public ModelBackend {
public:
    /// base_url: scheme://host:port with an optional path prefix.
    explicit HttpBackend(std::string base_url);

    std::vector<std::string> identify_key_objects(const ImageRef& image, const BackendEndpoint& ep) override;
    std::vector<BoundingBox> detect(const ImageRef& image, const std::string& query,
                                    const BackendEndpoint& ep) override;
    std::vector<RasterMask> segment(const ImageRef& image, const std::vector<BoundingBox>& boxes,
                                    const BackendEndpoint& ep) override;
    std::vector<OcrToken> ocr(const ImageRef& image, const BackendEndpoint& ep) override;
    SemanticVerdict semantic_verdict(const std::string& prompt, const std::vector<ImageRef>& images,
                                     const BackendEndpoint& ep) override;

private:
    std::string post(const std::string& route, const std::string& body, const BackendEndpoint& ep) const;

    std::string scheme_host_port_;
    std::string prefix_;
};

}  // namespace arsent
