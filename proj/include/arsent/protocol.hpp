#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arsent/backend.hpp"

namespace arsent::protocol {

using nlohmann::json;

// Request bodies.
json image_payload(const ImageRef& image);
json keyobjects_request(const ImageRef& image);
json detect_request(const ImageRef& image, const std::string& query);
json segment_request(const ImageRef& image, const std::vector<BoundingBox>& boxes);
json ocr_request(const ImageRef& image);
json verdict_request(const std::string& prompt, const std::vector<ImageRef>& images);

// Response bodies (server side).
json keyobjects_response(const std::vector<std::string>& objects);
json detect_response(const std::vector<BoundingBox>& boxes);
json segment_response(const std::vector<RasterMask>& masks);
json ocr_response(const std::vector<OcrToken>& tokens);
json verdict_response(const SemanticVerdict& verdict);

// Response parsing (client side). Any schema violation throws ProtocolError
// carrying an excerpt of the body.
std::vector<std::string> parse_keyobjects_response(const std::string& body);
std::vector<BoundingBox> parse_detect_response(const std::string& body);
std::vector<RasterMask> parse_segment_response(const std::string& body);
std::vector<OcrToken> parse_ocr_response(const std::string& body);
SemanticVerdict parse_verdict_response(const std::string& body);

// Request parsing (server side); throws ProtocolError.
ImageRef parse_image(const json& payload, std::string id);
BoundingBox parse_box(const json& box, bool score_required);
json box_json(const BoundingBox& box);

}  // namespace arsent::protocol
