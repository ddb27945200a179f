#include "arsent/protocol.hpp"

#include <cmath>

#include "arsent/codec.hpp"
#include "arsent/errors.hpp"

namespace arsent::protocol {

namespace {

json parse_body(const std::string& body) {
    try {
        json j = json::parse(body);
        if (!j.is_object()) throw ProtocolError("response is not a JSON object", excerpt_of(body));
        return j;
    } catch (const json::parse_error&) {
        throw ProtocolError("response is not valid JSON", excerpt_of(body));
    }
}

const json& field(const json& j, const char* key, json::value_t type, const std::string& body = {}) {
    const auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string("missing field '") + key + "'", excerpt_of(body.empty() ? j.dump() : body));
    const bool ok = it->type() == type || (type == json::value_t::number_float && it->is_number()) ||
                    (type == json::value_t::number_integer && it->is_number_integer());
    if (!ok) throw ProtocolError(std::string("field '") + key + "' has wrong type", excerpt_of(body.empty() ? j.dump() : body));
    return *it;
}

int int_field(const json& j, const char* key) {
    const auto& v = field(j, key, json::value_t::number_integer);
    const auto n = v.get<std::int64_t>();
    if (n < INT32_MIN || n > INT32_MAX) throw ProtocolError(std::string("field '") + key + "' out of range");
    return static_cast<int>(n);
}

double unit_field(const json& j, const char* key) {
    const double v = field(j, key, json::value_t::number_float).get<double>();
    if (!(v >= 0.0 && v <= 1.0)) throw ProtocolError(std::string("field '") + key + "' outside [0,1]");
    return v;
}

}  // namespace

json image_payload(const ImageRef& image) {
    const auto png = image.png();
    return {{"png_base64", base64_encode(png)}};
}

json keyobjects_request(const ImageRef& image) { return {{"image", image_payload(image)}}; }

json detect_request(const ImageRef& image, const std::string& query) {
    return {{"image", image_payload(image)}, {"query", query}};
}

json box_json(const BoundingBox& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}, {"score", b.score}}; }

json segment_request(const ImageRef& image, const std::vector<BoundingBox>& boxes) {
    json arr = json::array();
    for (const auto& b : boxes) arr.push_back(box_json(b));
    return {{"image", image_payload(image)}, {"boxes", arr}};
}

json ocr_request(const ImageRef& image) { return {{"image", image_payload(image)}}; }

json verdict_request(const std::string& prompt, const std::vector<ImageRef>& images) {
    json arr = json::array();
    for (const auto& img : images) arr.push_back(image_payload(img));
    return {{"prompt", prompt}, {"images", arr}};
}

json keyobjects_response(const std::vector<std::string>& objects) { return {{"objects", objects}}; }

json detect_response(const std::vector<BoundingBox>& boxes) {
    json arr = json::array();
    for (const auto& b : boxes) arr.push_back(box_json(b));
    return {{"boxes", arr}};
}

json segment_response(const std::vector<RasterMask>& masks) {
    json arr = json::array();
    for (const auto& m : masks) arr.push_back({{"rle", mask_to_rle_text(m)}});
    return {{"masks", arr}};
}

json ocr_response(const std::vector<OcrToken>& tokens) {
    json arr = json::array();
    for (const auto& t : tokens) arr.push_back({{"text", t.text}, {"box", box_json(t.box)}, {"confidence", t.confidence}});
    return {{"tokens", arr}};
}

json verdict_response(const SemanticVerdict& v) {
    return {{"manipulated", v.manipulated}, {"confidence", v.confidence}, {"rationale", v.rationale}};
}

BoundingBox parse_box(const json& j, bool score_required) {
    if (!j.is_object()) throw ProtocolError("box is not an object", excerpt_of(j.dump()));
    BoundingBox b{int_field(j, "x"), int_field(j, "y"), int_field(j, "w"), int_field(j, "h"), 1.0};
    if (score_required || j.contains("score")) b.score = unit_field(j, "score");
    return b;
}

std::vector<std::string> parse_keyobjects_response(const std::string& body) {
    const json j = parse_body(body);
    std::vector<std::string> out;
    for (const auto& o : field(j, "objects", json::value_t::array, body)) {
        if (!o.is_string()) throw ProtocolError("objects must be strings", excerpt_of(body));
        out.push_back(o.get<std::string>());
    }
    return out;
}

std::vector<BoundingBox> parse_detect_response(const std::string& body) {
    const json j = parse_body(body);
    std::vector<BoundingBox> out;
    for (const auto& b : field(j, "boxes", json::value_t::array, body)) out.push_back(parse_box(b, true));
    return out;
}

std::vector<RasterMask> parse_segment_response(const std::string& body) {
    const json j = parse_body(body);
    std::vector<RasterMask> out;
    for (const auto& m : field(j, "masks", json::value_t::array, body)) {
        if (!m.is_object()) throw ProtocolError("mask entry is not an object", excerpt_of(body));
        const auto& rle = field(m, "rle", json::value_t::string, body);
        try {
            out.push_back(mask_from_rle_text(rle.get<std::string>()));
        } catch (const MalformedRle& e) {
            throw ProtocolError(std::string("segment: ") + e.what() + " (" + e.detail() + ")", excerpt_of(body));
        }
    }
    return out;
}

std::vector<OcrToken> parse_ocr_response(const std::string& body) {
    const json j = parse_body(body);
    std::vector<OcrToken> out;
    for (const auto& t : field(j, "tokens", json::value_t::array, body)) {
        if (!t.is_object()) throw ProtocolError("token entry is not an object", excerpt_of(body));
        OcrToken tok;
        tok.text = field(t, "text", json::value_t::string, body).get<std::string>();
        tok.box = parse_box(field(t, "box", json::value_t::object, body), false);
        tok.confidence = unit_field(t, "confidence");
        out.push_back(std::move(tok));
    }
    return out;
}

SemanticVerdict parse_verdict_response(const std::string& body) {
    const json j = parse_body(body);
    SemanticVerdict v;
    v.manipulated = field(j, "manipulated", json::value_t::boolean, body).get<bool>();
    v.confidence = unit_field(j, "confidence");
    v.rationale = field(j, "rationale", json::value_t::string, body).get<std::string>();
    return v;
}

ImageRef parse_image(const json& payload, std::string id) {
    if (!payload.is_object()) throw ProtocolError("image must be an object");
    const auto& b64 = field(payload, "png_base64", json::value_t::string);
    try {
        const auto bytes = base64_decode(b64.get<std::string>());
        return ImageRef::from_png_bytes(std::move(id), bytes);
    } catch (const ProtocolError&) {
        throw;
    } catch (const Error& e) {
        throw ProtocolError(std::string("image: ") + e.what());
    }
}

}  // namespace arsent::protocol
