#include "arsent/manifest.hpp"

#include <fstream>

#include "arsent/errors.hpp"
#include "arsent/image.hpp"
#include "arsent/oracle_backend.hpp"
#include "arsent/protocol.hpp"
#include "arsent/serialization.hpp"

namespace arsent {

using nlohmann::json;

namespace {

void put_optional(json& j, const char* key, const std::optional<std::string>& v) {
    if (v) j[key] = *v;
}

std::optional<std::string> get_optional(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

std::string required_string(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw Error(std::string("field '") + key + "' missing or not a string");
    return it->get<std::string>();
}

}  // namespace

json truth_to_json(const GroundTruth& t) {
    json objects = json::array();
    for (const auto& k : t.key_objects) {
        objects.push_back({{"name", k.name}, {"box", protocol::box_json(k.box)}, {"mask_rle", mask_to_rle_text(k.mask)}});
    }
    json raw_tokens = json::array(), ar_tokens = json::array();
    for (const auto& tok : t.raw_tokens) raw_tokens.push_back(to_json(tok));
    for (const auto& tok : t.ar_tokens) ar_tokens.push_back(to_json(tok));
    json j = {{"label", to_string(t.label)}, {"key_objects", objects}};
    put_optional(j, "vim_format", t.vim_format);
    put_optional(j, "vim_purpose", t.vim_purpose);
    put_optional(j, "text_before", t.text_before);
    put_optional(j, "text_after", t.text_after);
    j["targets"] = t.targets;
    j["raw_tokens"] = raw_tokens;
    j["ar_tokens"] = ar_tokens;
    j["raw_digest"] = t.raw_digest;
    j["ar_digest"] = t.ar_digest;
    return j;
}

GroundTruth truth_from_json(const json& j) {
    GroundTruth t;
    t.label = parse_scene_label(required_string(j, "label"));
    for (const auto& k : j.value("key_objects", json::array())) {
        KeyObject obj;
        obj.name = required_string(k, "name");
        obj.box = protocol::parse_box(k.at("box"), false);
        obj.mask = mask_from_rle_text(required_string(k, "mask_rle"));
        t.key_objects.push_back(std::move(obj));
    }
    t.vim_format = get_optional(j, "vim_format");
    t.vim_purpose = get_optional(j, "vim_purpose");
    t.text_before = get_optional(j, "text_before");
    t.text_after = get_optional(j, "text_after");
    t.targets = j.value("targets", std::vector<std::string>{});
    for (const auto& tok : j.value("raw_tokens", json::array())) t.raw_tokens.push_back(token_from_json(tok));
    for (const auto& tok : j.value("ar_tokens", json::array())) t.ar_tokens.push_back(token_from_json(tok));
    t.raw_digest = j.value("raw_digest", "");
    t.ar_digest = j.value("ar_digest", "");
    return t;
}

json to_json(const ManifestRecord& r) {
    return {{"id", r.id}, {"raw", r.raw}, {"ar", r.ar}, {"content_mask", r.content_mask}, {"truth", r.truth}};
}

ManifestRecord manifest_record_from_json(const json& j) {
    if (!j.is_object()) throw Error("record is not a JSON object");
    ManifestRecord r;
    r.id = required_string(j, "id");
    r.raw = required_string(j, "raw");
    r.ar = required_string(j, "ar");
    r.content_mask = required_string(j, "content_mask");
    const auto it = j.find("truth");
    if (it != j.end() && !it->is_null()) r.truth = it->get<std::string>();
    return r;
}

ScenePair read_scene(const ManifestRecord& r, const std::filesystem::path& root) {
    ScenePair pair;
    pair.id = r.id;
    pair.raw = ImageRef::from_png_file(r.id + "/raw", root / r.raw);
    pair.ar = ImageRef::from_png_file(r.id + "/ar", root / r.ar);
    pair.content_mask = mask_from_png(read_file(root / r.content_mask));
    if (!r.truth.empty()) pair.truth = load_truth_file(root / r.truth);
    return pair;
}

ManifestRecord write_scene(const ScenePair& pair, const std::filesystem::path& root) {
    const std::string rel = "scenes/" + pair.id;
    const auto dir = root / rel;
    std::filesystem::create_directories(dir);
    write_file(dir / "raw.png", pair.raw.png());
    write_file(dir / "ar.png", pair.ar.png());
    write_file(dir / "content_mask.png", mask_to_png(pair.content_mask));
    ManifestRecord r{pair.id, rel + "/raw.png", rel + "/ar.png", rel + "/content_mask.png", ""};
    if (pair.truth) {
        write_text_file(dir / "truth.json", truth_to_json(*pair.truth).dump(1) + "\n");
        r.truth = rel + "/truth.json";
    }
    return r;
}

std::vector<ScenePair> load_manifest(const std::filesystem::path& path, const ValidationOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest " + path.string());
    const auto root = path.parent_path();
    std::vector<ScenePair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        ScenePair pair;
        try {
            pair = read_scene(manifest_record_from_json(json::parse(line)), root);
        } catch (const json::exception& e) {
            throw Error(where + e.what());
        } catch (const std::exception& e) {
            throw Error(where + e.what());
        }
        const auto violations = validate_scene_pair(pair, options);
        if (!violations.empty()) {
            std::string msg = where + violations.front();
            for (std::size_t i = 1; i < violations.size(); ++i) msg += "; " + violations[i];
            throw Error(msg);
        }
        out.push_back(std::move(pair));
    }
    return out;
}

}  // namespace arsent
