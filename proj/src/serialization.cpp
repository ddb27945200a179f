#include "arsent/serialization.hpp"

#include "arsent/errors.hpp"
#include "arsent/protocol.hpp"

namespace arsent {

using nlohmann::json;

json to_json(const Verdict& v) {
    return {{"attacked", v.attacked},
            {"kind", to_string(v.kind)},
            {"confidence", v.confidence},
            {"mitigation", to_string(v.mitigation)},
            {"rationale", v.rationale}};
}

Verdict verdict_from_json(const json& j) {
    Verdict v;
    v.attacked = j.at("attacked").get<bool>();
    v.kind = parse_attack_kind(j.at("kind").get<std::string>());
    v.confidence = j.at("confidence").get<double>();
    v.mitigation = parse_mitigation(j.at("mitigation").get<std::string>());
    v.rationale = j.value("rationale", "");
    return v;
}

json to_json(const OcrToken& t) {
    return {{"text", t.text}, {"box", protocol::box_json(t.box)}, {"confidence", t.confidence}};
}

OcrToken token_from_json(const json& j) {
    OcrToken t;
    t.text = j.at("text").get<std::string>();
    const auto& b = j.at("box");
    t.box = {b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(), b.at("h").get<int>(),
             b.value("score", 1.0)};
    t.confidence = j.value("confidence", 1.0);
    return t;
}

json to_json(const LatencyTrace& trace) {
    json spans = json::array();
    for (const auto& s : trace.spans) {
        spans.push_back({{"stage", to_string(s.stage)},
                         {"tier", to_string(s.tier)},
                         {"call_id", s.call_id},
                         {"start_ns", s.start_ns - trace.wall_start_ns},
                         {"elapsed_ns", s.elapsed_ns}});
    }
    return {{"spans", spans}, {"wall_ns", trace.wall_ns}};
}

json to_json(const TokenDiff& diff) {
    json adds = json::array(), rems = json::array(), mods = json::array();
    for (const auto& t : diff.additions) adds.push_back(to_json(t));
    for (const auto& t : diff.removals) rems.push_back(to_json(t));
    for (const auto& m : diff.modifications) {
        mods.push_back({{"before", to_json(m.before)}, {"after", to_json(m.after)}, {"edit_distance", m.edit_distance}});
    }
    return {{"additions", adds}, {"removals", rems}, {"modifications", mods}};
}

namespace {

void add_status(json& j, const std::string& status, const std::optional<StageFailure>& failure) {
    j["status"] = status;
    if (failure) {
        j["failure"] = {{"stage", failure->stage}, {"error", failure->error}, {"policy", to_string(failure->policy)}};
    } else {
        j["failure"] = nullptr;
    }
}

}  // namespace

json to_json(const ObstructionReport& r) {
    json objects = json::array();
    for (const auto& o : r.per_object) {
        json entry = {{"name", o.name}, {"box", protocol::box_json(o.box)}, {"mask_rle", mask_to_rle_text(o.mask)}};
        if (o.result.measure) {
            const auto& m = *o.result.measure;
            entry["measure"] = {{"key_area", m.key_area},
                                {"overlap_area", m.overlap_area},
                                {"ratio", m.ratio},
                                {"flagged", m.flagged}};
            entry["invalid_reason"] = nullptr;
        } else {
            entry["measure"] = nullptr;
            entry["invalid_reason"] = o.result.invalid_reason;
        }
        objects.push_back(std::move(entry));
    }
    json j = {{"scene_id", r.scene_id},
              {"pipeline", "obstruction"},
              {"per_object", objects},
              {"unlocalized", r.unlocalized},
              {"verdict", to_json(r.verdict)},
              {"latency", to_json(r.latency)}};
    add_status(j, r.status, r.failure);
    return j;
}

json to_json(const VimReport& r) {
    json j = {{"scene_id", r.scene_id},
              {"pipeline", "vim"},
              {"diff", to_json(r.diff)},
              {"prompt", r.prompt},
              {"template_id", r.template_id},
              {"verdict", to_json(r.verdict)},
              {"latency", to_json(r.latency)}};
    if (r.taxonomy) {
        j["taxonomy"] = {{"format", r.taxonomy->format}, {"purpose", r.taxonomy->purpose}};
    } else {
        j["taxonomy"] = nullptr;
    }
    add_status(j, r.status, r.failure);
    return j;
}

}  // namespace arsent
