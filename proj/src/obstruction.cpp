#include "arsent/obstruction.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <numeric>

#include "arsent/errors.hpp"

namespace arsent {

namespace {

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(stage, e.what());
    }
}

std::string percent(double ratio) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", ratio * 100.0);
    return buf;
}

}  // namespace

std::vector<MeasureResult> detections_to_measures(std::span<const KeyObject> objects, const RasterMask& content,
                                                  double threshold) {
    validate_threshold(threshold);
    std::vector<MeasureResult> out;
    out.reserve(objects.size());
    for (const auto& obj : objects) {
        MeasureResult r;
        if (obj.mask.width() != content.width() || obj.mask.height() != content.height()) {
            throw DimensionError("key object '" + obj.name + "' mask is " + std::to_string(obj.mask.width()) + "x" +
                                 std::to_string(obj.mask.height()) + ", content mask is " +
                                 std::to_string(content.width()) + "x" + std::to_string(content.height()));
        }
        if (area(obj.mask) == 0) {
            r.invalid_reason = "empty key object mask";
        } else {
            r.measure = measure_obstruction(obj.mask, content, threshold);
        }
        out.push_back(std::move(r));
    }
    return out;
}

Verdict aggregate_obstruction(std::span<const MeasureResult> results, std::span<const std::string> names) {
    double max_ratio = 0.0;
    double max_flagged = 0.0;
    std::vector<std::pair<std::string, double>> flagged;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].measure) continue;
        const auto& m = *results[i].measure;
        max_ratio = std::max(max_ratio, m.ratio);
        if (m.flagged) {
            max_flagged = std::max(max_flagged, m.ratio);
            flagged.emplace_back(i < names.size() ? names[i] : std::to_string(i), m.ratio);
        }
    }
    if (flagged.empty()) {
        return Verdict::clear(1.0 - max_ratio, "no key object obstructed (largest covered fraction " +
                                                   percent(max_ratio) + ")");
    }
    // Sorted so the rationale does not depend on object order.
    std::sort(flagged.begin(), flagged.end());
    std::string rationale = "obstructed key objects:";
    for (std::size_t i = 0; i < flagged.size(); ++i) {
        rationale += (i ? ", " : " ") + flagged[i].first + " (" + percent(flagged[i].second) + " covered)";
    }
    return Verdict::attack(AttackKind::obstruction, max_flagged, rationale);
}

ObstructionReport detect_obstruction(const ScenePair& pair, const PipelineConfig& config, const BackendSet& backends) {
    validate_threshold(config.threshold);
    if (const auto violations = validate_scene_pair(pair, config.validation()); !violations.empty()) {
        throw Error("invalid scene pair '" + pair.id + "': " + violations.front());
    }
    LatencyRecorder recorder;
    ObstructionReport report;
    report.scene_id = pair.id;

    auto names = run_stage("keyobjects", [&] { return backends.keyobjects().identify_key_objects(pair.raw, &recorder); });
    if (names.size() > static_cast<std::size_t>(config.max_key_objects)) names.resize(config.max_key_objects);
    if (names.empty()) {
        report.verdict = Verdict::clear(1.0, "no key objects identified");
        report.latency = recorder.snapshot();
        return report;
    }

    std::vector<std::future<std::vector<BoundingBox>>> pending;
    pending.reserve(names.size());
    for (const auto& name : names) {
        pending.push_back(std::async(std::launch::async, [&, name] {
            return backends.detector().detect(pair.raw, name, &recorder);
        }));
    }
    // Join everything before reporting the first failure in input order.
    std::vector<std::vector<BoundingBox>> detections;
    std::optional<PipelineError> first_error;
    for (auto& f : pending) {
        try {
            detections.push_back(f.get());
        } catch (const std::exception& e) {
            detections.emplace_back();
            if (!first_error) first_error.emplace("detect", e.what());
        }
    }
    if (first_error) throw *first_error;

    std::vector<std::string> localized;
    std::vector<BoundingBox> boxes;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& found = detections[i];
        if (!found.empty() && found.front().score >= config.min_detection_score) {
            localized.push_back(names[i]);
            boxes.push_back(found.front());
        } else {
            report.unlocalized.push_back(names[i]);
        }
    }

    auto masks = run_stage("segment", [&] { return backends.segmenter().segment(pair.raw, boxes, &recorder); });

    {
        ScopedSpan span(&recorder, Stage::local_compute, Tier::edge);
        std::vector<KeyObject> objects;
        objects.reserve(boxes.size());
        for (std::size_t i = 0; i < boxes.size(); ++i) objects.push_back({localized[i], boxes[i], std::move(masks[i])});
        const auto results = detections_to_measures(objects, pair.content_mask, config.threshold);
        report.verdict = aggregate_obstruction(results, localized);
        if (!report.unlocalized.empty() && !report.verdict.attacked) {
            report.verdict.rationale += "; not localized: " + std::to_string(report.unlocalized.size());
        }
        for (std::size_t i = 0; i < objects.size(); ++i) {
            report.per_object.push_back({objects[i].name, objects[i].box, std::move(objects[i].mask), results[i]});
        }
    }
    report.latency = recorder.snapshot();
    return report;
}

ObstructionReport detect_obstruction(const ScenePair& pair, const PipelineConfig& config) {
    const BackendSet backends(config.endpoints);
    return detect_obstruction(pair, config, backends);
}

Verdict failure_verdict(AttackKind kind, FailPolicy policy, const PipelineError& error) {
    if (policy == FailPolicy::fail_closed) {
        return Verdict::attack(kind, 0.0, std::string(kStatusUndeterminedAttacked) + ": " + error.what());
    }
    return Verdict::clear(0.0, std::string(kStatusUndeterminedClear) + ": " + error.what());
}

}  // namespace arsent
