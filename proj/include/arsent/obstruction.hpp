#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arsent/backend.hpp"
#include "arsent/config.hpp"
#include "arsent/core.hpp"
#include "arsent/errors.hpp"
#include "arsent/latency.hpp"

namespace arsent {

/// Outcome of measuring one key object; measure is absent when the object's
/// mask was unusable (reason says why) and such objects do not vote.
struct MeasureResult {
    std::optional<ObstructionMeasure> measure;
    std::string invalid_reason;

    bool operator==(const MeasureResult&) const = default;
};

struct ObjectFinding {
    std::string name;
    BoundingBox box;
    RasterMask mask;
    MeasureResult result;
};

/// Set when a stage failed and the report was produced under a fail policy.
struct StageFailure {
    std::string stage;
    std::string error;
    FailPolicy policy = FailPolicy::fail_closed;
};

inline constexpr std::string_view kStatusDetermined = "determined";
inline constexpr std::string_view kStatusUndeterminedAttacked = "undetermined-treat-as-attacked";
inline constexpr std::string_view kStatusUndeterminedClear = "undetermined-fail-open";

struct ObstructionReport {
    std::string scene_id;
    std::vector<ObjectFinding> per_object;
    std::vector<std::string> unlocalized;  // identified but no detection >= min score
    Verdict verdict;
    std::string status = std::string(kStatusDetermined);
    std::optional<StageFailure> failure;
    LatencyTrace latency;
};

/// One measure per object against the content mask. Empty object masks are
/// marked invalid; dimension mismatches throw DimensionError.
std::vector<MeasureResult> detections_to_measures(std::span<const KeyObject> objects,
                                                  const RasterMask& content, double threshold);

/// OR over valid per-object flags. Attacked verdicts recommend translucency and
/// carry the largest flagged ratio as confidence; clear verdicts carry
/// 1 - largest ratio.
Verdict aggregate_obstruction(std::span<const MeasureResult> results, std::span<const std::string> names);

/// keyobjects -> detect (per object, concurrent) -> segment (one batched call)
/// -> ratio and flag per object -> scene verdict.
/// Backend failures surface as PipelineError naming the stage.
ObstructionReport detect_obstruction(const ScenePair& pair, const PipelineConfig& config,
                                     const BackendSet& backends);
ObstructionReport detect_obstruction(const ScenePair& pair, const PipelineConfig& config);

/// Verdict reported when a stage failed, according to the fail policy.
Verdict failure_verdict(AttackKind kind, FailPolicy policy, const PipelineError& error);

}  // namespace arsent
