#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arsent/backend.hpp"
#include "arsent/config.hpp"
#include "arsent/latency.hpp"

namespace arsent {

enum class PipelineKind { obstruction, vim };
enum class ReportFormat { json, text };

std::string_view to_string(PipelineKind k);
PipelineKind parse_pipeline_kind(std::string_view s);
ReportFormat parse_report_format(std::string_view s);

struct Confusion {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    void add(bool predicted, bool actual);
    void merge(const Confusion& other);
    std::uint64_t total() const { return tp + fp + tn + fn; }
    std::optional<double> accuracy() const;
    std::optional<double> precision() const;
    std::optional<double> recall() const;
    bool operator==(const Confusion&) const = default;
};

/// Mean (sum/count) and nearest-rank p95 of span durations.
struct LatencyStats {
    std::uint64_t count = 0;
    double mean_ns = 0.0;
    std::int64_t p95_ns = 0;

    static LatencyStats of(std::vector<std::int64_t> samples);
    bool operator==(const LatencyStats&) const = default;
};

/// Nearest-rank percentile: sorted[ceil(p/100 * n) - 1]; 0 for no samples.
std::int64_t nearest_rank_percentile(std::vector<std::int64_t> samples, double percentile);

struct LabelBreakdown {
    std::uint64_t n = 0;
    std::uint64_t predicted_positive = 0;
    std::uint64_t correct = 0;
    bool operator==(const LabelBreakdown&) const = default;
};

struct FailedScene {
    std::string scene_id;
    std::string stage;
    std::string error;
    bool operator==(const FailedScene&) const = default;
};

struct EvalReport {
    std::string pipeline;
    std::uint64_t n = 0;  // scenes in the confusion matrix (failed excluded)
    Confusion confusion;
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::uint64_t failed = 0;
    std::vector<FailedScene> failures;
    std::map<std::string, LabelBreakdown> per_label;
    std::optional<Confusion> object_level;  // obstruction pipeline only
    std::map<std::string, LatencyStats> per_stage_latency;
    LatencyStats end_to_end_latency;
    std::string config_fingerprint;
    std::string generated_at;  // outside the fingerprinted body

    /// Equality of everything except timestamps and measured latencies.
    bool same_outcome(const EvalReport& other) const;
    bool operator==(const EvalReport&) const = default;
};

/// One scene's outcome as the accumulator sees it.
struct ScenePrediction {
    std::string scene_id;
    SceneLabel truth = SceneLabel::none;
    bool predicted_positive = false;
    std::optional<FailedScene> failure;
    LatencyTrace latency;
    std::optional<Confusion> object_level;
};

/// Builds the report from predictions (order-independent).
EvalReport compute_report(std::span<const ScenePrediction> predictions, PipelineKind pipeline,
                          std::string config_fingerprint);

/// Runs `pipeline` on every scene of the manifest, `parallelism` scenes at a time.
EvalReport evaluate(const std::filesystem::path& manifest, PipelineKind pipeline, const PipelineConfig& config,
                    const BackendSet& backends, int parallelism = 1);
EvalReport evaluate(const std::filesystem::path& manifest, PipelineKind pipeline, const PipelineConfig& config,
                    int parallelism = 1);

std::string emit_report(const EvalReport& report, ReportFormat format);
EvalReport report_from_json(const std::string& text);

/// "92.15%" style: two decimals.
std::string format_percent(double fraction);

}  // namespace arsent
