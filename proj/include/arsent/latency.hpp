#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string_view>
#include <vector>

namespace arsent {

enum class Stage { keyobjects, detect, segment, ocr, verdict, local_compute };
enum class Tier { edge, cloud };

inline constexpr Stage kAllStages[] = {Stage::keyobjects, Stage::detect,  Stage::segment,
                                       Stage::ocr,        Stage::verdict, Stage::local_compute};

std::string_view to_string(Stage s);
std::string_view to_string(Tier t);
Stage parse_stage(std::string_view s);
Tier parse_tier(std::string_view s);

/// Monotonic clock reading in nanoseconds.
std::int64_t monotonic_ns();

struct LatencySpan {
    Stage stage = Stage::local_compute;
    Tier tier = Tier::edge;
    std::int64_t start_ns = 0;
    std::int64_t elapsed_ns = 0;
    std::uint64_t call_id = 0;

    bool operator==(const LatencySpan&) const = default;
};

/// Immutable snapshot of the spans recorded while processing one scene.
struct LatencyTrace {
    std::vector<LatencySpan> spans;
    std::int64_t wall_start_ns = 0;
    std::int64_t wall_ns = 0;

    /// Time covered by the union of one stage's spans.
    std::int64_t stage_busy_ns(Stage stage) const;
    /// Sum over stages of stage_busy_ns.
    std::int64_t busy_ns() const;
    std::size_t count(Stage stage) const;
};

/// Thread-safe span sink shared by the concurrent calls of one pipeline run.
class LatencyRecorder {
public:
    LatencyRecorder() : wall_start_ns_(monotonic_ns()) {}

    std::uint64_t next_call_id() { return next_id_.fetch_add(1) + 1; }
    void record(const LatencySpan& span);
    /// Spans sorted by (start, call id); wall span measured up to now.
    LatencyTrace snapshot() const;

private:
    std::int64_t wall_start_ns_;
    std::atomic<std::uint64_t> next_id_{0};
    mutable std::mutex mutex_;
    std::vector<LatencySpan> spans_;
};

/// Records one span on destruction, including during unwinding.
class ScopedSpan {
public:
    ScopedSpan(LatencyRecorder* recorder, Stage stage, Tier tier);
    ~ScopedSpan();
    ScopedSpan(const ScopedSpan&) = delete;
    ScopedSpan& operator=(const ScopedSpan&) = delete;

    std::int64_t elapsed_ns() const { return monotonic_ns() - start_ns_; }

private:
    LatencyRecorder* recorder_;
    Stage stage_;
    Tier tier_;
    std::int64_t start_ns_;
    std::uint64_t call_id_ = 0;
};

}  // namespace arsent
