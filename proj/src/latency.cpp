#include "arsent/latency.hpp"

#include <algorithm>
#include <chrono>

#include "arsent/errors.hpp"

namespace arsent {

namespace {
constexpr std::string_view kStageNames[] = {"keyobjects", "detect", "segment", "ocr", "verdict", "local_compute"};
constexpr std::string_view kTierNames[] = {"edge", "cloud"};
}  // namespace

std::string_view to_string(Stage s) { return kStageNames[static_cast<int>(s)]; }
std::string_view to_string(Tier t) { return kTierNames[static_cast<int>(t)]; }

Stage parse_stage(std::string_view s) {
    for (int i = 0; i < 6; ++i) {
        if (kStageNames[i] == s) return static_cast<Stage>(i);
    }
    throw Error("unknown stage '" + std::string(s) + "'");
}

Tier parse_tier(std::string_view s) {
    if (s == "edge") return Tier::edge;
    if (s == "cloud") return Tier::cloud;
    throw Error("unknown tier '" + std::string(s) + "'");
}

std::int64_t monotonic_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::int64_t LatencyTrace::stage_busy_ns(Stage stage) const {
    std::vector<std::pair<std::int64_t, std::int64_t>> iv;
    for (const auto& s : spans) {
        if (s.stage == stage) iv.emplace_back(s.start_ns, s.start_ns + s.elapsed_ns);
    }
    std::sort(iv.begin(), iv.end());
    std::int64_t total = 0;
    std::int64_t cur_start = 0, cur_end = 0;
    bool open = false;
    for (const auto& [b, e] : iv) {
        if (!open || b > cur_end) {
            if (open) total += cur_end - cur_start;
            cur_start = b;
            cur_end = e;
            open = true;
        } else {
            cur_end = std::max(cur_end, e);
        }
    }
    if (open) total += cur_end - cur_start;
    return total;
}

std::int64_t LatencyTrace::busy_ns() const {
    std::int64_t total = 0;
    for (Stage s : kAllStages) total += stage_busy_ns(s);
    return total;
}

std::size_t LatencyTrace::count(Stage stage) const {
    return static_cast<std::size_t>(
        std::count_if(spans.begin(), spans.end(), [&](const LatencySpan& s) { return s.stage == stage; }));
}

void LatencyRecorder::record(const LatencySpan& span) {
    std::lock_guard lock(mutex_);
    spans_.push_back(span);
}

LatencyTrace LatencyRecorder::snapshot() const {
    LatencyTrace t;
    {
        std::lock_guard lock(mutex_);
        t.spans = spans_;
    }
    std::sort(t.spans.begin(), t.spans.end(), [](const LatencySpan& a, const LatencySpan& b) {
        return a.start_ns != b.start_ns ? a.start_ns < b.start_ns : a.call_id < b.call_id;
    });
    t.wall_start_ns = wall_start_ns_;
    t.wall_ns = monotonic_ns() - wall_start_ns_;
    return t;
}

ScopedSpan::ScopedSpan(LatencyRecorder* recorder, Stage stage, Tier tier)
    : recorder_(recorder), stage_(stage), tier_(tier), start_ns_(monotonic_ns()) {
    if (recorder_) call_id_ = recorder_->next_call_id();
}

ScopedSpan::~ScopedSpan() {
    if (recorder_) recorder_->record({stage_, tier_, start_ns_, monotonic_ns() - start_ns_, call_id_});
}

}  // namespace arsent
