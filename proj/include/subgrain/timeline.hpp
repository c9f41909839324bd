#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "subgrain/errors.hpp"
#include "subgrain/jsonl.hpp"
#include "subgrain/timedtext.hpp"
#include "subgrain/util.hpp"

namespace subgrain::timeline {

using timedtext::TimeSpan;

// ---------------------------------------------------------------- types

struct FrameDescription {
    std::int64_t t_ms = 0;  // nominal sample instant
    std::string raw_text;
    std::string clean_text;

    bool operator==(const FrameDescription&) const = default;
};

/// Sorted frame-description track. Loaded timelines have strictly increasing
/// timestamps; drifted ones may carry collision-bumped instants (still
/// strictly increasing, see apply_drift).
struct Timeline {
    std::vector<FrameDescription> frames;
};

struct DriftModel {
    std::int64_t offset_ms = 0;    // constant shift, may be negative
    double rate_s_per_hour = 0.0;  // linear accumulation
    std::int64_t jitter_ms = 0;    // uniform half-width, seeded

    bool is_identity() const {
        return offset_ms == 0 && rate_s_per_hour == 0.0 && jitter_ms == 0;
    }
};

/// Interval between the previous subtitle's end and the current one's start,
/// half-open [prev_end_ms, cur_start_ms). Overlapping subtitles make it
/// degenerate (empty).
struct GapSpan {
    std::int64_t prev_end_ms = 0;
    std::int64_t cur_start_ms = 0;

    bool degenerate() const { return prev_end_ms >= cur_start_ms; }
};

// ------------------------------------------------------------- cleaning

namespace detail {

/// Collapse immediately repeated token runs, longest phrase first (n <= 4):
/// "the man the man walks" -> "the man walks", "go go go" -> "go".
inline std::vector<std::string> collapse_repeats(std::vector<std::string> tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        for (std::size_t n = 4; n >= 1; --n) {
            while (i + 2 * n <= tokens.size() &&
                   std::equal(tokens.begin() + static_cast<long>(i),
                              tokens.begin() + static_cast<long>(i + n),
                              tokens.begin() + static_cast<long>(i + n))) {
                tokens.erase(tokens.begin() + static_cast<long>(i + n),
                             tokens.begin() + static_cast<long>(i + 2 * n));
            }
        }
    }
    return tokens;
}

} // namespace detail

/// Frame-description cleanup: repeated-phrase runs collapsed, punctuation
/// and whitespace canonicalized.
inline std::string clean_frame_text(std::string_view raw) {
    const std::string mapped = timedtext::normalize_punct_ws(raw);
    return join(detail::collapse_repeats(split_ws(mapped)), " ");
}

// -------------------------------------------------------------- loading

inline Timeline make_timeline(std::vector<FrameDescription> frames, const std::string& origin) {
    std::stable_sort(frames.begin(), frames.end(),
                     [](const FrameDescription& a, const FrameDescription& b) { return a.t_ms < b.t_ms; });
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (frames[i].t_ms == frames[i - 1].t_ms) {
            throw FormatError(origin + ": duplicate frame timestamp " + std::to_string(frames[i].t_ms) + " ms");
        }
    }
    return Timeline{std::move(frames)};
}

/// Load a frame-description timeline from a JSON Lines file
/// (`{"t_ms": int, "text": str}` per line). Descriptions are cleaned and the
/// timeline sorted; duplicate timestamps are rejected.
inline Timeline load_frames(const std::filesystem::path& path) {
    std::vector<FrameDescription> frames;
    for (const auto& [value, line] : read_jsonl(path)) {
        if (!value.contains("t_ms") || !value.contains("text")) {
            throw FormatError(path.string() + ": line " + std::to_string(line) +
                              " needs \"t_ms\" and \"text\"");
        }
        FrameDescription f;
        f.t_ms = value.at("t_ms").get<std::int64_t>();
        f.raw_text = value.at("text").get<std::string>();
        if (f.t_ms < 0) {
            throw FormatError(path.string() + ": negative t_ms on line " + std::to_string(line));
        }
        f.clean_text = clean_frame_text(f.raw_text);
        frames.push_back(std::move(f));
    }
    return make_timeline(std::move(frames), path.string());
}

inline std::string dump_frames(const Timeline& tl) {
    std::vector<Json> rows;
    rows.reserve(tl.frames.size());
    for (const auto& f : tl.frames) {
        rows.push_back(Json{{"t_ms", f.t_ms}, {"text", f.raw_text}});
    }
    return dump_jsonl(rows);
}

// -------------------------------------------------------------- queries

/// Frames with t_ms in [max(0, center-half), min(duration, center+half)],
/// both ends inclusive. The result is a contiguous slice of the timeline.
inline std::span<const FrameDescription> frames_in_window(const Timeline& tl,
                                                          std::int64_t center_ms,
                                                          std::int64_t half_width_ms,
                                                          std::int64_t duration_ms) {
    const std::int64_t lo = std::max<std::int64_t>(0, center_ms - half_width_ms);
    const std::int64_t hi = std::min(duration_ms, center_ms + half_width_ms);
    if (hi < lo) return {};
    auto cmp = [](const FrameDescription& f, std::int64_t t) { return f.t_ms < t; };
    const auto first = std::lower_bound(tl.frames.begin(), tl.frames.end(), lo, cmp);
    const auto last = std::lower_bound(first, tl.frames.end(), hi + 1, cmp);
    return {first, last};
}

/// Frames with prev_end_ms <= t_ms < cur_start_ms; empty for degenerate gaps.
inline std::span<const FrameDescription> frames_in_gap(const Timeline& tl, const GapSpan& gap) {
    if (gap.degenerate()) return {};
    auto cmp = [](const FrameDescription& f, std::int64_t t) { return f.t_ms < t; };
    const auto first = std::lower_bound(tl.frames.begin(), tl.frames.end(), gap.prev_end_ms, cmp);
    const auto last = std::lower_bound(first, tl.frames.end(), gap.cur_start_ms, cmp);
    return {first, last};
}

/// Count sampling instants t = k/fps (k = 0, 1, 2, ...) inside the union of
/// the given inclusive spans. Overlapping spans are never double counted.
inline std::int64_t count_frames_in_spans(double fps, std::vector<TimeSpan> spans) {
    if (fps <= 0.0) throw ConfigError("fps must be positive");
    std::erase_if(spans, [](const TimeSpan& s) { return s.end_ms < s.start_ms; });
    if (spans.empty()) return 0;
    std::sort(spans.begin(), spans.end(),
              [](const TimeSpan& a, const TimeSpan& b) { return a.start_ms < b.start_ms; });

    std::vector<TimeSpan> merged;
    for (const auto& s : spans) {
        if (!merged.empty() && s.start_ms <= merged.back().end_ms) {
            merged.back().end_ms = std::max(merged.back().end_ms, s.end_ms);
        } else {
            merged.push_back(s);
        }
    }

    // k in [s*fps/1000, e*fps/1000]; the epsilon absorbs binary representation
    // error at exact grid boundaries.
    std::int64_t count = 0;
    for (const auto& s : merged) {
        const double lo = static_cast<double>(s.start_ms) * fps / 1000.0;
        const double hi = static_cast<double>(s.end_ms) * fps / 1000.0;
        const auto kmin = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(lo - 1e-9)));
        const auto kmax = static_cast<std::int64_t>(std::floor(hi + 1e-9));
        if (kmax >= kmin) count += kmax - kmin + 1;
    }
    return count;
}

// ---------------------------------------------------------------- drift

/// Shift every frame by offset + rate accumulation + seeded uniform jitter:
///   t' = t + offset_ms + round(rate_s_per_hour * t/3600000 * 1000) + jitter
/// Negative results clamp to 0; the result is re-sorted. Timestamp collisions
/// (possible after clamping or jitter) are bumped forward by 1 ms so the
/// drifted track stays loadable. Deterministic for a fixed seed.
inline Timeline apply_drift(const Timeline& tl, const DriftModel& model, std::uint64_t seed) {
    std::vector<FrameDescription> frames = tl.frames;
    std::mt19937_64 rng(seed);
    for (auto& f : frames) {
        const auto linear = static_cast<std::int64_t>(
            std::llround(model.rate_s_per_hour * static_cast<double>(f.t_ms) / 3600.0));
        std::int64_t jitter = 0;
        if (model.jitter_ms > 0) {
            // raw engine output keeps the draw identical across standard
            // libraries; distribution adapters do not guarantee that
            const auto width = static_cast<std::uint64_t>(2 * model.jitter_ms + 1);
            jitter = static_cast<std::int64_t>(rng() % width) - model.jitter_ms;
        }
        f.t_ms = std::max<std::int64_t>(0, f.t_ms + model.offset_ms + linear + jitter);
    }
    std::stable_sort(frames.begin(), frames.end(),
                     [](const FrameDescription& a, const FrameDescription& b) { return a.t_ms < b.t_ms; });
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (frames[i].t_ms <= frames[i - 1].t_ms) frames[i].t_ms = frames[i - 1].t_ms + 1;
    }
    return Timeline{std::move(frames)};
}

} // namespace subgrain::timeline
