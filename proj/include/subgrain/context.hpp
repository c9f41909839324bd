#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "subgrain/backends.hpp"
#include "subgrain/jsonl.hpp"
#include "subgrain/prompts.hpp"
#include "subgrain/timeline.hpp"
#include "subgrain/util.hpp"

namespace subgrain::context {

using backends::BackendClient;
using prompts::PromptBundle;
using prompts::TemplateId;
using timedtext::TimeSpan;
using timeline::GapSpan;
using timeline::Timeline;

// Character budgets applied to the aggregated frame descriptions before they
// enter the summarization prompts, counted in Unicode scalar values.
inline constexpr std::size_t kAttrSampleChars = 3000;
inline constexpr std::size_t kGapBlobChars = 2500;
inline constexpr std::int64_t kDefaultWindowHalfMs = 150000; // 5-minute window

// ---------------------------------------------------------------- types

/// Structured scene attributes summarized from the sliding window around a
/// subtitle start. Missing tags in the summarizer output stay empty and set
/// parse_warning; an empty window sets no_visual and skips the backend.
struct AttrContext {
    std::string setting;
    std::string gender;
    std::string relation;
    std::string honorific;
    std::string summary;
    TimeSpan window;                    // clamped window actually scanned
    std::int64_t source_char_count = 0; // aggregate size before truncation
    bool no_visual = false;
    bool parse_warning = false;
};

/// Free-text summary of the frames between two consecutive subtitles.
/// text is empty exactly when no frame fell in the gap.
struct GapContext {
    std::string text;
    GapSpan gap;
    int frame_count = 0;
    std::int64_t source_char_count = 0; // aggregate size before truncation
};

using VisualContext = std::variant<std::monostate, AttrContext, GapContext>;

struct WindowOptions {
    std::int64_t half_width_ms = kDefaultWindowHalfMs;
    std::int64_t duration_ms = 0;
};

// ----------------------------------------------------------- aggregation

inline std::string join_descriptions(std::span<const timeline::FrameDescription> frames) {
    std::string out;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (i) out += '\n';
        out += frames[i].clean_text;
    }
    return out;
}

// ------------------------------------------------------------- attribute context

namespace detail {

inline constexpr std::string_view kAttrTags[] = {
    "[SETTING]", "[GENDER]", "[RELATION]", "[HONORIFIC]", "[SUMMARY]",
};

inline std::size_t next_tag_pos(std::string_view text, std::size_t from) {
    std::size_t best = std::string_view::npos;
    for (const auto tag : kAttrTags) {
        const std::size_t p = text.find(tag, from);
        if (p < best) best = p;
    }
    return best;
}

} // namespace detail

/// Pull the five attribute fields out of a summarizer reply. Tag lines may
/// appear in any order; values run until the next tag. Missing tags leave
/// the field empty and raise the warning flag.
inline void parse_attr_tags(std::string_view reply, AttrContext& ctx) {
    std::string* fields[] = {&ctx.setting, &ctx.gender, &ctx.relation, &ctx.honorific, &ctx.summary};
    for (std::size_t i = 0; i < 5; ++i) {
        const std::string_view tag = detail::kAttrTags[i];
        const std::size_t pos = reply.find(tag);
        if (pos == std::string_view::npos) {
            ctx.parse_warning = true;
            continue;
        }
        std::size_t begin = pos + tag.size();
        if (begin < reply.size() && reply[begin] == ':') ++begin;
        const std::size_t end = detail::next_tag_pos(reply, begin);
        *fields[i] = std::string(trim(reply.substr(begin, end - begin)));
    }
}

/// Serialized form used as {visual_context} in the translation prompt.
inline std::string serialize_attr_context(const AttrContext& ctx) {
    return "[SETTING]: " + ctx.setting + "\n[GENDER]: " + ctx.gender +
           "\n[RELATION]: " + ctx.relation + "\n[HONORIFIC]: " + ctx.honorific +
           "\n[SUMMARY]: " + ctx.summary;
}

inline bool attr_context_empty(const AttrContext& ctx) {
    return ctx.setting.empty() && ctx.gender.empty() && ctx.relation.empty() &&
           ctx.honorific.empty() && ctx.summary.empty();
}

/// The exact summarization request for a window aggregate, exposed so tests
/// and cache bookkeeping see the same bytes the backend receives.
inline PromptBundle attr_summarize_prompt(std::string_view aggregate, std::string_view target_language) {
    return prompts::make_attr_summarize_prompt(target_language, utf8_truncate(aggregate, kAttrSampleChars));
}

/// Build the sliding-window attribute context for a segment. The window is
/// centered on the segment start and clamped to [0, duration]; an empty
/// window produces an all-empty context without touching the backend.
inline AttrContext build_attr_context(const Timeline& tl, const TimeSpan& segment,
                                      std::string_view target_language, BackendClient& summarizer,
                                      const WindowOptions& opts) {
    AttrContext ctx;
    ctx.window.start_ms = std::max<std::int64_t>(0, segment.start_ms - opts.half_width_ms);
    ctx.window.end_ms = std::min(opts.duration_ms, segment.start_ms + opts.half_width_ms);

    const auto frames = timeline::frames_in_window(tl, segment.start_ms, opts.half_width_ms, opts.duration_ms);
    if (frames.empty()) {
        ctx.no_visual = true;
        return ctx;
    }
    const std::string aggregate = join_descriptions(frames);
    ctx.source_char_count = static_cast<std::int64_t>(utf8_length(aggregate));

    const PromptBundle prompt = attr_summarize_prompt(aggregate, target_language);
    const std::string reply = summarizer.complete(prompt.system_text, prompt.user_text,
                                                  prompts::render_raw(prompt));
    parse_attr_tags(reply, ctx);
    return ctx;
}

// -------------------------------------------------------------- gap context

inline GapSpan gap_between(const TimeSpan* prev, const TimeSpan& cur) {
    return GapSpan{prev ? prev->end_ms : 0, cur.start_ms};
}

inline PromptBundle gap_summarize_prompt(const GapSpan& gap, std::string_view blob) {
    return prompts::make_gap_summarize_prompt(gap.prev_end_ms / 1000, gap.cur_start_ms / 1000,
                                              utf8_truncate(blob, kGapBlobChars));
}

/// Build the inter-subtitle gap context. Degenerate gaps (overlapping or
/// touching subtitles) and frameless gaps yield an empty context with no
/// backend call.
inline GapContext build_gap_context(const Timeline& tl, const TimeSpan* prev, const TimeSpan& cur,
                                    BackendClient& summarizer) {
    GapContext ctx;
    ctx.gap = gap_between(prev, cur);
    const auto frames = timeline::frames_in_gap(tl, ctx.gap);
    ctx.frame_count = static_cast<int>(frames.size());
    if (frames.empty()) return ctx;

    const std::string blob = join_descriptions(frames);
    ctx.source_char_count = static_cast<std::int64_t>(utf8_length(blob));
    const PromptBundle prompt = gap_summarize_prompt(ctx.gap, blob);
    ctx.text = summarizer.complete(prompt.system_text, prompt.user_text, prompts::render_raw(prompt));
    return ctx;
}

// -------------------------------------------------- translation prompts

struct RenderedPrompt {
    PromptBundle bundle;
    bool fallback_baseline = false; // visual variant degraded to the baseline template
};

/// Render the translation prompt for a segment. No context (or an empty
/// one) falls back to the baseline template and is flagged; a usable
/// context selects the visual-enhanced template.
inline RenderedPrompt render_translation_prompt(std::string_view source_text,
                                                const VisualContext& context,
                                                std::string_view target_language) {
    RenderedPrompt out;
    if (const auto* attr = std::get_if<AttrContext>(&context)) {
        if (!attr->no_visual && !attr_context_empty(*attr)) {
            out.bundle = prompts::make_visual_translate_prompt(target_language,
                                                               serialize_attr_context(*attr), source_text);
            return out;
        }
        out.fallback_baseline = true;
    } else if (const auto* gap = std::get_if<GapContext>(&context)) {
        if (!gap->text.empty()) {
            out.bundle = prompts::make_visual_translate_prompt(target_language, gap->text, source_text);
            return out;
        }
        out.fallback_baseline = true;
    }
    out.bundle = prompts::make_baseline_translate_prompt(target_language, source_text);
    return out;
}

// -------------------------------------------------------- cache records

/// Context cache line: {"idx", "kind", "context", "prompt_chars"}.
/// prompt_chars is the truncated character count that entered the
/// summarization prompt (0 when no backend call was made).

inline Json attr_context_to_json(const AttrContext& ctx) {
    return Json{{"setting", ctx.setting},
                {"gender", ctx.gender},
                {"relation", ctx.relation},
                {"honorific", ctx.honorific},
                {"summary", ctx.summary},
                {"window", Json{{"start_ms", ctx.window.start_ms}, {"end_ms", ctx.window.end_ms}}},
                {"source_chars", ctx.source_char_count},
                {"no_visual", ctx.no_visual},
                {"parse_warning", ctx.parse_warning}};
}

inline AttrContext attr_context_from_json(const Json& j) {
    AttrContext ctx;
    ctx.setting = j.at("setting").get<std::string>();
    ctx.gender = j.at("gender").get<std::string>();
    ctx.relation = j.at("relation").get<std::string>();
    ctx.honorific = j.at("honorific").get<std::string>();
    ctx.summary = j.at("summary").get<std::string>();
    ctx.window.start_ms = j.at("window").at("start_ms").get<std::int64_t>();
    ctx.window.end_ms = j.at("window").at("end_ms").get<std::int64_t>();
    ctx.source_char_count = j.at("source_chars").get<std::int64_t>();
    ctx.no_visual = j.at("no_visual").get<bool>();
    ctx.parse_warning = j.at("parse_warning").get<bool>();
    return ctx;
}

inline Json gap_context_to_json(const GapContext& ctx) {
    return Json{{"text", ctx.text},
                {"gap", Json{{"prev_end_ms", ctx.gap.prev_end_ms},
                             {"cur_start_ms", ctx.gap.cur_start_ms},
                             {"degenerate", ctx.gap.degenerate()}}},
                {"frame_count", ctx.frame_count},
                {"source_chars", ctx.source_char_count}};
}

inline GapContext gap_context_from_json(const Json& j) {
    GapContext ctx;
    ctx.text = j.at("text").get<std::string>();
    ctx.gap.prev_end_ms = j.at("gap").at("prev_end_ms").get<std::int64_t>();
    ctx.gap.cur_start_ms = j.at("gap").at("cur_start_ms").get<std::int64_t>();
    ctx.frame_count = j.at("frame_count").get<int>();
    ctx.source_char_count = j.value("source_chars", std::int64_t{0});
    return ctx;
}

} // namespace subgrain::context
