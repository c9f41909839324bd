#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "subgrain/errors.hpp"
#include "subgrain/jsonl.hpp"
#include "subgrain/util.hpp"

namespace subgrain::timedtext {

// ---------------------------------------------------------------- types

struct TimeSpan {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0; // invariant: start_ms <= end_ms

    std::int64_t length_ms() const { return end_ms - start_ms; }
    bool operator==(const TimeSpan&) const = default;
};

/// Positive overlap length of two inclusive spans, 0 when disjoint or touching.
inline std::int64_t span_overlap_ms(const TimeSpan& a, const TimeSpan& b) {
    return std::max<std::int64_t>(0, std::min(a.end_ms, b.end_ms) - std::max(a.start_ms, b.start_ms));
}

struct SubtitleSegment {
    int index = 0;        // cue number as written in the file
    TimeSpan span;
    std::string text;     // normalized; equals raw_text until normalize() ran
    std::string raw_text; // verbatim cue text, lines joined with '\n'

    bool operator==(const SubtitleSegment&) const = default;
};

struct ParallelCorpus {
    std::string movie_id;
    std::string language;
    std::vector<std::pair<SubtitleSegment, SubtitleSegment>> pairs; // (source, reference)
};

/// One line of the canonical corpus file. Timing is the source segment's.
struct CorpusRow {
    int idx = 0;
    TimeSpan span;
    std::string src;
    std::string ref;

    bool operator==(const CorpusRow&) const = default;
};

// --------------------------------------------------------------- parser

struct SrtParseResult {
    std::vector<SubtitleSegment> segments;
    std::vector<std::string> warnings; // e.g. non-monotonic cue numbers
};

namespace detail {

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// "HH:MM:SS,mmm" with exactly two-digit fields and three-digit millis.
inline std::optional<std::int64_t> parse_timecode(std::string_view s) {
    if (s.size() != 12) return std::nullopt;
    if (s[2] != ':' || s[5] != ':' || s[8] != ',') return std::nullopt;
    auto dig = [&](std::size_t i) { return s[i] >= '0' && s[i] <= '9'; };
    for (std::size_t i : {0u, 1u, 3u, 4u, 6u, 7u, 9u, 10u, 11u})
        if (!dig(i)) return std::nullopt;
    auto num = [&](std::size_t i, std::size_t n) {
        std::int64_t v = 0;
        for (std::size_t k = 0; k < n; ++k) v = v * 10 + (s[i + k] - '0');
        return v;
    };
    return ((num(0, 2) * 60 + num(3, 2)) * 60 + num(6, 2)) * 1000 + num(9, 3);
}

inline std::string format_timecode(std::int64_t ms) {
    const std::int64_t h = ms / 3600000;
    const std::int64_t m = (ms / 60000) % 60;
    const std::int64_t s = (ms / 1000) % 60;
    const std::int64_t f = ms % 1000;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld,%03lld",
                  static_cast<long long>(h), static_cast<long long>(m),
                  static_cast<long long>(s), static_cast<long long>(f));
    return buf;
}

} // namespace detail

/// Parse a SubRip byte stream. Tolerates an optional UTF-8 BOM, CRLF/LF
/// mixtures, trailing blank lines, and gaps in cue numbering (warned, kept).
/// Timing lines must match `HH:MM:SS,mmm --> HH:MM:SS,mmm` exactly.
inline SrtParseResult parse_srt(std::string_view raw) {
    SrtParseResult result;
    if (raw.substr(0, 3) == "\xEF\xBB\xBF") raw.remove_prefix(3);

    // Split into physical lines; CR before LF is stripped per line.
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        std::size_t nl = raw.find('\n', pos);
        std::string_view line =
            raw.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }

    std::size_t i = 0;
    int prev_index = std::numeric_limits<int>::min();
    while (i < lines.size()) {
        if (trim(lines[i]).empty()) { ++i; continue; }

        const int index_line = static_cast<int>(i) + 1;
        const std::string_view index_str = trim(lines[i]);
        if (!detail::all_digits(index_str) || index_str.size() > 9) {
            throw ParseError("expected cue number, got \"" + std::string(index_str) + "\"", index_line);
        }
        const int index = std::stoi(std::string(index_str));
        ++i;

        if (i >= lines.size()) throw ParseError("cue truncated before timing line", index_line);
        const int timing_line = static_cast<int>(i) + 1;
        std::string_view timing = trim(lines[i]);
        const std::size_t arrow = timing.find(" --> ");
        std::optional<std::int64_t> start, end;
        if (arrow != std::string_view::npos) {
            start = detail::parse_timecode(timing.substr(0, arrow));
            end = detail::parse_timecode(timing.substr(arrow + 5));
        }
        if (!start || !end) {
            throw ParseError("malformed timing line \"" + std::string(timing) + "\"", timing_line);
        }
        if (*end < *start) {
            throw ValidationError("cue ends before it starts", timing_line);
        }
        ++i;

        std::vector<std::string> text_lines;
        while (i < lines.size() && !trim(lines[i]).empty()) {
            text_lines.emplace_back(lines[i]);
            ++i;
        }
        if (text_lines.empty()) {
            throw ParseError("cue has no text", timing_line);
        }

        if (index <= prev_index) {
            result.warnings.push_back("non-monotonic cue number " + std::to_string(index) +
                                      " at line " + std::to_string(index_line));
        }
        prev_index = index;

        SubtitleSegment seg;
        seg.index = index;
        seg.span = {*start, *end};
        seg.raw_text = join(text_lines, "\n");
        seg.text = seg.raw_text;
        result.segments.push_back(std::move(seg));
    }
    return result;
}

/// Canonical SubRip form: LF newlines, no BOM, one blank line after each cue.
/// parse_srt(serialize_srt(segs)) round-trips; for files already canonical the
/// bytes are identical.
inline std::string serialize_srt(const std::vector<SubtitleSegment>& segments) {
    std::string out;
    for (const auto& seg : segments) {
        out += std::to_string(seg.index);
        out += '\n';
        out += detail::format_timecode(seg.span.start_ms);
        out += " --> ";
        out += detail::format_timecode(seg.span.end_ms);
        out += '\n';
        out += seg.raw_text;
        out += "\n\n";
    }
    return out;
}

// ---------------------------------------------------------- normalization

namespace detail {

// Markup removal: <...> tag blocks and {\...} override blocks. An opener with
// no closer stays literal.
inline std::string strip_markup(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '<') {
            const std::size_t close = s.find('>', i + 1);
            if (close != std::string_view::npos) { i = close + 1; continue; }
        } else if (s[i] == '{' && i + 1 < s.size() && s[i + 1] == '\\') {
            const std::size_t close = s.find('}', i + 2);
            if (close != std::string_view::npos) { i = close + 1; continue; }
        }
        out += s[i];
        ++i;
    }
    return out;
}

// Fixed replacement table: curly quotes, dashes, ellipsis and exotic spaces
// map to their ASCII equivalents. Everything else passes through.
inline bool map_codepoint(char32_t cp, std::string& out) {
    switch (cp) {
        case 0x2018: case 0x2019: case 0x201A: case 0x2032:
            out += '\''; return true;
        case 0x201C: case 0x201D: case 0x201E: case 0x2033:
            out += '"'; return true;
        case 0x2010: case 0x2011: case 0x2012: case 0x2013:
        case 0x2014: case 0x2015: case 0x2212:
            out += '-'; return true;
        case 0x2026:
            out += "..."; return true;
        case 0x00A0: case 0x2007: case 0x202F: case 0x205F: case 0x3000:
            out += ' '; return true;
        default:
            if (cp >= 0x2000 && cp <= 0x200B) { out += ' '; return true; }
            return false;
    }
}

inline std::string map_punctuation(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const DecodedChar d = decode_utf8(s, i);
        if (!d.valid) {
            out += s[i];
            i += 1;
            continue;
        }
        if (!map_codepoint(d.cp, out)) out.append(s.substr(i, d.length));
        i += d.length;
    }
    return out;
}

inline std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (const char c : s) {
        if (is_ascii_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += c;
        }
    }
    return out;
}

} // namespace detail

/// Punctuation/whitespace canonicalization without markup handling. Shared by
/// subtitle normalization and frame-description cleaning. Idempotent.
inline std::string normalize_punct_ws(std::string_view s) {
    return detail::collapse_whitespace(detail::map_punctuation(s));
}

/// Full subtitle text normalization: markup stripped, punctuation mapped to
/// ASCII, whitespace collapsed, ends trimmed. Idempotent. A result that comes
/// out empty marks the segment for filtering.
inline std::string normalize_text(std::string_view s) {
    return normalize_punct_ws(detail::strip_markup(s));
}

inline SubtitleSegment normalize(SubtitleSegment seg) {
    seg.text = normalize_text(seg.raw_text);
    return seg;
}

inline std::vector<SubtitleSegment> normalize_all(std::vector<SubtitleSegment> segs) {
    for (auto& s : segs) s = normalize(std::move(s));
    return segs;
}

// ------------------------------------------------------------- filtering

struct FilterStats {
    std::size_t kept = 0;
    std::size_t dropped = 0;
};

/// Keep segments whose normalized word count lies in [min_words, max_words]
/// and whose text is non-empty. Order and surviving segments are untouched.
inline std::vector<SubtitleSegment> filter_segments(const std::vector<SubtitleSegment>& segs,
                                                    int min_words, int max_words,
                                                    FilterStats* stats = nullptr) {
    if (min_words < 1 || min_words > max_words) {
        throw ConfigError("filter requires 1 <= min_words <= max_words");
    }
    std::vector<SubtitleSegment> out;
    out.reserve(segs.size());
    FilterStats local;
    for (const auto& seg : segs) {
        const auto words = static_cast<long>(word_count(seg.text));
        if (!seg.text.empty() && words >= min_words && words <= max_words) {
            out.push_back(seg);
            ++local.kept;
        } else {
            ++local.dropped;
        }
    }
    if (stats) *stats = local;
    return out;
}

// --------------------------------------------------------------- pairing

struct PairStats {
    std::size_t dropped_source = 0;
    std::size_t dropped_reference = 0;
    bool paired_by_index = false;
};

/// Pair source and reference segments. When both files carry the same cue
/// numbers the pairing is by number; otherwise each source is greedily
/// assigned (in file order) the unused reference with the largest positive
/// span overlap, ties to the earlier reference. Unmatched segments are
/// dropped and counted. In overlap mode the reference is re-numbered to its
/// source's cue number so every pair carries one index.
inline ParallelCorpus pair_corpora(std::string movie_id, std::string language,
                                   const std::vector<SubtitleSegment>& source,
                                   const std::vector<SubtitleSegment>& reference,
                                   PairStats* stats = nullptr) {
    ParallelCorpus corpus;
    corpus.movie_id = std::move(movie_id);
    corpus.language = std::move(language);
    PairStats local;

    std::vector<int> src_idx, ref_idx;
    for (const auto& s : source) src_idx.push_back(s.index);
    for (const auto& r : reference) ref_idx.push_back(r.index);

    if (!source.empty() && src_idx == ref_idx) {
        local.paired_by_index = true;
        for (std::size_t i = 0; i < source.size(); ++i) {
            corpus.pairs.emplace_back(source[i], reference[i]);
        }
    } else {
        std::vector<bool> used(reference.size(), false);
        for (const auto& src : source) {
            std::int64_t best_overlap = 0;
            std::size_t best = reference.size();
            for (std::size_t j = 0; j < reference.size(); ++j) {
                if (used[j]) continue;
                const std::int64_t ov = span_overlap_ms(src.span, reference[j].span);
                if (ov > best_overlap) {
                    best_overlap = ov;
                    best = j;
                }
            }
            if (best == reference.size()) {
                ++local.dropped_source;
                continue;
            }
            used[best] = true;
            SubtitleSegment ref = reference[best];
            ref.index = src.index;
            corpus.pairs.emplace_back(src, std::move(ref));
        }
        local.dropped_reference =
            static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
    }

    if (corpus.pairs.empty()) {
        throw EmptyCorpusError("pairing produced no segment pairs for language " + corpus.language);
    }
    if (stats) *stats = local;
    return corpus;
}

// --------------------------------------------------------- canonical file

inline std::vector<CorpusRow> corpus_rows(const ParallelCorpus& corpus) {
    std::vector<CorpusRow> rows;
    rows.reserve(corpus.pairs.size());
    for (const auto& [src, ref] : corpus.pairs) {
        rows.push_back({src.index, src.span, src.text, ref.text});
    }
    return rows;
}

inline Json corpus_row_to_json(const CorpusRow& row) {
    return Json{{"idx", row.idx},
                {"start_ms", row.span.start_ms},
                {"end_ms", row.span.end_ms},
                {"src", row.src},
                {"ref", row.ref}};
}

inline CorpusRow corpus_row_from_json(const Json& j) {
    CorpusRow row;
    row.idx = j.at("idx").get<int>();
    row.span.start_ms = j.at("start_ms").get<std::int64_t>();
    row.span.end_ms = j.at("end_ms").get<std::int64_t>();
    row.src = j.at("src").get<std::string>();
    row.ref = j.at("ref").get<std::string>();
    return row;
}

} // namespace subgrain::timedtext
