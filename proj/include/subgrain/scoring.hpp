#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subgrain/errors.hpp"
#include "subgrain/jsonl.hpp"
#include "subgrain/translation.hpp"
#include "subgrain/util.hpp"

namespace subgrain::scoring {

// ----------------------------------------------------------- tokenizer

namespace detail {

// International-style tokenization: every punctuation or symbol codepoint
// from the table below becomes its own token; whitespace separates the
// rest; no case folding. The ranges cover ASCII, Latin-1 punctuation,
// general/CJK punctuation, currency and math symbols, and the Indic danda.
inline bool is_punct_or_symbol(char32_t cp) {
    if ((cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
        (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E)) return true;
    if ((cp >= 0xA1 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7) return true;
    if (cp == 0x0964 || cp == 0x0965) return true;             // danda
    if (cp >= 0x2010 && cp <= 0x2027) return true;              // dashes, quotes, ellipsis
    if (cp >= 0x2030 && cp <= 0x205E) return true;
    if (cp >= 0x20A0 && cp <= 0x20BF) return true;              // currency
    if (cp >= 0x2100 && cp <= 0x2BFF) return true;              // letterlike..misc symbols
    if (cp >= 0x3001 && cp <= 0x303F) return true;              // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE4F) return true;
    if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
        (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65)) return true;
    return false;
}

inline bool is_space_cp(char32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
           cp == 0xA0 || (cp >= 0x2000 && cp <= 0x200B) || cp == 0x202F || cp == 0x205F ||
           cp == 0x3000;
}

} // namespace detail

inline std::vector<std::string> tokenize_intl(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    while (i < text.size()) {
        const DecodedChar d = decode_utf8(text, i);
        const std::string_view unit = text.substr(i, d.valid ? d.length : 1);
        const char32_t cp = d.valid ? d.cp : static_cast<char32_t>(static_cast<unsigned char>(text[i]));
        if (detail::is_space_cp(cp)) {
            flush();
        } else if (detail::is_punct_or_symbol(cp)) {
            flush();
            tokens.emplace_back(unit);
        } else {
            current += unit;
        }
        i += unit.size();
    }
    flush();
    return tokens;
}

// ----------------------------------------------------------------- BLEU

namespace detail {

using NgramCounts = std::map<std::vector<std::string>, std::int64_t>;

inline NgramCounts ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
    NgramCounts counts;
    if (tokens.size() >= n) {
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            ++counts[{tokens.begin() + static_cast<long>(i), tokens.begin() + static_cast<long>(i + n)}];
        }
    }
    return counts;
}

inline void check_corpus(std::size_t hyps, std::size_t refs) {
    if (hyps != refs) throw ValidationError("hypothesis/reference count mismatch");
    if (hyps == 0) throw ValidationError("empty corpus");
}

} // namespace detail

/// Corpus BLEU over n-gram orders 1-4: clipped precisions, geometric mean,
/// brevity penalty, 0-100 scale. Zero-match orders take the exponential
/// smoothing value 1/(2^k * total); orders the hypotheses never reach drop
/// out of the mean. All-empty hypotheses score 0.
inline double corpus_bleu(std::span<const std::string> hyps, std::span<const std::string> refs) {
    detail::check_corpus(hyps.size(), refs.size());
    constexpr std::size_t kMaxOrder = 4;
    std::int64_t matches[kMaxOrder] = {0, 0, 0, 0};
    std::int64_t totals[kMaxOrder] = {0, 0, 0, 0};
    std::int64_t hyp_len = 0;
    std::int64_t ref_len = 0;

    for (std::size_t s = 0; s < hyps.size(); ++s) {
        const auto hyp_tokens = tokenize_intl(hyps[s]);
        const auto ref_tokens = tokenize_intl(refs[s]);
        hyp_len += static_cast<std::int64_t>(hyp_tokens.size());
        ref_len += static_cast<std::int64_t>(ref_tokens.size());
        for (std::size_t n = 1; n <= kMaxOrder; ++n) {
            const auto hyp_counts = detail::ngram_counts(hyp_tokens, n);
            const auto ref_counts = detail::ngram_counts(ref_tokens, n);
            for (const auto& [gram, count] : hyp_counts) {
                totals[n - 1] += count;
                const auto it = ref_counts.find(gram);
                if (it != ref_counts.end()) matches[n - 1] += std::min(count, it->second);
            }
        }
    }

    if (hyp_len == 0) return 0.0;

    double log_sum = 0.0;
    std::size_t effective_order = 0;
    double smooth = 1.0;
    for (std::size_t n = 0; n < kMaxOrder; ++n) {
        if (totals[n] == 0) break;
        ++effective_order;
        double p;
        if (matches[n] == 0) {
            smooth *= 2.0;
            p = 1.0 / (smooth * static_cast<double>(totals[n]));
        } else {
            p = static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
        }
        log_sum += std::log(p);
    }
    if (effective_order == 0) return 0.0;

    const double bp = hyp_len >= ref_len
        ? 1.0
        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return 100.0 * bp * std::exp(log_sum / static_cast<double>(effective_order));
}

// --------------------------------------------------------------- chrF++

/// chrF++ with character order 6, word order 2, beta = 2, 0-100 scale.
/// Character n-grams run over the whitespace-stripped text in Unicode
/// scalar values; word n-grams over whitespace tokens. Precision and recall
/// are corpus totals per order, averaged over orders active on either side,
/// then combined as F_beta. Identity scores 100; an empty hypothesis
/// against a non-empty reference scores 0.
inline double corpus_chrfpp(std::span<const std::string> hyps, std::span<const std::string> refs) {
    detail::check_corpus(hyps.size(), refs.size());
    constexpr std::size_t kCharOrder = 6;
    constexpr std::size_t kWordOrder = 2;
    constexpr std::size_t kOrders = kCharOrder + kWordOrder;
    constexpr double kBetaSq = 4.0;

    std::int64_t tp[kOrders] = {};
    std::int64_t hyp_total[kOrders] = {};
    std::int64_t ref_total[kOrders] = {};

    auto char_units = [](std::string_view s) {
        std::vector<std::string> units;
        std::size_t i = 0;
        while (i < s.size()) {
            const DecodedChar d = decode_utf8(s, i);
            const std::size_t len = d.valid ? d.length : 1;
            const char32_t cp = d.valid ? d.cp : static_cast<char32_t>(static_cast<unsigned char>(s[i]));
            if (!detail::is_space_cp(cp)) units.emplace_back(s.substr(i, len));
            i += len;
        }
        return units;
    };

    for (std::size_t s = 0; s < hyps.size(); ++s) {
        const auto hyp_chars = char_units(hyps[s]);
        const auto ref_chars = char_units(refs[s]);
        const auto hyp_words = split_ws(hyps[s]);
        const auto ref_words = split_ws(refs[s]);
        for (std::size_t n = 1; n <= kOrders; ++n) {
            const bool word_order = n > kCharOrder;
            const std::size_t k = word_order ? n - kCharOrder : n;
            const auto hc = detail::ngram_counts(word_order ? hyp_words : hyp_chars, k);
            const auto rc = detail::ngram_counts(word_order ? ref_words : ref_chars, k);
            for (const auto& [gram, count] : hc) {
                hyp_total[n - 1] += count;
                const auto it = rc.find(gram);
                if (it != rc.end()) tp[n - 1] += std::min(count, it->second);
            }
            for (const auto& [gram, count] : rc) ref_total[n - 1] += count;
        }
    }

    double prec_sum = 0.0;
    double rec_sum = 0.0;
    std::size_t active = 0;
    for (std::size_t n = 0; n < kOrders; ++n) {
        if (hyp_total[n] == 0 && ref_total[n] == 0) continue;
        ++active;
        if (hyp_total[n] > 0) prec_sum += static_cast<double>(tp[n]) / static_cast<double>(hyp_total[n]);
        if (ref_total[n] > 0) rec_sum += static_cast<double>(tp[n]) / static_cast<double>(ref_total[n]);
    }
    if (active == 0) return 0.0;
    const double prec = prec_sum / static_cast<double>(active);
    const double rec = rec_sum / static_cast<double>(active);
    const double denom = kBetaSq * prec + rec;
    if (denom <= 0.0) return 0.0;
    return 100.0 * (1.0 + kBetaSq) * prec * rec / denom;
}

// ------------------------------------------------------ segment scores

struct SegmentScore {
    int idx = 0;
    std::string variant;
    double score = 0.0;
};

/// Read a segment score file (JSON Lines {"idx", "variant", "score"}).
/// Unknown variants and duplicate (idx, variant) pairs are format errors.
inline std::vector<SegmentScore> ingest_segment_scores(const std::filesystem::path& path) {
    std::vector<SegmentScore> scores;
    std::set<std::pair<int, std::string>> seen;
    for (const auto& [value, line] : read_jsonl(path)) {
        SegmentScore s;
        s.idx = value.at("idx").get<int>();
        s.variant = value.at("variant").get<std::string>();
        s.score = value.at("score").get<double>();
        if (!translation::is_known_variant(s.variant)) {
            throw FormatError(path.string() + ": unknown variant \"" + s.variant + "\" on line " +
                              std::to_string(line));
        }
        if (!seen.emplace(s.idx, s.variant).second) {
            throw FormatError(path.string() + ": duplicate score for idx " + std::to_string(s.idx) +
                              " variant " + s.variant + " on line " + std::to_string(line));
        }
        scores.push_back(std::move(s));
    }
    return scores;
}

inline std::map<int, double> scores_by_idx(const std::vector<SegmentScore>& scores,
                                           std::string_view variant) {
    std::map<int, double> out;
    for (const auto& s : scores) {
        if (s.variant == variant) out[s.idx] = s.score;
    }
    return out;
}

// -------------------------------------------------- selective grounding

/// Replacement decision at level k: the floor(n*k/100) lowest-scoring
/// baseline segments, ties broken by ascending idx. `replaced` is kept
/// sorted by idx.
struct SelectivePlan {
    double k_percent = 0.0;
    std::vector<int> replaced;
    std::size_t n_total = 0;

    bool contains(int idx) const {
        return std::binary_search(replaced.begin(), replaced.end(), idx);
    }
};

/// Plan which segments the visual-enhanced translation replaces. The scores
/// must be the complete baseline set; when `expected_idx` is given, missing
/// entries are reported by index.
inline SelectivePlan plan_selective(const std::vector<SegmentScore>& baseline_scores,
                                    double k_percent,
                                    const std::vector<int>* expected_idx = nullptr) {
    if (!(k_percent > 0.0 && k_percent <= 100.0)) {
        throw ConfigError("k_percent must lie in (0, 100]");
    }
    std::vector<std::pair<double, int>> ranked; // (score, idx)
    std::set<int> present;
    for (const auto& s : baseline_scores) {
        if (s.variant != translation::kVariantBaseline) continue;
        ranked.emplace_back(s.score, s.idx);
        present.insert(s.idx);
    }
    if (expected_idx) {
        std::string missing;
        for (const int idx : *expected_idx) {
            if (!present.count(idx)) missing += (missing.empty() ? "" : ", ") + std::to_string(idx);
        }
        if (!missing.empty()) {
            throw ValidationError("missing baseline scores for idx: " + missing);
        }
    }
    if (ranked.empty()) throw ValidationError("no baseline scores to plan from");

    SelectivePlan plan;
    plan.k_percent = k_percent;
    plan.n_total = ranked.size();
    const auto budget = static_cast<std::size_t>(
        std::floor(static_cast<double>(plan.n_total) * k_percent / 100.0 + 1e-9));
    std::sort(ranked.begin(), ranked.end());
    for (std::size_t i = 0; i < budget && i < ranked.size(); ++i) {
        plan.replaced.push_back(ranked[i].second);
    }
    std::sort(plan.replaced.begin(), plan.replaced.end());
    return plan;
}

inline Json selective_plan_to_json(const SelectivePlan& plan) {
    return Json{{"k_percent", plan.k_percent},
                {"replaced", plan.replaced},
                {"n_total", plan.n_total}};
}

/// Merge baseline and visual translations under a plan: replaced indices
/// take the visual record, everything else keeps the baseline. Output
/// follows the baseline (corpus) order; records keep their own variant tag
/// as provenance.
inline std::vector<translation::TranslationRecord> apply_selective(
    const std::vector<translation::TranslationRecord>& baseline,
    const std::vector<translation::TranslationRecord>& visual,
    const SelectivePlan& plan) {
    std::map<int, const translation::TranslationRecord*> visual_by_idx;
    for (const auto& r : visual) visual_by_idx[r.idx] = &r;
    std::set<int> baseline_idx;
    for (const auto& r : baseline) baseline_idx.insert(r.idx);
    for (const int idx : plan.replaced) {
        if (!visual_by_idx.count(idx)) {
            throw ValidationError("plan replaces idx " + std::to_string(idx) +
                                  " but the visual variant has no record for it");
        }
        if (!baseline_idx.count(idx)) {
            throw ValidationError("plan replaces idx " + std::to_string(idx) +
                                  " which is absent from the baseline");
        }
    }

    std::vector<translation::TranslationRecord> out;
    out.reserve(baseline.size());
    for (const auto& base : baseline) {
        if (plan.contains(base.idx)) {
            out.push_back(*visual_by_idx.at(base.idx));
        } else {
            out.push_back(base);
        }
    }
    return out;
}

// ----------------------------------------------------------- aggregation

/// Corpus-level score from per-segment scores: the arithmetic mean. Kept as
/// its own operation so the aggregation rule has exactly one home.
inline double corpus_score_from_segments(std::span<const double> scores) {
    if (scores.empty()) throw ValidationError("cannot aggregate an empty score list");
    double sum = 0.0;
    for (const double s : scores) sum += s;
    return sum / static_cast<double>(scores.size());
}

struct MetricTriple {
    double bleu = std::numeric_limits<double>::quiet_NaN();
    double chrfpp = std::numeric_limits<double>::quiet_NaN();
    double comet = std::numeric_limits<double>::quiet_NaN();
};

} // namespace subgrain::scoring
