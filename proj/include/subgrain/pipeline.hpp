#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "subgrain/backends.hpp"
#include "subgrain/config.hpp"
#include "subgrain/context.hpp"
#include "subgrain/errors.hpp"
#include "subgrain/jsonl.hpp"
#include "subgrain/report.hpp"
#include "subgrain/scoring.hpp"
#include "subgrain/timedtext.hpp"
#include "subgrain/timeline.hpp"
#include "subgrain/translation.hpp"
#include "subgrain/util.hpp"

namespace subgrain::pipeline {

namespace fs = std::filesystem;
using config::PipelineConfig;
using timedtext::CorpusRow;

// ------------------------------------------------------------ reporting

struct StageReport {
    std::string stage;
    std::string config_hash;
    std::size_t segments = 0;
    std::size_t backend_calls = 0;
    std::vector<std::string> failures;
    Json extra = Json::object();

    bool ok() const { return failures.empty(); }
};

// -------------------------------------------------------------- clients

/// Backend clients shared by the stages of one run; call counters live on
/// the clients so manifests can report per-stage usage.
struct BackendSet {
    std::shared_ptr<backends::BackendClient> describe;
    std::shared_ptr<backends::BackendClient> summarize;
    std::shared_ptr<backends::BackendClient> translate;
    std::shared_ptr<std::atomic<std::size_t>> calls = std::make_shared<std::atomic<std::size_t>>(0);
};

inline BackendSet make_backends(const PipelineConfig& cfg) {
    BackendSet set;
    for (const auto& [role, profile] : cfg.backends) {
        auto client = std::make_shared<backends::BackendClient>(profile);
        switch (role) {
            case backends::Role::describe: set.describe = client; break;
            case backends::Role::summarize: set.summarize = client; break;
            case backends::Role::translate: set.translate = client; break;
        }
    }
    return set;
}

// ------------------------------------------------------------ artifacts

inline fs::path corpus_path(const PipelineConfig& cfg, const std::string& lang) {
    return cfg.paths.workdir / ("corpus." + lang + ".jsonl");
}
inline fs::path timeline_path(const PipelineConfig& cfg) {
    return cfg.paths.workdir / "timeline.jsonl";
}
inline fs::path context_path(const PipelineConfig& cfg, const std::string& method,
                             const std::string& lang) {
    return cfg.paths.workdir / ("context." + method + "." + lang + ".jsonl");
}
inline fs::path translations_path(const PipelineConfig& cfg, const std::string& variant,
                                  const std::string& lang) {
    return cfg.paths.workdir / ("trans." + variant + "." + lang + ".jsonl");
}
inline fs::path results_path(const PipelineConfig& cfg) { return cfg.paths.workdir / "results.json"; }
inline fs::path report_dir(const PipelineConfig& cfg) { return cfg.paths.workdir / "report"; }
inline fs::path logs_dir(const PipelineConfig& cfg) { return cfg.paths.workdir / "logs"; }

/// Every stage artifact starts with {"artifact": <name>, "config_hash": <stamp>}
/// so stages refuse to mix outputs of different configs.
inline void write_artifact(const fs::path& path, const std::string& name,
                           const std::string& hash, const std::vector<Json>& rows) {
    std::vector<Json> all;
    all.reserve(rows.size() + 1);
    all.push_back(Json{{"artifact", name}, {"config_hash", hash}});
    all.insert(all.end(), rows.begin(), rows.end());
    write_file(path, dump_jsonl(all));
}

inline std::vector<JsonlLine> read_artifact(const fs::path& path, const std::string& name,
                                            const std::string& hash) {
    auto lines = read_jsonl(path);
    if (lines.empty() || !lines.front().value.contains("artifact")) {
        throw FormatError(path.string() + ": missing artifact header");
    }
    const Json& header = lines.front().value;
    if (header.at("artifact").get<std::string>() != name) {
        throw FormatError(path.string() + ": expected artifact \"" + name + "\"");
    }
    if (header.at("config_hash").get<std::string>() != hash) {
        throw ConfigError(path.string() + ": artifact was produced by a different config (hash " +
                          header.at("config_hash").get<std::string>() + ", expected " + hash + ")");
    }
    lines.erase(lines.begin());
    return lines;
}

inline std::optional<std::vector<JsonlLine>> try_read_artifact(const fs::path& path,
                                                               const std::string& name,
                                                               const std::string& hash) {
    if (!fs::exists(path)) return std::nullopt;
    return read_artifact(path, name, hash);
}

inline void write_manifest(const PipelineConfig& cfg, const std::string& name,
                           const StageReport& rep) {
    Json j{{"stage", rep.stage},
           {"config_hash", rep.config_hash},
           {"segments", rep.segments},
           {"backend_calls", rep.backend_calls},
           {"failures", rep.failures},
           {"extra", rep.extra}};
    write_file(logs_dir(cfg) / (name + ".json"), j.dump(2) + "\n");
}

// ------------------------------------------------------- parallel runner

namespace detail {

/// Run fn(i) for i in [0, n) on up to `concurrency` threads. Exceptions are
/// collected per slot (empty string = success) so one bad segment never
/// aborts the batch; callers attach their own labels.
template <typename Fn>
inline std::vector<std::string> parallel_for_indexed(std::size_t n, int concurrency, Fn&& fn) {
    std::vector<std::string> failures(n);
    if (n == 0) return failures;
    const std::size_t workers = std::min<std::size_t>(std::max(1, concurrency), n);
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    return failures;
}

inline std::vector<CorpusRow> load_corpus_rows(const PipelineConfig& cfg, const std::string& hash,
                                               const std::string& lang) {
    const auto lines = try_read_artifact(corpus_path(cfg, lang), "corpus", hash);
    if (!lines) {
        throw IoError("missing corpus artifact for language " + lang + "; run prepare first");
    }
    std::vector<CorpusRow> rows;
    for (const auto& [value, line] : *lines) rows.push_back(timedtext::corpus_row_from_json(value));
    return rows;
}

inline timeline::Timeline load_timeline_artifact(const PipelineConfig& cfg, const std::string& hash) {
    const auto lines = try_read_artifact(timeline_path(cfg), "timeline", hash);
    if (!lines) throw IoError("missing timeline artifact; run prepare first");
    std::vector<timeline::FrameDescription> frames;
    for (const auto& [value, line] : *lines) {
        frames.push_back({value.at("t_ms").get<std::int64_t>(),
                          value.at("text").get<std::string>(),
                          value.at("clean").get<std::string>()});
    }
    return timeline::Timeline{std::move(frames)};
}

} // namespace detail

// ----------------------------------------------------------- frame input

/// Describe a directory of `frame_<seconds>.jpg` images through the vision
/// backend and assemble the cleaned timeline.
inline timeline::Timeline load_frames_from_images(const fs::path& dir,
                                                  backends::BackendClient& describer) {
    std::vector<std::pair<std::int64_t, fs::path>> images;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string stem = entry.path().stem().string();
        if (entry.path().extension() != ".jpg" || stem.rfind("frame_", 0) != 0) continue;
        const std::string digits = stem.substr(6);
        if (digits.empty() || digits.size() > 9 ||
            digits.find_first_not_of("0123456789") != std::string::npos) {
            continue;
        }
        images.emplace_back(std::stoll(digits) * 1000, entry.path());
    }
    std::sort(images.begin(), images.end());
    std::vector<timeline::FrameDescription> frames;
    frames.reserve(images.size());
    for (const auto& [t_ms, path] : images) {
        const std::string text = describer.describe_image(path);
        frames.push_back({t_ms, text, timeline::clean_frame_text(text)});
    }
    return timeline::make_timeline(std::move(frames), dir.string());
}

// --------------------------------------------------------------- prepare

inline StageReport cmd_prepare(const PipelineConfig& cfg, BackendSet& clients) {
    StageReport rep;
    rep.stage = "prepare";
    rep.config_hash = config::config_hash(cfg);
    fs::create_directories(cfg.paths.workdir);

    // Source subtitles: parse, normalize, filter once for all languages.
    timedtext::FilterStats src_stats;
    std::vector<timedtext::SubtitleSegment> source;
    try {
        source = timedtext::filter_segments(
            timedtext::normalize_all(timedtext::parse_srt(read_file(cfg.paths.srt_source)).segments),
            cfg.filter.min_words, cfg.filter.max_words, &src_stats);
    } catch (const Error& e) {
        throw Error(cfg.paths.srt_source.string() + ": " + e.what());
    }
    if (source.empty()) {
        throw EmptyCorpusError(cfg.paths.srt_source.string() + ": no segments survived parsing/filtering");
    }

    // Frame timeline, cleaned; drift is applied only when configured.
    timeline::Timeline tl;
    if (fs::is_directory(cfg.paths.frames)) {
        if (!clients.describe) throw ConfigError("frame directory input needs a describe backend");
        const std::size_t calls_before = clients.describe->calls();
        tl = load_frames_from_images(cfg.paths.frames, *clients.describe);
        rep.backend_calls += clients.describe->calls() - calls_before;
    } else {
        tl = timeline::load_frames(cfg.paths.frames);
    }
    if (cfg.drift) tl = timeline::apply_drift(tl, *cfg.drift, cfg.seed);

    std::vector<Json> frame_rows;
    frame_rows.reserve(tl.frames.size());
    for (const auto& f : tl.frames) {
        frame_rows.push_back(Json{{"t_ms", f.t_ms}, {"text", f.raw_text}, {"clean", f.clean_text}});
    }
    write_artifact(timeline_path(cfg), "timeline", rep.config_hash, frame_rows);

    Json stats = Json::object();
    stats["source_segments"] = src_stats.kept;
    stats["source_dropped"] = src_stats.dropped;
    stats["frames"] = tl.frames.size();

    for (const auto& lang : cfg.languages) {
        std::vector<timedtext::SubtitleSegment> reference;
        try {
            reference = timedtext::filter_segments(
                timedtext::normalize_all(
                    timedtext::parse_srt(read_file(cfg.paths.srt_reference.at(lang))).segments),
                cfg.filter.min_words, cfg.filter.max_words);
        } catch (const Error& e) {
            throw Error(cfg.paths.srt_reference.at(lang).string() + ": " + e.what());
        }
        timedtext::PairStats pair_stats;
        const auto corpus = timedtext::pair_corpora(cfg.movie_id, lang, source, reference, &pair_stats);
        const auto rows = timedtext::corpus_rows(corpus);

        std::vector<Json> row_json;
        std::vector<timedtext::TimeSpan> spans;
        double words = 0.0;
        double chars = 0.0;
        for (const auto& row : rows) {
            row_json.push_back(timedtext::corpus_row_to_json(row));
            spans.push_back(row.span);
            words += static_cast<double>(word_count(row.src));
            chars += static_cast<double>(utf8_length(row.src));
        }
        write_artifact(corpus_path(cfg, lang), "corpus", rep.config_hash, row_json);

        Json lang_stats;
        lang_stats["pairs"] = rows.size();
        lang_stats["avg_words"] = words / static_cast<double>(rows.size());
        lang_stats["avg_chars"] = chars / static_cast<double>(rows.size());
        lang_stats["frames_in_spans"] = timeline::count_frames_in_spans(cfg.fps, spans);
        lang_stats["dropped_source"] = pair_stats.dropped_source;
        lang_stats["dropped_reference"] = pair_stats.dropped_reference;
        lang_stats["paired_by_index"] = pair_stats.paired_by_index;
        stats[lang] = lang_stats;
        rep.segments += rows.size();
    }

    rep.extra = stats;
    write_manifest(cfg, "prepare", rep);
    return rep;
}

// ----------------------------------------------------------- contextualize

inline StageReport cmd_contextualize(const PipelineConfig& cfg, const std::string& method,
                                     BackendSet& clients) {
    if (method != translation::kVariantAttrVc && method != translation::kVariantInterVs) {
        throw ConfigError("method must be attr_vc or inter_vs");
    }
    if (!clients.summarize) throw ConfigError("contextualize needs a summarize backend");

    StageReport rep;
    rep.stage = "contextualize." + method;
    rep.config_hash = config::config_hash(cfg);
    const std::size_t calls_before = clients.summarize->calls();

    const auto tl = detail::load_timeline_artifact(cfg, rep.config_hash);
    for (const auto& lang : cfg.languages) {
        const auto rows = detail::load_corpus_rows(cfg, rep.config_hash, lang);
        const std::string display = config::language_display_name(lang);
        const fs::path path = context_path(cfg, method, lang);

        std::map<int, Json> cached;
        if (const auto lines = try_read_artifact(path, "context", rep.config_hash)) {
            for (const auto& [value, line] : *lines) cached[value.at("idx").get<int>()] = value;
        }

        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!cached.count(rows[i].idx)) missing.push_back(i);
        }

        std::vector<Json> built(missing.size());
        const context::WindowOptions opts{cfg.window_half_ms, cfg.duration_ms};
        auto failures = detail::parallel_for_indexed(
            missing.size(), clients.summarize->profile().max_concurrency, [&](std::size_t mi) {
                const std::size_t i = missing[mi];
                const CorpusRow& row = rows[i];
                Json entry;
                entry["idx"] = row.idx;
                if (method == translation::kVariantAttrVc) {
                    const auto ctx =
                        context::build_attr_context(tl, row.span, display, *clients.summarize, opts);
                    entry["kind"] = "attr";
                    entry["context"] = context::attr_context_to_json(ctx);
                    entry["prompt_chars"] =
                        ctx.no_visual ? 0
                                      : std::min<std::int64_t>(ctx.source_char_count,
                                                               context::kAttrSampleChars);
                } else {
                    const timedtext::TimeSpan* prev = i > 0 ? &rows[i - 1].span : nullptr;
                    const auto ctx = context::build_gap_context(tl, prev, row.span, *clients.summarize);
                    entry["kind"] = "gap";
                    entry["context"] = context::gap_context_to_json(ctx);
                    entry["prompt_chars"] =
                        ctx.frame_count == 0
                            ? 0
                            : std::min<std::int64_t>(ctx.source_char_count, context::kGapBlobChars);
                }
                built[mi] = std::move(entry);
            });

        for (std::size_t mi = 0; mi < missing.size(); ++mi) {
            if (!failures[mi].empty()) {
                rep.failures.push_back(lang + " idx " + std::to_string(rows[missing[mi]].idx) +
                                       ": " + failures[mi]);
            } else if (!built[mi].is_null() && built[mi].contains("idx")) {
                cached[built[mi]["idx"].get<int>()] = built[mi];
            }
        }

        if (!missing.empty()) {
            std::vector<Json> out;
            for (const auto& row : rows) {
                const auto it = cached.find(row.idx);
                if (it != cached.end()) out.push_back(it->second);
            }
            write_artifact(path, "context", rep.config_hash, out);
        }
        rep.segments += rows.size();
    }

    rep.backend_calls = clients.summarize->calls() - calls_before;
    write_manifest(cfg, rep.stage, rep);
    return rep;
}

// -------------------------------------------------------------- translate

inline StageReport cmd_translate(const PipelineConfig& cfg, const std::string& variant,
                                 BackendSet& clients) {
    if (!translation::is_known_variant(variant)) {
        throw ConfigError("variant must be baseline, attr_vc or inter_vs");
    }
    if (!clients.translate) throw ConfigError("translate needs a translate backend");

    StageReport rep;
    rep.stage = "translate." + variant;
    rep.config_hash = config::config_hash(cfg);
    const std::size_t calls_before = clients.translate->calls();

    for (const auto& lang : cfg.languages) {
        const auto rows = detail::load_corpus_rows(cfg, rep.config_hash, lang);
        const std::string display = config::language_display_name(lang);
        const fs::path path = translations_path(cfg, variant, lang);

        std::map<int, context::VisualContext> contexts;
        if (variant != translation::kVariantBaseline) {
            const auto lines = try_read_artifact(context_path(cfg, variant, lang), "context",
                                                 rep.config_hash);
            if (!lines) {
                throw IoError("missing context artifact for " + variant + "/" + lang +
                              "; run contextualize first");
            }
            for (const auto& [value, line] : *lines) {
                const int idx = value.at("idx").get<int>();
                if (value.at("kind").get<std::string>() == "attr") {
                    contexts[idx] = context::attr_context_from_json(value.at("context"));
                } else {
                    contexts[idx] = context::gap_context_from_json(value.at("context"));
                }
            }
        }

        std::map<int, Json> cached;
        if (const auto lines = try_read_artifact(path, "translations", rep.config_hash)) {
            for (const auto& [value, line] : *lines) cached[value.at("idx").get<int>()] = value;
        }

        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!cached.count(rows[i].idx)) missing.push_back(i);
        }

        std::vector<Json> built(missing.size());
        auto failures = detail::parallel_for_indexed(
            missing.size(), clients.translate->profile().max_concurrency, [&](std::size_t mi) {
                const CorpusRow& row = rows[missing[mi]];
                context::VisualContext ctx; // monostate = baseline
                if (variant != translation::kVariantBaseline) {
                    const auto it = contexts.find(row.idx);
                    if (it == contexts.end()) {
                        throw ValidationError("no cached context for idx " + std::to_string(row.idx));
                    }
                    ctx = it->second;
                }
                const auto rendered = context::render_translation_prompt(row.src, ctx, display);
                translation::TranslationRecord rec;
                rec.idx = row.idx;
                rec.variant = variant;
                rec.template_id = rendered.bundle.template_id;
                rec.system_text = rendered.bundle.system_text;
                rec.user_text = rendered.bundle.user_text;
                rec.fallback_baseline = rendered.fallback_baseline;
                rec.hypothesis = clients.translate->complete(rendered.bundle.system_text,
                                                             rendered.bundle.user_text,
                                                             prompts::render_raw(rendered.bundle));
                built[mi] = translation::translation_to_json(rec);
            });

        for (std::size_t mi = 0; mi < missing.size(); ++mi) {
            if (!failures[mi].empty()) {
                rep.failures.push_back(lang + " idx " + std::to_string(rows[missing[mi]].idx) +
                                       ": " + failures[mi]);
            } else if (!built[mi].is_null() && built[mi].contains("idx")) {
                cached[built[mi]["idx"].get<int>()] = built[mi];
            }
        }
        if (!missing.empty()) {
            std::vector<Json> out;
            for (const auto& row : rows) {
                const auto it = cached.find(row.idx);
                if (it != cached.end()) out.push_back(it->second);
            }
            write_artifact(path, "translations", rep.config_hash, out);
        }
        rep.segments += rows.size();
    }

    rep.backend_calls = clients.translate->calls() - calls_before;
    write_manifest(cfg, rep.stage, rep);
    return rep;
}

// --------------------------------------------------------------- evaluate

namespace detail {

inline std::vector<translation::TranslationRecord> load_translations(
    const PipelineConfig& cfg, const std::string& hash, const std::string& variant,
    const std::string& lang) {
    const auto lines = try_read_artifact(translations_path(cfg, variant, lang), "translations", hash);
    if (!lines) {
        throw IoError("missing translations for variant " + variant + "/" + lang +
                      "; run translate first");
    }
    std::vector<translation::TranslationRecord> out;
    for (const auto& [value, line] : *lines) out.push_back(translation::translation_from_json(value));
    return out;
}

struct VariantScores {
    std::map<int, double> by_idx;
};

inline std::map<int, double> require_scores(const std::vector<scoring::SegmentScore>& scores,
                                            std::string_view variant,
                                            const std::vector<int>& expected_idx,
                                            const std::string& origin) {
    auto by_idx = scoring::scores_by_idx(scores, variant);
    std::string missing;
    for (const int idx : expected_idx) {
        if (!by_idx.count(idx)) missing += (missing.empty() ? "" : ", ") + std::to_string(idx);
    }
    if (!missing.empty()) {
        throw ValidationError(origin + ": variant " + std::string(variant) +
                              " is missing scores for idx: " + missing);
    }
    return by_idx;
}

} // namespace detail

inline StageReport cmd_evaluate(const PipelineConfig& cfg) {
    StageReport rep;
    rep.stage = "evaluate";
    rep.config_hash = config::config_hash(cfg);

    std::vector<report::RunResult> results;
    for (const auto& lang : cfg.languages) {
        const auto rows = detail::load_corpus_rows(cfg, rep.config_hash, lang);
        std::vector<int> idx_order;
        std::vector<std::string> refs;
        for (const auto& row : rows) {
            idx_order.push_back(row.idx);
            refs.push_back(row.ref);
        }

        const auto baseline_recs =
            detail::load_translations(cfg, rep.config_hash, std::string(translation::kVariantBaseline), lang);
        std::map<int, const translation::TranslationRecord*> base_by_idx;
        for (const auto& r : baseline_recs) base_by_idx[r.idx] = &r;

        auto hyps_of = [&](const std::map<int, const translation::TranslationRecord*>& by_idx) {
            std::vector<std::string> hyps;
            for (const int idx : idx_order) {
                const auto it = by_idx.find(idx);
                if (it == by_idx.end()) {
                    throw ValidationError(lang + ": missing hypothesis for idx " + std::to_string(idx));
                }
                hyps.push_back(it->second->hypothesis);
            }
            return hyps;
        };
        const auto baseline_hyps = hyps_of(base_by_idx);

        const fs::path score_file = cfg.scores_path(lang);
        if (!fs::exists(score_file)) {
            throw IoError(lang + ": segment score file " + score_file.string() +
                          " not found (required for variant baseline)");
        }
        const auto scores = scoring::ingest_segment_scores(score_file);
        const auto baseline_scores =
            detail::require_scores(scores, translation::kVariantBaseline, idx_order, lang);

        scoring::MetricTriple baseline_triple;
        baseline_triple.bleu = scoring::corpus_bleu(baseline_hyps, refs);
        baseline_triple.chrfpp = scoring::corpus_chrfpp(baseline_hyps, refs);
        {
            std::vector<double> vals;
            for (const int idx : idx_order) vals.push_back(baseline_scores.at(idx));
            baseline_triple.comet = scoring::corpus_score_from_segments(vals);
        }

        std::vector<scoring::SegmentScore> baseline_score_rows;
        for (const auto& s : scores) {
            if (s.variant == translation::kVariantBaseline) baseline_score_rows.push_back(s);
        }

        bool evaluated_any = false;
        for (const std::string_view method : {translation::kVariantAttrVc, translation::kVariantInterVs}) {
            const std::string method_str(method);
            std::vector<translation::TranslationRecord> visual_recs;
            try {
                visual_recs = detail::load_translations(cfg, rep.config_hash, method_str, lang);
            } catch (const IoError&) {
                rep.extra["skipped_" + lang + "_" + method_str] = "no translations";
                continue;
            }
            std::map<int, const translation::TranslationRecord*> visual_by_idx;
            for (const auto& r : visual_recs) visual_by_idx[r.idx] = &r;
            const auto visual_hyps = hyps_of(visual_by_idx);
            const auto visual_scores = detail::require_scores(scores, method, idx_order, lang);

            report::RunResult full;
            full.movie_id = cfg.movie_id;
            full.language = lang;
            full.method = report::method_from_name(method);
            full.condition = std::string(report::kConditionFull);
            full.baseline = baseline_triple;
            full.metrics.bleu = scoring::corpus_bleu(visual_hyps, refs);
            full.metrics.chrfpp = scoring::corpus_chrfpp(visual_hyps, refs);
            {
                std::vector<double> vals;
                for (const int idx : idx_order) vals.push_back(visual_scores.at(idx));
                full.metrics.comet = scoring::corpus_score_from_segments(vals);
            }
            results.push_back(full);

            for (const double k : cfg.selective.k_list) {
                const auto plan = scoring::plan_selective(baseline_score_rows, k, &idx_order);
                const auto merged = scoring::apply_selective(baseline_recs, visual_recs, plan);
                std::map<int, const translation::TranslationRecord*> merged_by_idx;
                for (const auto& r : merged) merged_by_idx[r.idx] = &r;

                report::RunResult sel = full;
                sel.condition = report::selective_condition(k);
                sel.metrics.bleu = scoring::corpus_bleu(hyps_of(merged_by_idx), refs);
                sel.metrics.chrfpp = scoring::corpus_chrfpp(hyps_of(merged_by_idx), refs);
                std::vector<double> vals;
                for (const int idx : idx_order) {
                    vals.push_back(plan.contains(idx) ? visual_scores.at(idx) : baseline_scores.at(idx));
                }
                sel.metrics.comet = scoring::corpus_score_from_segments(vals);
                results.push_back(sel);

                write_file(cfg.paths.workdir / "plans" /
                               ("plan." + method_str + "." + lang + "." + sel.condition + ".json"),
                           scoring::selective_plan_to_json(plan).dump(2) + "\n");
            }
            evaluated_any = true;
        }
        if (!evaluated_any) {
            throw IoError(lang +
                          ": no visual-variant translations found; run translate for attr_vc or "
                          "inter_vs first");
        }
        rep.segments += rows.size();
    }

    Json out;
    out["artifact"] = "results";
    out["config_hash"] = rep.config_hash;
    Json arr = Json::array();
    for (const auto& r : results) arr.push_back(report::run_result_to_json(r));
    out["results"] = arr;
    write_file(results_path(cfg), out.dump(2) + "\n");

    rep.extra["results"] = results.size();
    write_manifest(cfg, "evaluate", rep);
    return rep;
}

// ----------------------------------------------------------------- report

inline StageReport cmd_report(const PipelineConfig& cfg,
                              const std::optional<fs::path>& results_override = std::nullopt,
                              const std::string& gain_condition = "sel30") {
    StageReport rep;
    rep.stage = "report";
    rep.config_hash = config::config_hash(cfg);

    const fs::path src = results_override.value_or(results_path(cfg));
    if (!results_override) {
        // the stage's own artifact must match this config
        const Json doc = Json::parse(read_file(src));
        if (doc.is_object() && doc.contains("config_hash") &&
            doc.at("config_hash").get<std::string>() != rep.config_hash) {
            throw ConfigError(src.string() + ": results were produced by a different config");
        }
    }
    const auto results = report::load_results(src);

    const fs::path dir = report_dir(cfg);
    write_file(dir / "results_table.tsv", report::render_tables(results, "tsv"));
    write_file(dir / "results_table.md", report::render_tables(results, "markdown"));
    write_file(dir / "results_table.json", report::render_tables(results, "json"));

    std::vector<std::string> warnings;
    const auto summaries = report::build_language_summary(results, &warnings);
    write_file(dir / "language_summary.tsv", report::language_summary_tsv(summaries));

    const auto matrix = report::build_gain_matrix(results, gain_condition);
    write_file(dir / "gain_matrix.csv", report::gain_matrix_csv(matrix));

    rep.segments = results.size();
    rep.extra["warnings"] = warnings;
    rep.extra["summaries"] = summaries.size();
    write_manifest(cfg, "report", rep);
    return rep;
}

// ------------------------------------------------------------------ drift

inline StageReport cmd_drift(const PipelineConfig& cfg, const timeline::DriftModel& model,
                             const fs::path& out_path) {
    StageReport rep;
    rep.stage = "drift";
    rep.config_hash = config::config_hash(cfg);

    timeline::Timeline tl = timeline::load_frames(cfg.paths.frames);
    const timeline::Timeline drifted = timeline::apply_drift(tl, model, cfg.seed);
    write_file(out_path, timeline::dump_frames(drifted));

    rep.segments = drifted.frames.size();
    rep.extra["offset_ms"] = model.offset_ms;
    rep.extra["rate_s_per_hour"] = model.rate_s_per_hour;
    rep.extra["jitter_ms"] = model.jitter_ms;
    rep.extra["out"] = out_path.string();
    write_manifest(cfg, "drift", rep);
    return rep;
}

} // namespace subgrain::pipeline
