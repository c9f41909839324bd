#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subgrain/backends.hpp"
#include "subgrain/errors.hpp"
#include "subgrain/jsonl.hpp"
#include "subgrain/timeline.hpp"
#include "subgrain/util.hpp"

namespace subgrain::config {

namespace fs = std::filesystem;
using backends::BackendProfile;
using backends::Role;

struct FilterConfig {
    int min_words = 1;
    int max_words = 40;
};

struct SelectiveConfig {
    std::vector<double> k_list = {20.0, 30.0};
};

struct PathsConfig {
    fs::path srt_source;
    std::map<std::string, fs::path> srt_reference; // language -> reference SRT
    fs::path frames;                               // JSONL file or frame image directory
    fs::path workdir;
    std::map<std::string, fs::path> scores;        // optional; default workdir/scores.<lang>.jsonl
};

struct PipelineConfig {
    std::string movie_id;
    std::int64_t duration_ms = 0;
    std::vector<std::string> languages;
    PathsConfig paths;
    std::int64_t window_half_ms = context_default_window_half();
    double fps = 1.0;
    FilterConfig filter;
    std::map<Role, BackendProfile> backends;
    SelectiveConfig selective;
    std::optional<timeline::DriftModel> drift;
    std::uint64_t seed = 0;

    static constexpr std::int64_t context_default_window_half() { return 150000; }

    fs::path scores_path(const std::string& language) const {
        const auto it = paths.scores.find(language);
        if (it != paths.scores.end()) return it->second;
        return paths.workdir / ("scores." + language + ".jsonl");
    }
};

/// Flag-level overrides; each maps one-to-one onto a config key.
struct Overrides {
    std::optional<std::int64_t> window_half_ms;
    std::optional<std::vector<double>> k_list;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> workdir;
};

// -------------------------------------------------------------- parsing

namespace detail {

inline BackendProfile parse_backend(const Json& j, Role role) {
    BackendProfile p;
    p.role = role;
    p.params = backends::default_decoding(role);
    p.endpoint = j.at("endpoint").get<std::string>();
    p.model_name = j.value("model", std::string{});
    if (j.contains("max_new_tokens")) p.params.max_new_tokens = j.at("max_new_tokens").get<int>();
    if (j.contains("greedy")) p.params.greedy = j.at("greedy").get<bool>();
    if (j.contains("repetition_penalty")) p.params.repetition_penalty = j.at("repetition_penalty").get<double>();
    if (j.contains("temperature")) p.params.temperature = j.at("temperature").get<double>();
    if (j.contains("top_p")) p.params.top_p = j.at("top_p").get<double>();
    if (j.contains("max_concurrency")) p.max_concurrency = j.at("max_concurrency").get<int>();
    if (j.contains("timeout_ms")) p.timeout_ms = j.at("timeout_ms").get<int>();
    if (j.contains("retry")) {
        p.retry.attempts = j.at("retry").value("attempts", p.retry.attempts);
        p.retry.backoff_ms = j.at("retry").value("backoff_ms", p.retry.backoff_ms);
    }
    if (j.contains("raw_template")) p.raw_template = j.at("raw_template").get<bool>();
    if (j.contains("api_key")) p.api_key = j.at("api_key").get<std::string>();
    if (p.max_concurrency < 1) throw ConfigError("max_concurrency must be positive");
    if (p.params.max_new_tokens < 1) throw ConfigError("max_new_tokens must be positive");
    return p;
}

inline Json backend_to_json(const BackendProfile& p) {
    Json j;
    j["endpoint"] = p.endpoint;
    j["model"] = p.model_name;
    j["max_new_tokens"] = p.params.max_new_tokens;
    j["greedy"] = p.params.greedy;
    j["repetition_penalty"] = p.params.repetition_penalty;
    j["temperature"] = p.params.temperature;
    j["top_p"] = p.params.top_p;
    j["max_concurrency"] = p.max_concurrency;
    j["timeout_ms"] = p.timeout_ms;
    j["retry"] = Json{{"attempts", p.retry.attempts}, {"backoff_ms", p.retry.backoff_ms}};
    j["raw_template"] = p.raw_template;
    return j;
}

inline fs::path resolve(const fs::path& base, const fs::path& p) {
    return p.is_absolute() ? p : base / p;
}

} // namespace detail

/// Load a pipeline config. Relative paths resolve against the config file's
/// directory. Backend decoding parameters default per role (translator:
/// 100 greedy tokens with repetition penalty 1.1; summarizer/describer:
/// 256 greedy tokens).
inline PipelineConfig load_config(const fs::path& path) {
    Json doc = Json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded()) throw ConfigError(path.string() + ": invalid JSON");
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

    PipelineConfig cfg;
    try {
        cfg.movie_id = doc.at("movie_id").get<std::string>();
        cfg.duration_ms = doc.at("duration_ms").get<std::int64_t>();
        cfg.languages = doc.at("languages").get<std::vector<std::string>>();
        if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
        const Json& paths = doc.at("paths");
        cfg.paths.srt_source = detail::resolve(base, paths.at("srt_source").get<std::string>());
        for (const auto& [lang, p] : paths.at("srt_reference").items()) {
            cfg.paths.srt_reference[lang] = detail::resolve(base, p.get<std::string>());
        }
        cfg.paths.frames = detail::resolve(base, paths.at("frames").get<std::string>());
        cfg.paths.workdir = detail::resolve(base, paths.at("workdir").get<std::string>());
        if (paths.contains("scores")) {
            for (const auto& [lang, p] : paths.at("scores").items()) {
                cfg.paths.scores[lang] = detail::resolve(base, p.get<std::string>());
            }
        }
        if (doc.contains("window_half_ms")) cfg.window_half_ms = doc.at("window_half_ms").get<std::int64_t>();
        if (doc.contains("fps")) cfg.fps = doc.at("fps").get<double>();
        if (doc.contains("filter")) {
            cfg.filter.min_words = doc.at("filter").value("min_words", cfg.filter.min_words);
            cfg.filter.max_words = doc.at("filter").value("max_words", cfg.filter.max_words);
        }
        const Json& b = doc.at("backends");
        for (const Role role : {Role::describe, Role::summarize, Role::translate}) {
            const std::string key{backends::role_name(role)};
            if (!b.contains(key)) continue;
            BackendProfile p = detail::parse_backend(b.at(key), role);
            if (p.endpoint.rfind("mock:script:", 0) == 0) {
                p.endpoint = "mock:script:" + detail::resolve(base, p.endpoint.substr(12)).string();
            }
            p.mock_seed = cfg.seed;
            cfg.backends[role] = p;
        }
        if (doc.contains("selective")) {
            cfg.selective.k_list = doc.at("selective").value("k_list", cfg.selective.k_list);
        }
        if (doc.contains("drift")) {
            timeline::DriftModel d;
            d.offset_ms = doc.at("drift").value("offset_ms", 0LL);
            d.rate_s_per_hour = doc.at("drift").value("rate_s_per_hour", 0.0);
            d.jitter_ms = doc.at("drift").value("jitter_ms", 0LL);
            cfg.drift = d;
        }
    } catch (const Json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }

    for (const auto& k : cfg.selective.k_list) {
        if (!(k > 0.0 && k <= 100.0)) throw ConfigError("selective k values must lie in (0, 100]");
    }
    if (cfg.duration_ms < 0) throw ConfigError("duration_ms must be non-negative");
    if (cfg.window_half_ms <= 0) throw ConfigError("window_half_ms must be positive");
    if (cfg.fps <= 0.0) throw ConfigError("fps must be positive");
    if (cfg.languages.empty()) throw ConfigError("languages must not be empty");
    for (const auto& lang : cfg.languages) {
        if (!cfg.paths.srt_reference.count(lang)) {
            throw ConfigError("no reference SRT configured for language " + lang);
        }
    }
    return cfg;
}

inline void apply_overrides(PipelineConfig& cfg, const Overrides& o) {
    if (o.window_half_ms) cfg.window_half_ms = *o.window_half_ms;
    if (o.k_list) cfg.selective.k_list = *o.k_list;
    if (o.seed) cfg.seed = *o.seed;
    if (o.workdir) cfg.paths.workdir = *o.workdir;
    if (cfg.window_half_ms <= 0) throw ConfigError("window_half_ms must be positive");
    for (const auto& k : cfg.selective.k_list) {
        if (!(k > 0.0 && k <= 100.0)) throw ConfigError("selective k values must lie in (0, 100]");
    }
}

/// Stable stamp of the effective experiment configuration. The workdir is
/// deliberately left out so artifacts stay valid when a work tree moves;
/// every scientific knob participates.
inline std::string config_hash(const PipelineConfig& cfg) {
    nlohmann::json j; // alphabetically sorted keys -> canonical dump
    j["movie_id"] = cfg.movie_id;
    j["duration_ms"] = cfg.duration_ms;
    j["languages"] = cfg.languages;
    j["srt_source"] = cfg.paths.srt_source.string();
    nlohmann::json refs;
    for (const auto& [lang, p] : cfg.paths.srt_reference) refs[lang] = p.string();
    j["srt_reference"] = refs;
    j["frames"] = cfg.paths.frames.string();
    j["window_half_ms"] = cfg.window_half_ms;
    j["fps"] = cfg.fps;
    j["filter_min_words"] = cfg.filter.min_words;
    j["filter_max_words"] = cfg.filter.max_words;
    nlohmann::json bk;
    for (const auto& [role, profile] : cfg.backends) {
        bk[std::string(backends::role_name(role))] = nlohmann::json::parse(detail::backend_to_json(profile).dump());
    }
    j["backends"] = bk;
    j["k_list"] = cfg.selective.k_list;
    if (cfg.drift) {
        j["drift"] = {{"offset_ms", cfg.drift->offset_ms},
                      {"rate_s_per_hour", cfg.drift->rate_s_per_hour},
                      {"jitter_ms", cfg.drift->jitter_ms}};
    }
    j["seed"] = cfg.seed;
    return to_hex(fnv1a64(j.dump()));
}

/// Display names for the translation prompts; unknown codes pass through.
inline std::string language_display_name(const std::string& code) {
    if (code == "hin") return "Hindi";
    if (code == "ben") return "Bengali";
    if (code == "tel") return "Telugu";
    if (code == "tam") return "Tamil";
    if (code == "kan") return "Kannada";
    return code;
}

} // namespace subgrain::config
