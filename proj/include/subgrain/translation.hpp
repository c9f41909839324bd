#pragma once

#include <string>

#include "subgrain/jsonl.hpp"
#include "subgrain/prompts.hpp"

namespace subgrain::translation {

inline constexpr std::string_view kVariantBaseline = "baseline";
inline constexpr std::string_view kVariantAttrVc = "attr_vc";
inline constexpr std::string_view kVariantInterVs = "inter_vs";

inline bool is_known_variant(std::string_view v) {
    return v == kVariantBaseline || v == kVariantAttrVc || v == kVariantInterVs;
}

/// One hypothesis for one segment under one variant, with the exact prompt
/// that produced it.
struct TranslationRecord {
    int idx = 0;
    std::string variant;
    std::string hypothesis;
    prompts::TemplateId template_id = prompts::TemplateId::baseline_translate;
    std::string system_text;
    std::string user_text;
    bool fallback_baseline = false;

    bool operator==(const TranslationRecord&) const = default;
};

inline Json translation_to_json(const TranslationRecord& r) {
    return Json{{"idx", r.idx},
                {"variant", r.variant},
                {"hypothesis", r.hypothesis},
                {"template_id", std::string(prompts::template_name(r.template_id))},
                {"system_text", r.system_text},
                {"user_text", r.user_text},
                {"fallback_baseline", r.fallback_baseline}};
}

inline TranslationRecord translation_from_json(const Json& j) {
    TranslationRecord r;
    r.idx = j.at("idx").get<int>();
    r.variant = j.at("variant").get<std::string>();
    r.hypothesis = j.at("hypothesis").get<std::string>();
    r.template_id = prompts::template_from_name(j.at("template_id").get<std::string>());
    r.system_text = j.at("system_text").get<std::string>();
    r.user_text = j.at("user_text").get<std::string>();
    r.fallback_baseline = j.at("fallback_baseline").get<bool>();
    return r;
}

} // namespace subgrain::translation
