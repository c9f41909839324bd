#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "subgrain/errors.hpp"

namespace subgrain::prompts {

enum class TemplateId { attr_summarize, gap_summarize, baseline_translate, visual_translate };

inline std::string_view template_name(TemplateId id) {
    switch (id) {
        case TemplateId::attr_summarize: return "attr_summarize";
        case TemplateId::gap_summarize: return "gap_summarize";
        case TemplateId::baseline_translate: return "baseline_translate";
        case TemplateId::visual_translate: return "visual_translate";
    }
    return "?";
}

inline TemplateId template_from_name(std::string_view name) {
    if (name == "attr_summarize") return TemplateId::attr_summarize;
    if (name == "gap_summarize") return TemplateId::gap_summarize;
    if (name == "baseline_translate") return TemplateId::baseline_translate;
    if (name == "visual_translate") return TemplateId::visual_translate;
    throw Error("unknown template id \"" + std::string(name) + "\"");
}

/// System and user message texts for one request. Rendering is
/// byte-deterministic: fixed placeholder values always produce identical
/// bytes. render_raw() reassembles the full chat-control-token form for
/// servers that take pre-formatted strings.
struct PromptBundle {
    std::string system_text;
    std::string user_text;
    TemplateId template_id = TemplateId::baseline_translate;
};

// The template texts below are load-bearing: translation and summarization
// behavior is steered entirely through them, so any byte change is a
// behavior change. Golden-file tests pin them.

inline PromptBundle make_baseline_translate_prompt(std::string_view target_language,
                                                   std::string_view source_text) {
    const std::string lang(target_language);
    PromptBundle p;
    p.template_id = TemplateId::baseline_translate;
    p.system_text =
        "You are a translation expert. Translate dialogue from English to " + lang + ".\n"
        "RULES:\n"
        "- Provide ONLY the translated " + lang + " dialogue.\n"
        "- DO NOT include explanations, or English text.";
    p.user_text =
        "[SOURCE]: \"" + std::string(source_text) + "\"\n"
        "[TASK]: Translate to " + lang + " dialogue.";
    return p;
}

inline PromptBundle make_visual_translate_prompt(std::string_view target_language,
                                                 std::string_view visual_context,
                                                 std::string_view source_text) {
    const std::string lang(target_language);
    PromptBundle p;
    p.template_id = TemplateId::visual_translate;
    p.system_text =
        "You are a cinematic multimodal translator specializing in English-to-" + lang + ".\n"
        "Your goal is to provide a \"grounded translation\" where the choice of words depends on the visual scene.\n"
        "\n"
        "RULES:\n"
        "1. GENDER: Use the Visual Context to identify speaker/listener gender.\n"
        "2. HONORIFICS: Determine social hierarchy from the scene (Formal vs. Informal).\n"
        "3. LOOSE MEANING: Prioritize emotional intent and natural " + lang + " flow.\n"
        "4. Output ONLY the translated " + lang + " dialogue text. No names, no English.";
    p.user_text =
        "[VISUAL CONTEXT]: " + std::string(visual_context) + "\n"
        "[ENGLISH SOURCE]: \"" + std::string(source_text) + "\"\n"
        "[TASK]: Based on the visual scene, provide the most natural " + lang + " translation.";
    return p;
}

/// `sample` must already be truncated to the attribute character budget.
inline PromptBundle make_attr_summarize_prompt(std::string_view target_language,
                                               std::string_view sample) {
    PromptBundle p;
    p.template_id = TemplateId::attr_summarize;
    p.system_text =
        "Identify these cinematic attributes to guide " + std::string(target_language) + " translation:\n"
        "[SETTING]: (e.g., Formal, Public, Intimate)\n"
        "[GENDER]: (Speaker/Listener gender)\n"
        "[RELATION]: (e.g., Stranger, Family, Hostile)\n"
        "[HONORIFIC]: (language‑specific, e.g., APNI/TUMI for Bengali)\n"
        "[SUMMARY]: (One sentence factual summary with emotional intent)\n"
        "Output ONLY these tags.";
    p.user_text = "Visual Data: " + std::string(sample);
    return p;
}

/// `text_blob` must already be truncated to the gap character budget.
inline PromptBundle make_gap_summarize_prompt(std::int64_t start_sec, std::int64_t end_sec,
                                              std::string_view text_blob) {
    PromptBundle p;
    p.template_id = TemplateId::gap_summarize;
    p.system_text =
        "You are a movie analyzer. Summarize the following visual descriptions\n"
        "from " + std::to_string(start_sec) + "s to " + std::to_string(end_sec) +
        "s of the movie into 2-3 sentences.\n"
        "Focus ONLY on the current location and character actions.\n"
        "Do not use introductory filler.";
    p.user_text = "Visual Data: " + std::string(text_blob);
    return p;
}

/// Pre-formatted single-string form, chat control tokens included. The glue
/// differs per template family (and between the two summarizers), so each
/// case spells out its exact layout.
inline std::string render_raw(const PromptBundle& p) {
    switch (p.template_id) {
        case TemplateId::baseline_translate:
        case TemplateId::visual_translate:
            return "<|im_start|>system\n" + p.system_text + "\n<|im_end|>\n" +
                   "<|im_start|>user\n" + p.user_text + "\n<|im_end|>\n" +
                   "<|im_start|>assistant\n";
        case TemplateId::attr_summarize:
            return "<|begin_of_text|><|start_header_id|>system<|end_header_id|>\n" +
                   p.system_text + "<|eot_id|><|start_header_id|>user<|end_header_id|>\n" +
                   p.user_text + "<|eot_id|>\n<|start_header_id|>assistant<|end_header_id|>\n";
        case TemplateId::gap_summarize:
            return "<|begin_of_text|><|start_header_id|>system<|end_header_id|>\n" +
                   p.system_text + "\n<|eot_id|><|start_header_id|>user<|end_header_id|>\n" +
                   p.user_text + "\n<|eot_id|><|start_header_id|>assistant<|end_header_id|>\n";
    }
    return {};
}

} // namespace subgrain::prompts
