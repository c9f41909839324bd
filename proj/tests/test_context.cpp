#include <catch_amalgamated.hpp>

#include "subgrain/context.hpp"

#include "helpers.hpp"

using namespace subgrain;
using namespace subgrain::context;
using backends::BackendClient;
using backends::BackendProfile;
using backends::MockBackend;
using backends::MockRule;
using backends::Role;

namespace {

constexpr const char* kAttrReply =
    "[SETTING]: Intimate\n[GENDER]: Male speaker, female listener\n[RELATION]: Family\n"
    "[HONORIFIC]: Informal TUMI\n[SUMMARY]: Two old friends reunite in a dim corridor with warm relief.";

BackendClient scripted_summarizer(std::vector<MockRule> rules) {
    BackendProfile p;
    p.role = Role::summarize;
    p.endpoint = "unused";
    p.params = backends::summarizer_decoding_defaults();
    return BackendClient(p, std::make_unique<MockBackend>(Role::summarize, MockBackend::Mode::scripted,
                                                          0, std::move(rules)));
}

MockBackend& mock_of(BackendClient& client) { return dynamic_cast<MockBackend&>(client.transport()); }

timeline::Timeline repeated_text_timeline(int frames, const std::string& text) {
    std::vector<timeline::FrameDescription> fs;
    for (int t = 0; t < frames; ++t) fs.push_back({t * 1000LL, text, text});
    return timeline::Timeline{std::move(fs)};
}

} // namespace

TEST_CASE("empty window skips the backend and flags no_visual") {
    auto summarizer = scripted_summarizer({});
    const timeline::Timeline tl; // no frames at all
    const auto ctx = build_attr_context(tl, {5000, 6000}, "Hindi", summarizer, {150000, 600000});
    CHECK(ctx.no_visual);
    CHECK(attr_context_empty(ctx));
    CHECK(mock_of(summarizer).call_count() == 0);
}

TEST_CASE("attr aggregation truncates to exactly 3000 characters, mid-word") {
    auto summarizer = scripted_summarizer({{"[SETTING]", kAttrReply, 0}});
    const auto tl = repeated_text_timeline(40, std::string(170, 'x')); // aggregate 40*170+39 chars
    const auto ctx = build_attr_context(tl, {0, 1000}, "Hindi", summarizer, {150000, 600000});
    CHECK(ctx.source_char_count == 40 * 170 + 39);
    const auto prompts = mock_of(summarizer).prompts();
    REQUIRE(prompts.size() == 1);
    const auto pos = prompts[0].find("Visual Data: ");
    REQUIRE(pos != std::string::npos);
    const auto end = prompts[0].find("<|eot_id|>", pos);
    const std::string payload = prompts[0].substr(pos + 13, end - pos - 13);
    CHECK(utf8_length(payload) == 3000);
}

TEST_CASE("attr truncation counts scalar values and never splits a codepoint") {
    auto summarizer = scripted_summarizer({{"[SETTING]", kAttrReply, 0}});
    std::string devanagari;
    for (int i = 0; i < 40; ++i) encode_utf8(0x0905 + (i % 8), devanagari); // 3 bytes each
    const auto tl = repeated_text_timeline(100, devanagari);
    const auto ctx = build_attr_context(tl, {0, 1000}, "Hindi", summarizer, {150000, 600000});
    CHECK(ctx.source_char_count == 100 * 40 + 99);
    const auto prompts = mock_of(summarizer).prompts();
    const auto pos = prompts[0].find("Visual Data: ");
    const auto end = prompts[0].find("<|eot_id|>", pos);
    const std::string payload = prompts[0].substr(pos + 13, end - pos - 13);
    CHECK(utf8_length(payload) == 3000);
    CHECK(decode_utf8(payload, payload.size() - 3).valid); // boundary is a clean codepoint
}

TEST_CASE("scripted tags are parsed into the attribute fields") {
    auto summarizer = scripted_summarizer({{"[SETTING]", kAttrReply, 0}});
    const auto tl = repeated_text_timeline(3, "a quiet corridor");
    const auto ctx = build_attr_context(tl, {0, 500}, "Bengali", summarizer, {150000, 600000});
    CHECK(ctx.setting == "Intimate");
    CHECK(ctx.gender == "Male speaker, female listener");
    CHECK(ctx.relation == "Family");
    CHECK(ctx.honorific == "Informal TUMI");
    CHECK(ctx.summary == "Two old friends reunite in a dim corridor with warm relief.");
    CHECK_FALSE(ctx.parse_warning);
    CHECK(serialize_attr_context(ctx) == kAttrReply);
}

TEST_CASE("unparseable summarizer output degrades to empty fields with a warning") {
    auto summarizer = scripted_summarizer({{"corridor", "no tags here at all", 0}});
    const auto tl = repeated_text_timeline(3, "a quiet corridor");
    const auto ctx = build_attr_context(tl, {0, 500}, "Hindi", summarizer, {150000, 600000});
    CHECK(ctx.parse_warning);
    CHECK(attr_context_empty(ctx));
}

TEST_CASE("degenerate gaps produce empty contexts without backend calls") {
    auto summarizer = scripted_summarizer({});
    const auto tl = repeated_text_timeline(20, "busy deck");
    const timedtext::TimeSpan prev{4000, 6000};
    const timedtext::TimeSpan cur{5000, 7000}; // overlaps: prev_end > cur_start
    const auto ctx = build_gap_context(tl, &prev, cur, summarizer);
    CHECK(ctx.gap.degenerate());
    CHECK(ctx.frame_count == 0);
    CHECK(ctx.text.empty());
    CHECK(mock_of(summarizer).call_count() == 0);
}

TEST_CASE("gap context stores the scripted sentence and frame count") {
    auto summarizer = scripted_summarizer({{"movie analyzer", "A fixed sentence.", 0}});
    const auto tl = repeated_text_timeline(20, "busy deck");
    const timedtext::TimeSpan prev{1000, 2000};
    const timedtext::TimeSpan cur{5000, 7000};
    const auto ctx = build_gap_context(tl, &prev, cur, summarizer);
    CHECK(ctx.frame_count == 3); // t = 2000, 3000, 4000
    CHECK(ctx.text == "A fixed sentence.");
}

TEST_CASE("gap blob truncates to exactly 2500 characters") {
    auto summarizer = scripted_summarizer({{"movie analyzer", "ok", 0}});
    const auto tl = repeated_text_timeline(30, std::string(200, 'y'));
    const timedtext::TimeSpan cur{20000, 21000}; // gap [0, 20000): 20 frames, 4019 chars
    const auto ctx = build_gap_context(tl, nullptr, cur, summarizer);
    CHECK(ctx.source_char_count == 20 * 200 + 19);
    const auto prompts = mock_of(summarizer).prompts();
    REQUIRE(prompts.size() == 1);
    const auto pos = prompts[0].find("Visual Data: ");
    const auto end = prompts[0].find("\n<|eot_id|>", pos);
    CHECK(utf8_length(prompts[0].substr(pos + 13, end - pos - 13)) == 2500);
}

TEST_CASE("gap prompt renders floor seconds of the gap bounds") {
    auto summarizer = scripted_summarizer({{"movie analyzer", "ok", 0}});
    const auto tl = repeated_text_timeline(30, "deck");
    const timedtext::TimeSpan prev{1000, 2700};
    const timedtext::TimeSpan cur{9400, 9900};
    (void)build_gap_context(tl, &prev, cur, summarizer);
    const auto prompts = mock_of(summarizer).prompts();
    REQUIRE(prompts.size() == 1);
    CHECK(prompts[0].find("from 2s to 9s of the movie") != std::string::npos);
}

TEST_CASE("translation prompt falls back to baseline for empty contexts") {
    AttrContext empty;
    empty.no_visual = true;
    const auto rendered = render_translation_prompt("Hello.", VisualContext{empty}, "Hindi");
    CHECK(rendered.fallback_baseline);
    CHECK(rendered.bundle.template_id == prompts::TemplateId::baseline_translate);

    GapContext gap;
    const auto rendered2 = render_translation_prompt("Hello.", VisualContext{gap}, "Hindi");
    CHECK(rendered2.fallback_baseline);

    const auto rendered3 = render_translation_prompt("Hello.", VisualContext{}, "Hindi");
    CHECK_FALSE(rendered3.fallback_baseline);
    CHECK(rendered3.bundle.template_id == prompts::TemplateId::baseline_translate);
}

TEST_CASE("baseline prompt carries the documented user block") {
    const auto rendered = render_translation_prompt("Hello.", VisualContext{}, "Hindi");
    CHECK(rendered.bundle.user_text.find("[SOURCE]: \"Hello.\"") != std::string::npos);
    CHECK(rendered.bundle.user_text.find("[TASK]: Translate to Hindi dialogue.") != std::string::npos);
}

TEST_CASE("visual prompt opens with the visual context block") {
    AttrContext ctx;
    ctx.setting = "Formal";
    const auto rendered = render_translation_prompt("Hello.", VisualContext{ctx}, "Hindi");
    CHECK_FALSE(rendered.fallback_baseline);
    CHECK(rendered.bundle.user_text.rfind("[VISUAL CONTEXT]: [SETTING]: Formal", 0) == 0);
    CHECK(rendered.bundle.user_text.find("[ENGLISH SOURCE]: \"Hello.\"") != std::string::npos);
}

TEST_CASE("prompt rendering is byte deterministic") {
    AttrContext ctx;
    ctx.setting = "Formal";
    ctx.summary = "Two men argue.";
    const auto a = render_translation_prompt("Go now.", VisualContext{ctx}, "Telugu");
    const auto b = render_translation_prompt("Go now.", VisualContext{ctx}, "Telugu");
    CHECK(prompts::render_raw(a.bundle) == prompts::render_raw(b.bundle));
}

TEST_CASE("attr prompt ignores frames outside the clamped window") {
    auto summarizer = scripted_summarizer({{"[SETTING]", kAttrReply, 0}});
    auto tl = repeated_text_timeline(40, "steady shot of the bridge");
    const timedtext::TimeSpan segment{12000, 13000};
    const WindowOptions opts{5000, 39000}; // window [7000, 17000]
    (void)build_attr_context(tl, segment, "Hindi", summarizer, opts);
    const auto before = mock_of(summarizer).prompts().back();

    // perturb every frame outside the window, drop one far away entirely
    for (auto& f : tl.frames) {
        if (f.t_ms < 7000 || f.t_ms > 17000) f.clean_text = "PERTURBED " + f.clean_text;
    }
    tl.frames.pop_back();
    (void)build_attr_context(tl, segment, "Hindi", summarizer, opts);
    const auto after = mock_of(summarizer).prompts().back();
    CHECK(before == after);
}

TEST_CASE("context cache records round trip") {
    AttrContext attr;
    attr.setting = "Public";
    attr.window = {0, 300000};
    attr.source_char_count = 4242;
    const auto attr2 = attr_context_from_json(attr_context_to_json(attr));
    CHECK(attr2.setting == attr.setting);
    CHECK(attr2.window.end_ms == 300000);
    CHECK(attr2.source_char_count == 4242);

    GapContext gap;
    gap.text = "waves crash";
    gap.gap = {1000, 5000};
    gap.frame_count = 4;
    gap.source_char_count = 77;
    const auto gap2 = gap_context_from_json(gap_context_to_json(gap));
    CHECK(gap2.text == gap.text);
    CHECK(gap2.gap.prev_end_ms == 1000);
    CHECK(gap2.frame_count == 4);
    CHECK(gap2.source_char_count == 77);
}
