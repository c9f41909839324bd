#include <catch_amalgamated.hpp>

#include "subgrain/pipeline.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace subgrain;
using namespace subgrain::pipeline;
using config::PipelineConfig;

namespace {

PipelineConfig fixture_config(const std::filesystem::path& workdir) {
    PipelineConfig cfg = config::load_config(testutil::fixture_dir() / "movie" / "config.json");
    cfg.paths.workdir = workdir;
    return cfg;
}

std::size_t mock_calls(BackendSet& clients, backends::Role role) {
    auto& client = role == backends::Role::summarize ? clients.summarize : clients.translate;
    return dynamic_cast<backends::MockBackend&>(client->transport()).call_count();
}

} // namespace

TEST_CASE("prepare writes artifacts whose stats match an independent recount") {
    const auto work = testutil::fresh_temp_dir("prep");
    PipelineConfig cfg = fixture_config(work);
    auto clients = make_backends(cfg);
    const auto rep = cmd_prepare(cfg, clients);
    REQUIRE(rep.ok());
    CHECK(rep.extra.at("hin").at("pairs") == 10);
    CHECK(rep.extra.at("ben").at("pairs") == 10);

    // independent recount straight off the artifact rows
    const auto hash = config::config_hash(cfg);
    const auto lines = read_artifact(corpus_path(cfg, "hin"), "corpus", hash);
    REQUIRE(lines.size() == 10);
    double words = 0, chars = 0;
    std::vector<timedtext::TimeSpan> spans;
    for (const auto& [value, line] : lines) {
        const std::string src = value.at("src").get<std::string>();
        words += static_cast<double>(oracle::split_tokens(src).size());
        for (const char c : src) {
            if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++chars;
        }
        spans.push_back({value.at("start_ms").get<std::int64_t>(),
                         value.at("end_ms").get<std::int64_t>()});
    }
    CHECK(rep.extra.at("hin").at("avg_words").get<double>() == Catch::Approx(words / 10.0));
    CHECK(rep.extra.at("hin").at("avg_chars").get<double>() == Catch::Approx(chars / 10.0));
    CHECK(rep.extra.at("hin").at("frames_in_spans").get<long long>() ==
          oracle::naive_frames_in_spans(cfg.fps, spans));
    CHECK(std::filesystem::exists(timeline_path(cfg)));
}

TEST_CASE("prepare aborts on an empty subtitle file") {
    const auto work = testutil::fresh_temp_dir("prepempty");
    PipelineConfig cfg = fixture_config(work);
    const auto empty_srt = work / "empty.srt";
    write_file(empty_srt, "\n");
    cfg.paths.srt_source = empty_srt;
    auto clients = make_backends(cfg);
    CHECK_THROWS_AS(cmd_prepare(cfg, clients), EmptyCorpusError);
}

TEST_CASE("contextualize builds one context per segment and resumes from cache") {
    const auto work = testutil::fresh_temp_dir("ctx");
    PipelineConfig cfg = fixture_config(work);
    auto clients = make_backends(cfg);
    REQUIRE(cmd_prepare(cfg, clients).ok());

    const auto rep1 = cmd_contextualize(cfg, "inter_vs", clients);
    REQUIRE(rep1.ok());
    CHECK(rep1.segments == 20); // two languages x ten segments
    const auto calls_after_first = mock_calls(clients, backends::Role::summarize);
    CHECK(calls_after_first > 0);

    const auto bytes_before = read_file(context_path(cfg, "inter_vs", "ben"));
    const auto rep2 = cmd_contextualize(cfg, "inter_vs", clients);
    REQUIRE(rep2.ok());
    CHECK(rep2.backend_calls == 0); // cache hit: no new summarizer traffic
    CHECK(mock_calls(clients, backends::Role::summarize) == calls_after_first);
    CHECK(read_file(context_path(cfg, "inter_vs", "ben")) == bytes_before);

    // degenerate gap (cue 4 starts exactly where cue 3 ends): cached empty
    const auto lines = read_artifact(context_path(cfg, "inter_vs", "ben"), "context",
                                     config::config_hash(cfg));
    REQUIRE(lines.size() == 10);
    const auto& cue4 = lines[3].value;
    CHECK(cue4.at("idx") == 4);
    CHECK(cue4.at("context").at("gap").at("degenerate") == true);
    CHECK(cue4.at("context").at("frame_count") == 0);
    CHECK(cue4.at("prompt_chars") == 0);
}

TEST_CASE("contextualize requires the prepare artifacts") {
    const auto work = testutil::fresh_temp_dir("ctxmissing");
    PipelineConfig cfg = fixture_config(work);
    auto clients = make_backends(cfg);
    CHECK_THROWS_AS(cmd_contextualize(cfg, "attr_vc", clients), IoError);
}

TEST_CASE("translate renders prompts, flags fallbacks and is deterministic") {
    const auto work = testutil::fresh_temp_dir("trans");
    PipelineConfig cfg = fixture_config(work);
    auto clients = make_backends(cfg);
    REQUIRE(cmd_prepare(cfg, clients).ok());
    REQUIRE(cmd_contextualize(cfg, "inter_vs", clients).ok());

    REQUIRE(cmd_translate(cfg, "baseline", clients).ok());
    REQUIRE(cmd_translate(cfg, "inter_vs", clients).ok());

    const auto hash = config::config_hash(cfg);
    const auto base_lines = read_artifact(translations_path(cfg, "baseline", "ben"), "translations", hash);
    REQUIRE(base_lines.size() == 10);
    for (const auto& [value, line] : base_lines) {
        CHECK(value.at("template_id") == "baseline_translate");
        // mock hypothesis is a pure function of the prompt
        CHECK(value.at("hypothesis").get<std::string>().rfind("mock:translate:", 0) == 0);
    }

    const auto vis_lines = read_artifact(translations_path(cfg, "inter_vs", "ben"), "translations", hash);
    bool saw_fallback = false;
    for (const auto& [value, line] : vis_lines) {
        if (value.at("idx") == 4) {
            CHECK(value.at("fallback_baseline") == true); // degenerate gap
            CHECK(value.at("template_id") == "baseline_translate");
            saw_fallback = true;
        } else if (value.at("idx") == 6) {
            CHECK(value.at("template_id") == "visual_translate");
        }
    }
    CHECK(saw_fallback);

    // a separate fresh run produces byte-identical artifacts
    const auto work2 = testutil::fresh_temp_dir("trans2");
    PipelineConfig cfg2 = fixture_config(work2);
    auto clients2 = make_backends(cfg2);
    REQUIRE(cmd_prepare(cfg2, clients2).ok());
    REQUIRE(cmd_contextualize(cfg2, "inter_vs", clients2).ok());
    REQUIRE(cmd_translate(cfg2, "baseline", clients2).ok());
    REQUIRE(cmd_translate(cfg2, "inter_vs", clients2).ok());
    CHECK(read_file(translations_path(cfg, "inter_vs", "ben")) ==
          read_file(translations_path(cfg2, "inter_vs", "ben")));
    CHECK(read_file(corpus_path(cfg, "ben")) == read_file(corpus_path(cfg2, "ben")));

    // resume: re-running issues no further translator calls
    const auto calls = mock_calls(clients, backends::Role::translate);
    REQUIRE(cmd_translate(cfg, "inter_vs", clients).ok());
    CHECK(mock_calls(clients, backends::Role::translate) == calls);
}

TEST_CASE("evaluate reproduces the fixture corpus means and the selective math") {
    const auto work = testutil::fresh_temp_dir("eval");
    PipelineConfig cfg = fixture_config(work);
    auto clients = make_backends(cfg);
    REQUIRE(cmd_prepare(cfg, clients).ok());
    for (const std::string method : {"attr_vc", "inter_vs"}) {
        REQUIRE(cmd_contextualize(cfg, method, clients).ok());
        REQUIRE(cmd_translate(cfg, method, clients).ok());
    }
    REQUIRE(cmd_translate(cfg, "baseline", clients).ok());
    REQUIRE(cmd_evaluate(cfg).ok());

    const auto results = report::load_results(results_path(cfg));
    CHECK(results.size() == 12); // 2 languages x 2 methods x (full + sel20 + sel30)
    auto find = [&](const std::string& lang, report::Method m, const std::string& cond) {
        for (const auto& r : results) {
            if (r.language == lang && r.method == m && r.condition == cond) return r;
        }
        throw std::runtime_error("missing " + lang + "/" + cond);
    };
    CHECK(find("ben", report::Method::attr_vc, "full").metrics.comet ==
          Catch::Approx(0.7014).margin(1e-9));
    CHECK(find("ben", report::Method::attr_vc, "full").baseline.comet ==
          Catch::Approx(0.6298).margin(1e-9));
    CHECK(find("ben", report::Method::inter_vs, "sel30").metrics.comet ==
          Catch::Approx(0.6865).margin(1e-9));
    CHECK(find("ben", report::Method::attr_vc, "sel20").metrics.comet ==
          Catch::Approx(0.6682).margin(1e-9));

    // mock hypotheses share no vocabulary with the references: smoothed
    // BLEU stays near zero but positive
    const auto full = find("ben", report::Method::attr_vc, "full");
    CHECK(full.metrics.bleu > 0.0);
    CHECK(full.metrics.bleu < 5.0);

    // selective plans are exported with the documented schema
    const Json plan = Json::parse(read_file(work / "plans" / "plan.inter_vs.ben.sel30.json"));
    CHECK(plan.at("k_percent") == 30.0);
    CHECK(plan.at("n_total") == 10);
    CHECK(plan.at("replaced") == Json::array({3, 5, 7})); // the three worst baseline scores

    REQUIRE(cmd_report(cfg).ok());
    CHECK(std::filesystem::exists(report_dir(cfg) / "results_table.tsv"));
    CHECK(std::filesystem::exists(report_dir(cfg) / "gain_matrix.csv"));
    CHECK(std::filesystem::exists(report_dir(cfg) / "language_summary.tsv"));
}

TEST_CASE("flag overrides map one-to-one onto config keys") {
    PipelineConfig cfg = fixture_config(testutil::fresh_temp_dir("ovr"));
    config::Overrides o;
    o.window_half_ms = 60000;
    o.k_list = std::vector<double>{10.0, 50.0};
    o.seed = 99;
    config::apply_overrides(cfg, o);
    CHECK(cfg.window_half_ms == 60000);
    CHECK(cfg.selective.k_list == std::vector<double>{10.0, 50.0});
    CHECK(cfg.seed == 99);

    config::Overrides bad;
    bad.k_list = std::vector<double>{0.0};
    CHECK_THROWS_AS(config::apply_overrides(cfg, bad), ConfigError);
}

TEST_CASE("evaluate names the variant when scores are missing") {
    const auto work = testutil::fresh_temp_dir("evalmiss");
    PipelineConfig cfg = fixture_config(work);
    auto clients = make_backends(cfg);
    REQUIRE(cmd_prepare(cfg, clients).ok());
    REQUIRE(cmd_contextualize(cfg, "attr_vc", clients).ok());
    REQUIRE(cmd_translate(cfg, "baseline", clients).ok());
    REQUIRE(cmd_translate(cfg, "attr_vc", clients).ok());

    // score file lacking attr_vc entirely
    std::string partial;
    for (int i = 1; i <= 10; ++i) {
        partial += "{\"idx\": " + std::to_string(i) + ", \"variant\": \"baseline\", \"score\": 0.5}\n";
        partial += "{\"idx\": " + std::to_string(i) + ", \"variant\": \"inter_vs\", \"score\": 0.6}\n";
    }
    write_file(work / "partial.jsonl", partial);
    cfg.paths.scores["hin"] = work / "partial.jsonl";
    cfg.paths.scores["ben"] = work / "partial.jsonl";
    CHECK_THROWS_WITH(cmd_evaluate(cfg), Catch::Matchers::ContainsSubstring("attr_vc"));
}

TEST_CASE("identity hypotheses score 100 through evaluate") {
    const auto work = testutil::fresh_temp_dir("evalident");
    PipelineConfig cfg = fixture_config(work);
    cfg.languages = {"ben"};
    auto clients = make_backends(cfg);
    REQUIRE(cmd_prepare(cfg, clients).ok());

    // hand-written translation artifacts whose hypotheses equal the references
    const auto hash = config::config_hash(cfg);
    const auto rows = read_artifact(corpus_path(cfg, "ben"), "corpus", hash);
    for (const std::string variant : {"baseline", "attr_vc", "inter_vs"}) {
        std::vector<Json> recs;
        for (const auto& [value, line] : rows) {
            translation::TranslationRecord rec;
            rec.idx = value.at("idx").get<int>();
            rec.variant = variant;
            rec.hypothesis = value.at("ref").get<std::string>();
            recs.push_back(translation::translation_to_json(rec));
        }
        write_artifact(translations_path(cfg, variant, "ben"), "translations", hash, recs);
    }
    REQUIRE(cmd_evaluate(cfg).ok());
    const auto results = report::load_results(results_path(cfg));
    for (const auto& r : results) {
        CHECK(r.baseline.bleu == Catch::Approx(100.0).epsilon(1e-12));
        CHECK(r.baseline.chrfpp == Catch::Approx(100.0).epsilon(1e-12));
        CHECK(r.metrics.bleu == Catch::Approx(100.0).epsilon(1e-12));
    }
}

TEST_CASE("artifacts from a different config are refused") {
    const auto work = testutil::fresh_temp_dir("hashes");
    PipelineConfig cfg = fixture_config(work);
    auto clients = make_backends(cfg);
    REQUIRE(cmd_prepare(cfg, clients).ok());

    PipelineConfig other = cfg;
    other.window_half_ms = 120000; // a scientific knob changed
    CHECK(config::config_hash(other) != config::config_hash(cfg));
    auto other_clients = make_backends(other);
    CHECK_THROWS_AS(cmd_contextualize(other, "attr_vc", other_clients), ConfigError);

    // moving the workdir does not invalidate artifacts
    PipelineConfig moved = cfg;
    moved.paths.workdir = work; // same dir, but any path would hash the same
    CHECK(config::config_hash(moved) == config::config_hash(cfg));
}

TEST_CASE("drift re-emits a loadable timeline that feeds back into prepare") {
    const auto work = testutil::fresh_temp_dir("drift");
    PipelineConfig cfg = fixture_config(work);
    const auto out = work / "frames_drifted.jsonl";
    const timeline::DriftModel model{500, 1.0, 20};
    REQUIRE(cmd_drift(cfg, model, out).ok());

    const auto drifted = timeline::load_frames(out); // strictly increasing or load would fail
    REQUIRE(drifted.frames.size() == 61);
    CHECK(drifted.frames.front().t_ms >= 0);

    PipelineConfig cfg2 = fixture_config(testutil::fresh_temp_dir("drift2"));
    cfg2.paths.frames = out;
    auto clients = make_backends(cfg2);
    CHECK(cmd_prepare(cfg2, clients).ok());
}

TEST_CASE("prepare consumes a frame image directory through the describe backend") {
    const auto work = testutil::fresh_temp_dir("imgdir");
    const auto frames_dir = work / "frames";
    std::filesystem::create_directories(frames_dir);
    for (int t = 0; t < 90; t += 1) {
        write_file(frames_dir / ("frame_" + std::to_string(t) + ".jpg"), "jpegbytes");
    }
    write_file(frames_dir / "notes.txt", "ignored");

    PipelineConfig cfg = fixture_config(work);
    cfg.paths.frames = frames_dir;
    backends::BackendProfile describe;
    describe.role = backends::Role::describe;
    describe.endpoint = "mock:hash";
    cfg.backends[backends::Role::describe] = describe;

    auto clients = make_backends(cfg);
    const auto rep = cmd_prepare(cfg, clients);
    REQUIRE(rep.ok());
    const auto tl = pipeline::detail::load_timeline_artifact(cfg, config::config_hash(cfg));
    REQUIRE(tl.frames.size() == 90);
    CHECK(tl.frames[5].raw_text == "mock description of frame 5");
    CHECK(tl.frames[5].t_ms == 5000);
}
