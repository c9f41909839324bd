#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "subgrain/timedtext.hpp"
#include "subgrain/timeline.hpp"

namespace testutil {

namespace fs = std::filesystem;

inline fs::path fixture_dir() { return fs::path(SUBGRAIN_FIXTURE_DIR); }

inline fs::path fresh_temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const fs::path dir = fs::temp_directory_path() /
                         ("subgrain_" + tag + "_" + std::to_string(::getpid()) + "_" +
                          std::to_string(counter.fetch_add(1)));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// ------------------------------------------------------- SRT generation

struct GeneratedSrt {
    std::string canonical; // exactly the serializer's canonical layout
    std::vector<subgrain::timedtext::SubtitleSegment> segments;
};

/// Random well-formed SRT in canonical form (LF, no BOM). Cue numbers may
/// have gaps; cues may span multiple lines.
inline GeneratedSrt generate_srt(std::mt19937& rng, int max_cues = 50) {
    static const std::vector<std::string> words = {
        "the",  "captain", "waits",  "below", "deck",   "storm", "light",
        "hold", "fast",    "signal", "home",  "quiet",  "now",   "look",
        "east", "engine",  "room",   "door",  "closed", "run",
    };
    GeneratedSrt out;
    std::uniform_int_distribution<int> cue_count(1, max_cues);
    std::uniform_int_distribution<int> word_count(1, 8);
    std::uniform_int_distribution<int> line_count(1, 3);
    std::uniform_int_distribution<std::size_t> word_pick(0, words.size() - 1);
    std::uniform_int_distribution<std::int64_t> gap(0, 4000);
    std::uniform_int_distribution<std::int64_t> length(1, 6000);
    std::uniform_int_distribution<int> idx_gap(1, 3);

    const int cues = cue_count(rng);
    std::int64_t t = 0;
    int index = 0;
    for (int c = 0; c < cues; ++c) {
        index += idx_gap(rng);
        subgrain::timedtext::SubtitleSegment seg;
        seg.index = index;
        seg.span.start_ms = t + gap(rng);
        seg.span.end_ms = seg.span.start_ms + length(rng);
        t = seg.span.end_ms;
        std::vector<std::string> lines;
        for (int l = 0; l < line_count(rng); ++l) {
            std::vector<std::string> ws;
            for (int w = 0; w < word_count(rng); ++w) ws.push_back(words[word_pick(rng)]);
            lines.push_back(subgrain::join(ws, " "));
        }
        seg.raw_text = subgrain::join(lines, "\n");
        seg.text = seg.raw_text;
        out.segments.push_back(seg);
    }
    out.canonical = subgrain::timedtext::serialize_srt(out.segments);
    return out;
}

// -------------------------------------------------- timeline generation

inline subgrain::timeline::Timeline generate_timeline(std::mt19937& rng, int max_frames = 120) {
    std::uniform_int_distribution<int> count(0, max_frames);
    std::uniform_int_distribution<std::int64_t> step(1, 2500);
    std::vector<subgrain::timeline::FrameDescription> frames;
    std::int64_t t = 0;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        t += step(rng);
        frames.push_back({t, "frame " + std::to_string(i), "frame " + std::to_string(i)});
    }
    return subgrain::timeline::Timeline{std::move(frames)};
}

} // namespace testutil
