#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "subgrain/errors.hpp"

namespace subgrain {

// Ordered JSON keeps insertion order on dump, which keeps every artifact
// byte-stable across runs.
using Json = nlohmann::ordered_json;

struct JsonlLine {
    Json value;
    int line = 0; // 1-based line in the file, for diagnostics
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("short write to " + path.string());
}

/// Parse a JSON Lines buffer. Blank lines are skipped; parse failures carry
/// the 1-based line number.
inline std::vector<JsonlLine> parse_jsonl(std::string_view data, const std::string& origin) {
    std::vector<JsonlLine> out;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= data.size()) {
        std::size_t nl = data.find('\n', pos);
        std::string_view line = data.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) {
            Json v = Json::parse(line, nullptr, false);
            if (v.is_discarded()) {
                throw FormatError(origin + ": invalid JSON on line " + std::to_string(line_no));
            }
            out.push_back({std::move(v), line_no});
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return out;
}

inline std::vector<JsonlLine> read_jsonl(const std::filesystem::path& path) {
    return parse_jsonl(read_file(path), path.string());
}

inline std::string dump_jsonl(const std::vector<Json>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump();
        out += '\n';
    }
    return out;
}

} // namespace subgrain
