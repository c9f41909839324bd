#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "subgrain/errors.hpp"
#include "subgrain/jsonl.hpp"
#include "subgrain/scoring.hpp"
#include "subgrain/util.hpp"

namespace subgrain::report {

using scoring::MetricTriple;

// ---------------------------------------------------------------- types

enum class Method { attr_vc, inter_vs };

inline std::string_view method_name(Method m) {
    return m == Method::attr_vc ? "attr_vc" : "inter_vs";
}

inline Method method_from_name(std::string_view name) {
    if (name == "attr_vc") return Method::attr_vc;
    if (name == "inter_vs") return Method::inter_vs;
    throw FormatError("unknown method \"" + std::string(name) + "\"");
}

inline constexpr std::string_view kConditionFull = "full";

inline std::string selective_condition(double k_percent) {
    return "sel" + std::to_string(static_cast<int>(std::llround(k_percent)));
}

/// Metrics for one (movie, language, method, condition) cell, with the
/// text-only baseline triple alongside. The tuple is unique per report.
struct RunResult {
    std::string movie_id;
    std::string language;
    Method method = Method::attr_vc;
    std::string condition; // "full", "sel20", "sel30", ...
    MetricTriple metrics;
    MetricTriple baseline;
};

/// Mean over a language's movies of 100 * (comet - baseline) / baseline.
struct LanguageSummary {
    std::string language;
    Method method = Method::attr_vc;
    std::string condition;
    double delta_percent = 0.0; // full precision; display rounds to one decimal
    std::size_t movie_count = 0;
};

/// Display form of a summary delta: one decimal, half away from zero.
inline double round_display(double percent) {
    return static_cast<double>(std::llround(percent * 10.0)) / 10.0;
}

// ------------------------------------------------------------------ io

namespace detail {

inline Json triple_to_json(const MetricTriple& t) {
    auto num = [](double v) { return std::isnan(v) ? Json(nullptr) : Json(v); };
    return Json{{"bleu", num(t.bleu)}, {"chrfpp", num(t.chrfpp)}, {"comet", num(t.comet)}};
}

inline MetricTriple triple_from_json(const Json& j) {
    MetricTriple t;
    auto num = [&](const char* key) {
        const auto& v = j.at(key);
        return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    t.bleu = num("bleu");
    t.chrfpp = num("chrfpp");
    t.comet = num("comet");
    return t;
}

} // namespace detail

inline Json run_result_to_json(const RunResult& r) {
    return Json{{"movie_id", r.movie_id},
                {"language", r.language},
                {"method", std::string(method_name(r.method))},
                {"condition", r.condition},
                {"metrics", detail::triple_to_json(r.metrics)},
                {"baseline", detail::triple_to_json(r.baseline)}};
}

inline RunResult run_result_from_json(const Json& j) {
    RunResult r;
    r.movie_id = j.at("movie_id").get<std::string>();
    r.language = j.at("language").get<std::string>();
    r.method = method_from_name(j.at("method").get<std::string>());
    r.condition = j.at("condition").get<std::string>();
    r.metrics = detail::triple_from_json(j.at("metrics"));
    r.baseline = detail::triple_from_json(j.at("baseline"));
    return r;
}

/// Load run results from either a bare JSON array or an object with a
/// "results" array (the evaluate stage writes the latter).
inline std::vector<RunResult> load_results(const std::filesystem::path& path) {
    const Json doc = Json::parse(read_file(path));
    const Json& rows = doc.is_array() ? doc : doc.at("results");
    std::vector<RunResult> out;
    std::set<std::tuple<std::string, std::string, std::string, std::string>> seen;
    for (const auto& row : rows) {
        RunResult r = run_result_from_json(row);
        if (!seen.emplace(r.movie_id, r.language, std::string(method_name(r.method)), r.condition)
                 .second) {
            throw FormatError(path.string() + ": duplicate result for " + r.movie_id + "/" +
                              r.language + "/" + std::string(method_name(r.method)) + "/" + r.condition);
        }
        out.push_back(std::move(r));
    }
    return out;
}

// ------------------------------------------------------------ summaries

/// Language-wise average relative COMET improvement per (method, condition).
/// Only movies where the language exists enter the mean; rows without a
/// usable COMET pair are skipped into `warnings`.
inline std::vector<LanguageSummary> build_language_summary(const std::vector<RunResult>& results,
                                                           std::vector<std::string>* warnings = nullptr) {
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> deltas;
    for (const auto& r : results) {
        if (std::isnan(r.metrics.comet) || std::isnan(r.baseline.comet) || r.baseline.comet == 0.0) {
            if (warnings) {
                warnings->push_back("no usable COMET pair for " + r.movie_id + "/" + r.language +
                                    "/" + std::string(method_name(r.method)) + "/" + r.condition);
            }
            continue;
        }
        const double delta = 100.0 * (r.metrics.comet - r.baseline.comet) / r.baseline.comet;
        deltas[{r.language, std::string(method_name(r.method)), r.condition}].push_back(delta);
    }

    std::vector<LanguageSummary> out;
    for (auto& [key, values] : deltas) {
        if (values.empty()) continue;
        LanguageSummary s;
        s.language = std::get<0>(key);
        s.method = method_from_name(std::get<1>(key));
        s.condition = std::get<2>(key);
        // summation in sorted order keeps the mean bit-identical no matter
        // how the input rows were ordered
        std::sort(values.begin(), values.end());
        double sum = 0.0;
        for (const double v : values) sum += v;
        s.delta_percent = sum / static_cast<double>(values.size());
        s.movie_count = values.size();
        out.push_back(std::move(s));
    }
    return out;
}

// ----------------------------------------------------------- gain matrix

/// One (movie, language) cell of the gain heat-map data: the COMET gain of
/// the better method over the baseline under one condition.
struct GainCell {
    std::string movie_id;
    std::string language;
    double delta = std::numeric_limits<double>::quiet_NaN(); // NaN: a method was missing
};

inline std::vector<GainCell> build_gain_matrix(const std::vector<RunResult>& results,
                                               std::string_view condition) {
    std::map<std::pair<std::string, std::string>, std::map<Method, double>> cells;
    for (const auto& r : results) {
        if (r.condition != condition) continue;
        if (std::isnan(r.metrics.comet) || std::isnan(r.baseline.comet)) continue;
        cells[{r.movie_id, r.language}][r.method] = r.metrics.comet - r.baseline.comet;
    }
    std::vector<GainCell> out;
    for (const auto& [key, by_method] : cells) {
        GainCell cell;
        cell.movie_id = key.first;
        cell.language = key.second;
        if (by_method.count(Method::attr_vc) && by_method.count(Method::inter_vs)) {
            cell.delta = std::max(by_method.at(Method::attr_vc), by_method.at(Method::inter_vs));
        }
        out.push_back(std::move(cell));
    }
    return out;
}

inline std::string gain_matrix_csv(const std::vector<GainCell>& cells) {
    std::string out = "movie,language,delta\n";
    for (const auto& c : cells) {
        out += c.movie_id + "," + c.language + ",";
        out += std::isnan(c.delta) ? "NA" : format_fixed(c.delta, 4);
        out += '\n';
    }
    return out;
}

// --------------------------------------------------------------- tables

namespace detail {

inline const std::vector<std::string>& table_conditions() {
    static const std::vector<std::string> conditions = {"full", "sel20", "sel30"};
    return conditions;
}

struct TableRow {
    std::string movie_id;
    std::string language;
    MetricTriple baseline;
    // cell per (method, condition) in fixed order
    std::map<std::pair<std::string, std::string>, MetricTriple> cells;
};

inline std::vector<TableRow> collect_rows(const std::vector<RunResult>& results) {
    std::map<std::pair<std::string, std::string>, TableRow> rows;
    for (const auto& r : results) {
        auto& row = rows[{r.movie_id, r.language}];
        row.movie_id = r.movie_id;
        row.language = r.language;
        row.baseline = r.baseline;
        row.cells[{std::string(method_name(r.method)), r.condition}] = r.metrics;
    }
    std::vector<TableRow> out;
    for (auto& [key, row] : rows) out.push_back(std::move(row));
    return out; // std::map iteration is already (movie, language)-sorted
}

inline std::vector<std::string> table_header() {
    std::vector<std::string> cols = {"movie", "language", "baseline_bleu", "baseline_chrfpp",
                                     "baseline_comet"};
    for (const std::string_view method : {"attr_vc", "inter_vs"}) {
        for (const auto& cond : table_conditions()) {
            for (const std::string_view metric : {"bleu", "chrfpp", "comet"}) {
                cols.push_back(std::string(method) + "_" + cond + "_" + std::string(metric));
            }
        }
    }
    return cols;
}

inline std::string format_metric(double v, bool comet) {
    if (std::isnan(v)) return "";
    return format_fixed(v, comet ? 4 : 2);
}

inline std::vector<std::string> table_cells(const TableRow& row) {
    std::vector<std::string> cells = {row.movie_id, row.language,
                                      format_metric(row.baseline.bleu, false),
                                      format_metric(row.baseline.chrfpp, false),
                                      format_metric(row.baseline.comet, true)};
    for (const std::string_view method : {"attr_vc", "inter_vs"}) {
        for (const auto& cond : table_conditions()) {
            const auto it = row.cells.find({std::string(method), cond});
            const MetricTriple t = it == row.cells.end() ? MetricTriple{} : it->second;
            cells.push_back(format_metric(t.bleu, false));
            cells.push_back(format_metric(t.chrfpp, false));
            cells.push_back(format_metric(t.comet, true));
        }
    }
    return cells;
}

} // namespace detail

/// Render the per-movie result table. Column order mirrors the run layout:
/// baseline triple, then visual-enhanced and selective triples per method.
/// Rows sort by (movie, language). "json" renders the canonical RunResult
/// array, which load_results() reads back.
inline std::string render_tables(const std::vector<RunResult>& results, std::string_view format) {
    if (format == "json") {
        std::vector<RunResult> sorted = results;
        std::sort(sorted.begin(), sorted.end(), [](const RunResult& a, const RunResult& b) {
            return std::tie(a.movie_id, a.language, a.condition) <
                   std::tie(b.movie_id, b.language, b.condition) ||
                   (std::tie(a.movie_id, a.language, a.condition) ==
                        std::tie(b.movie_id, b.language, b.condition) &&
                    method_name(a.method) < method_name(b.method));
        });
        Json arr = Json::array();
        for (const auto& r : sorted) arr.push_back(run_result_to_json(r));
        return arr.dump(2) + "\n";
    }

    const auto rows = detail::collect_rows(results);
    const auto header = detail::table_header();
    std::string out;
    if (format == "tsv") {
        out = join(header, "\t") + "\n";
        for (const auto& row : rows) out += join(detail::table_cells(row), "\t") + "\n";
    } else if (format == "markdown") {
        out = "| " + join(header, " | ") + " |\n";
        out += "|";
        for (std::size_t i = 0; i < header.size(); ++i) out += " --- |";
        out += "\n";
        for (const auto& row : rows) out += "| " + join(detail::table_cells(row), " | ") + " |\n";
    } else {
        throw ConfigError("unknown table format \"" + std::string(format) + "\"");
    }
    return out;
}

inline std::string language_summary_tsv(const std::vector<LanguageSummary>& summaries) {
    std::string out = "language\tmethod\tcondition\tdelta_percent\tmovies\n";
    for (const auto& s : summaries) {
        out += s.language + "\t" + std::string(method_name(s.method)) + "\t" + s.condition + "\t" +
               format_fixed(round_display(s.delta_percent), 1) + "\t" + std::to_string(s.movie_count) +
               "\n";
    }
    return out;
}

} // namespace subgrain::report
