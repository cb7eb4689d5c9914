#pragma once

#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pigec/corpus.hpp"
#include "pigec/edits.hpp"
#include "pigec/errors.hpp"
#include "pigec/pi.hpp"
#include "pigec/text.hpp"

namespace pigec {

// ---------------------------------------------------------------------------
// Coverage on the 0/1/2 rubric

struct CoverageScore {
    std::size_t covered = 0;
    std::size_t total = 0;
    int rubric_level = 2;

    friend bool operator==(const CoverageScore&, const CoverageScore&) = default;
};

/// 2: everything covered (or nothing to cover); 1: more than half; 0: otherwise.
inline int rubric_level(std::size_t covered, std::size_t total) {
    if (total == 0 || covered == total) return 2;
    if (2 * covered > total) return 1;
    return 0;
}

inline bool mentions(std::string_view haystack_folded, std::string_view side) {
    if (side == kEmptySide || side.empty()) return true;
    return haystack_folded.find(fold_case(side)) != std::string_view::npos;
}

/// A gold edit counts as covered when a record names the same pair
/// (case-insensitively) or any explanation mentions both of its sides.
inline CoverageScore coverage(const std::vector<ExplanationRecord>& records, const std::vector<Edit>& gold_edits) {
    std::vector<std::string> folded;
    folded.reserve(records.size());
    for (const auto& r : records) folded.push_back(fold_case(r.explanation));

    CoverageScore score;
    score.total = gold_edits.size();
    for (const auto& g : gold_edits) {
        const auto gs = fold_case(g.src_text), gt = fold_case(g.tgt_text);
        bool hit = false;
        for (std::size_t k = 0; k < records.size() && !hit; ++k) {
            const auto& e = records[k].edit;
            hit = fold_case(e.src_text) == gs && fold_case(e.tgt_text) == gt;
            if (!hit && !(g.src_text == kEmptySide && g.tgt_text == kEmptySide))
                hit = mentions(folded[k], g.src_text) && mentions(folded[k], g.tgt_text);
        }
        if (hit) ++score.covered;
    }
    score.rubric_level = rubric_level(score.covered, score.total);
    return score;
}

// ---------------------------------------------------------------------------
// Token-overlap precision / recall / F1

struct Prf {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct OverlapCounts {
    std::size_t overlap = 0;
    std::size_t candidate = 0;
    std::size_t reference = 0;

    OverlapCounts& operator+=(const OverlapCounts& o) {
        overlap += o.overlap;
        candidate += o.candidate;
        reference += o.reference;
        return *this;
    }
};

inline OverlapCounts overlap_counts(std::string_view candidate, std::string_view reference) {
    std::map<std::string, long> bag;
    const auto cand = tokenize_surfaces(fold_case(candidate));
    const auto ref = tokenize_surfaces(fold_case(reference));
    for (const auto& t : ref) ++bag[t];
    OverlapCounts c{0, cand.size(), ref.size()};
    for (const auto& t : cand) {
        auto it = bag.find(t);
        if (it != bag.end() && it->second > 0) {
            --it->second;
            ++c.overlap;
        }
    }
    return c;
}

inline Prf prf_from_counts(const OverlapCounts& c) {
    if (c.candidate == 0 && c.reference == 0) return {1, 1, 1};
    if (c.candidate == 0 || c.reference == 0) return {0, 0, 0};
    Prf s;
    s.precision = static_cast<double>(c.overlap) / static_cast<double>(c.candidate);
    s.recall = static_cast<double>(c.overlap) / static_cast<double>(c.reference);
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

/// Multiset token overlap after case folding.
inline Prf token_f1(std::string_view candidate, std::string_view reference) {
    return prf_from_counts(overlap_counts(candidate, reference));
}

// ---------------------------------------------------------------------------
// Report

struct ExampleRow {
    std::string id;
    std::size_t covered = 0;
    std::size_t total = 0;
    int rubric_level = 2;
    double precision = 0, recall = 0, f1 = 0;

    friend bool operator==(const ExampleRow&, const ExampleRow&) = default;
};

struct SystemScores {
    std::string name;
    double precision = 0, recall = 0, f1 = 0;  // micro-averaged token overlap
    double mean_rubric_level = 0;
    double coverage_percent = 0;  // mean_rubric_level * 50
    std::size_t covered = 0, total = 0;
    std::vector<ExampleRow> rows;

    friend bool operator==(const SystemScores&, const SystemScores&) = default;
};

struct EvalReport {
    nlohmann::json fingerprint = nlohmann::json::object();
    std::vector<SystemScores> systems;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline std::string joined_explanations(const std::vector<ExplanationRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        if (!out.empty()) out += ' ';
        out += r.explanation;
    }
    return out;
}

inline std::string joined_explanations(const std::vector<std::string>& explanations) {
    return join(explanations);
}

/// Score one system. Results and references are paired by position and
/// must agree on ids (an empty result id matches anything).
inline SystemScores evaluate_system(const std::vector<PiResult>& results, const std::vector<XgecExample>& references,
                                    std::string name, const CostModel& costs = {}) {
    if (results.size() != references.size())
        throw LengthMismatch(std::to_string(results.size()) + " results vs " + std::to_string(references.size()) +
                             " references");
    SystemScores s;
    s.name = std::move(name);
    OverlapCounts totals;
    long level_sum = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        const auto& ref = references[i];
        if (!r.id.empty() && r.id != ref.id)
            throw LengthMismatch("result " + std::to_string(i) + " has id '" + r.id + "' but reference has '" +
                                 ref.id + "'");
        const auto cov = coverage(r.records, extract_edits(ref.source, ref.corrected, costs));
        const auto counts = overlap_counts(joined_explanations(r.records), joined_explanations(ref.explanations));
        const auto prf = prf_from_counts(counts);
        totals += counts;
        level_sum += cov.rubric_level;
        s.covered += cov.covered;
        s.total += cov.total;
        s.rows.push_back({ref.id, cov.covered, cov.total, cov.rubric_level, prf.precision, prf.recall, prf.f1});
    }
    const auto micro = prf_from_counts(totals);
    s.precision = micro.precision;
    s.recall = micro.recall;
    s.f1 = micro.f1;
    s.mean_rubric_level = results.empty() ? 2.0 : static_cast<double>(level_sum) / static_cast<double>(results.size());
    s.coverage_percent = 50.0 * s.mean_rubric_level;
    return s;
}

inline EvalReport evaluate(const std::vector<PiResult>& results, const std::vector<XgecExample>& references,
                           nlohmann::json fingerprint = nlohmann::json::object(), const CostModel& costs = {}) {
    EvalReport report;
    report.fingerprint = std::move(fingerprint);
    const std::string name = results.empty() ? "system" : std::string(to_string(results.front().mode));
    report.systems.push_back(evaluate_system(results, references, name, costs));
    return report;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json systems = nlohmann::json::array();
    for (const auto& s : report.systems) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : s.rows) {
            rows.push_back({{"id", r.id},
                            {"covered", r.covered},
                            {"total", r.total},
                            {"rubric_level", r.rubric_level},
                            {"precision", r.precision},
                            {"recall", r.recall},
                            {"f1", r.f1}});
        }
        systems.push_back({{"name", s.name},
                           {"precision", s.precision},
                           {"recall", s.recall},
                           {"f1", s.f1},
                           {"mean_rubric_level", s.mean_rubric_level},
                           {"coverage_percent", s.coverage_percent},
                           {"covered", s.covered},
                           {"total", s.total},
                           {"rows", std::move(rows)}});
    }
    return {{"fingerprint", report.fingerprint}, {"systems", std::move(systems)}};
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport report;
    report.fingerprint = j.at("fingerprint");
    for (const auto& sj : j.at("systems")) {
        SystemScores s;
        s.name = sj.at("name").get<std::string>();
        s.precision = sj.at("precision").get<double>();
        s.recall = sj.at("recall").get<double>();
        s.f1 = sj.at("f1").get<double>();
        s.mean_rubric_level = sj.at("mean_rubric_level").get<double>();
        s.coverage_percent = sj.at("coverage_percent").get<double>();
        s.covered = sj.at("covered").get<std::size_t>();
        s.total = sj.at("total").get<std::size_t>();
        for (const auto& rj : sj.at("rows")) {
            s.rows.push_back({rj.at("id").get<std::string>(), rj.at("covered").get<std::size_t>(),
                              rj.at("total").get<std::size_t>(), rj.at("rubric_level").get<int>(),
                              rj.at("precision").get<double>(), rj.at("recall").get<double>(),
                              rj.at("f1").get<double>()});
        }
        report.systems.push_back(std::move(s));
    }
    return report;
}

inline void save_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report " + path.string());
    out << report_to_json(report).dump(2) << '\n';
}

inline EvalReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report " + path.string());
    return report_from_json(nlohmann::json::parse(in));
}

/// Precision / Recall / F1 / Coverage table, scores in percent.
inline void print_report_table(const EvalReport& report, std::ostream& os) {
    os << std::left << std::setw(12) << "System" << std::right << std::setw(11) << "Precision" << std::setw(9)
       << "Recall" << std::setw(8) << "F1" << std::setw(10) << "Coverage" << '\n';
    os << std::fixed << std::setprecision(1);
    for (const auto& s : report.systems) {
        os << std::left << std::setw(12) << s.name << std::right << std::setw(11) << 100.0 * s.precision
           << std::setw(9) << 100.0 * s.recall << std::setw(8) << 100.0 * s.f1 << std::setw(10) << s.coverage_percent
           << '\n';
    }
}

// ---------------------------------------------------------------------------
// Annotation sheet for human validity / coverage scoring

inline const std::vector<std::string>& annotation_header() {
    static const std::vector<std::string> header{"id",          "source",   "corrected", "edit",
                                                 "explanation", "validity", "coverage"};
    return header;
}

inline std::string csv_quote(std::string_view field) {
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void write_annotation_sheet(const std::vector<PiResult>& results, std::ostream& os) {
    const auto& header = annotation_header();
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << csv_quote(header[i]);
    os << '\n';
    for (const auto& r : results) {
        for (const auto& rec : r.records) {
            const std::string edit = rec.edit.src_text + std::string(kEditArrow) + rec.edit.tgt_text;
            os << csv_quote(r.id) << ',' << csv_quote(r.source) << ',' << csv_quote(r.corrected) << ','
               << csv_quote(edit) << ',' << csv_quote(rec.explanation) << ",\"\",\"\"\n";
        }
    }
}

inline void export_annotation_sheet(const std::vector<PiResult>& results, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write annotation sheet " + path.string());
    write_annotation_sheet(results, out);
    if (!out) throw IoError("write failed for " + path.string());
}

/// RFC 4180 reader: quoted fields may hold commas, quotes and newlines.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        any = true;
        if (c == '"') quoted = true;
        else if (c == ',') row.push_back(std::exchange(field, {}));
        else if (c == '\n') {
            row.push_back(std::exchange(field, {}));
            rows.push_back(std::exchange(row, {}));
            any = false;
        } else if (c != '\r') field += c;
    }
    if (quoted) throw ParseError("unterminated quoted field", rows.size() + 1);
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

struct AnnotationSummary {
    std::size_t rows = 0;
    std::size_t validity_scored = 0;
    std::size_t coverage_scored = 0;
    double mean_validity = 0;  // 0..2
    double mean_coverage = 0;  // 0..2
};

/// Mean of the filled-in validity and coverage columns (blank cells skipped).
inline AnnotationSummary summarize_annotation_sheet(std::string_view csv) {
    const auto table = parse_csv(csv);
    if (table.empty() || table.front() != annotation_header()) throw ParseError("unexpected annotation header", 1);
    AnnotationSummary s;
    double vsum = 0, csum = 0;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& row = table[r];
        if (row.size() != annotation_header().size()) throw ParseError("expected 7 columns", r + 1);
        ++s.rows;
        auto score = [&](const std::string& cell, std::size_t& n, double& sum) {
            const auto v = trim(cell);
            if (v.empty()) return;
            if (v != "0" && v != "1" && v != "2") throw ParseError("rubric score must be 0, 1 or 2", r + 1);
            sum += v[0] - '0';
            ++n;
        };
        score(row[5], s.validity_scored, vsum);
        score(row[6], s.coverage_scored, csum);
    }
    if (s.validity_scored) s.mean_validity = vsum / static_cast<double>(s.validity_scored);
    if (s.coverage_scored) s.mean_coverage = csum / static_cast<double>(s.coverage_scored);
    return s;
}

}  // namespace pigec
