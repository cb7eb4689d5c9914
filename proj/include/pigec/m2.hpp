#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "pigec/errors.hpp"
#include "pigec/text.hpp"

// Reader and writer for the shared-task M2 format:
//
//   S tok tok tok
//   A 1 2|||R:X|||correction|||REQUIRED|||-NONE-|||0
//   <blank>
//
// A "noop" line (span -1 -1) declares an annotator with no edits.

namespace pigec {

struct M2Edit {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string type_code;
    std::string correction;
    std::string required = "REQUIRED";
    std::string comment = "-NONE-";

    friend bool operator==(const M2Edit&, const M2Edit&) = default;
};

struct M2Annotation {
    int annotator_id = 0;
    std::vector<M2Edit> edits;  // empty for a noop annotator

    friend bool operator==(const M2Annotation&, const M2Annotation&) = default;
};

struct M2Entry {
    std::vector<std::string> source_tokens;
    std::vector<M2Annotation> annotations;

    const M2Annotation* find(int annotator_id) const {
        for (const auto& a : annotations)
            if (a.annotator_id == annotator_id) return &a;
        return nullptr;
    }

    friend bool operator==(const M2Entry&, const M2Entry&) = default;
};

namespace m2_detail {

inline std::vector<std::string_view> split_fields(std::string_view s, std::string_view sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto hit = s.find(sep, pos);
        if (hit == std::string_view::npos) {
            out.push_back(s.substr(pos));
            return out;
        }
        out.push_back(s.substr(pos, hit - pos));
        pos = hit + sep.size();
    }
}

inline bool parse_long(std::string_view s, long long& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

// Overlap within one annotator: shared positive-length interior, two
// insertions at the same point, or an insertion strictly inside a span.
inline bool overlaps(const M2Edit& a, const M2Edit& b) {
    if (std::max(a.start, b.start) < std::min(a.end, b.end)) return true;
    const bool a_ins = a.start == a.end, b_ins = b.start == b.end;
    if (a_ins && b_ins) return a.start == b.start;
    if (a_ins) return b.start < a.start && a.start < b.end;
    if (b_ins) return a.start < b.start && b.start < a.end;
    return false;
}

inline bool is_empty_correction(std::string_view c) { return c.empty() || c == "-NONE-"; }

}  // namespace m2_detail

inline std::vector<M2Entry> parse_m2(std::istream& in) {
    using namespace m2_detail;
    std::vector<M2Entry> entries;
    bool open = false;
    std::map<int, bool> noop_annotators;
    std::string line;
    std::size_t lineno = 0;

    auto close = [&] {
        open = false;
        noop_annotators.clear();
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            close();
            continue;
        }
        if (line.rfind("S", 0) == 0 && (line.size() == 1 || line[1] == ' ')) {
            if (open) throw ParseError("'S' line inside an open entry (missing blank line)", lineno);
            M2Entry e;
            if (line.size() > 2) {
                for (auto tok : split_fields(std::string_view(line).substr(2), " ")) e.source_tokens.emplace_back(tok);
            }
            entries.push_back(std::move(e));
            open = true;
            continue;
        }
        if (line.rfind("A ", 0) == 0) {
            if (!open) throw ParseError("'A' line outside an entry", lineno);
            M2Entry& entry = entries.back();
            auto fields = split_fields(std::string_view(line).substr(2), "|||");
            if (fields.size() != 6) throw ParseError("expected 6 '|||'-separated fields", lineno);
            auto span = split_fields(fields[0], " ");
            long long start = 0, end = 0, ann = 0;
            if (span.size() != 2 || !parse_long(span[0], start) || !parse_long(span[1], end))
                throw ParseError("malformed span '" + std::string(fields[0]) + "'", lineno);
            if (!parse_long(fields[5], ann) || ann < 0)
                throw ParseError("malformed annotator id '" + std::string(fields[5]) + "'", lineno);
            const int annotator = static_cast<int>(ann);

            auto it = std::find_if(entry.annotations.begin(), entry.annotations.end(),
                                   [&](const M2Annotation& a) { return a.annotator_id == annotator; });
            if (fields[1] == "noop") {
                if (start != -1 || end != -1) throw ParseError("noop edit must span -1 -1", lineno);
                if (it != entry.annotations.end()) throw ParseError("noop for an annotator that already has edits", lineno);
                entry.annotations.push_back(M2Annotation{annotator, {}});
                noop_annotators[annotator] = true;
                continue;
            }
            if (start < 0 || end < start || static_cast<std::size_t>(end) > entry.source_tokens.size())
                throw ParseError("span " + std::to_string(start) + " " + std::to_string(end) + " out of range", lineno);
            if (noop_annotators.count(annotator)) throw ParseError("edit for an annotator declared noop", lineno);

            M2Edit edit{static_cast<std::size_t>(start), static_cast<std::size_t>(end), std::string(fields[1]),
                        std::string(fields[2]), std::string(fields[3]), std::string(fields[4])};
            if (it == entry.annotations.end()) {
                entry.annotations.push_back(M2Annotation{annotator, {}});
                it = std::prev(entry.annotations.end());
            }
            for (const auto& other : it->edits)
                if (overlaps(other, edit)) throw ParseError("overlapping edits for annotator " + std::to_string(annotator), lineno);
            it->edits.push_back(std::move(edit));
            continue;
        }
        throw ParseError("unrecognised line", lineno);
    }
    return entries;
}

inline std::vector<M2Entry> parse_m2(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_m2(in);
}

inline std::string write_m2(const std::vector<M2Entry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += 'S';
        for (const auto& t : e.source_tokens) {
            out += ' ';
            out += t;
        }
        out += '\n';
        for (const auto& a : e.annotations) {
            if (a.edits.empty()) {
                out += "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||" + std::to_string(a.annotator_id) + "\n";
                continue;
            }
            for (const auto& ed : a.edits) {
                out += "A " + std::to_string(ed.start) + " " + std::to_string(ed.end) + "|||" + ed.type_code + "|||" +
                       ed.correction + "|||" + ed.required + "|||" + ed.comment + "|||" +
                       std::to_string(a.annotator_id) + "\n";
            }
        }
        out += '\n';
    }
    return out;
}

/// Corrected tokens for one annotator, edits applied right to left.
inline std::vector<std::string> apply_m2_tokens(const M2Entry& entry, int annotator_id) {
    const M2Annotation* ann = entry.find(annotator_id);
    if (!ann) throw UnknownAnnotator("annotator " + std::to_string(annotator_id) + " not present in entry");
    std::vector<M2Edit> edits = ann->edits;
    std::stable_sort(edits.begin(), edits.end(), [](const M2Edit& a, const M2Edit& b) {
        return std::tie(a.start, a.end) > std::tie(b.start, b.end);
    });
    std::vector<std::string> tokens = entry.source_tokens;
    for (const auto& e : edits) {
        std::vector<std::string> repl;
        if (!m2_detail::is_empty_correction(e.correction)) repl = split_ws(e.correction);
        tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(e.start),
                     tokens.begin() + static_cast<std::ptrdiff_t>(e.end));
        tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(e.start), repl.begin(), repl.end());
    }
    return tokens;
}

inline std::string apply_m2(const M2Entry& entry, int annotator_id) {
    return detokenize(apply_m2_tokens(entry, annotator_id));
}

/// Edits proposed by at least `min_annotators` distinct annotators of the
/// entry, keyed on (start, end, correction) with "" and "-NONE-" treated
/// alike. Returned in source order.
inline std::vector<M2Edit> edits_with_support(const M2Entry& entry, std::size_t min_annotators) {
    std::map<std::tuple<std::size_t, std::size_t, std::string>, std::pair<std::size_t, M2Edit>> counts;
    for (const auto& a : entry.annotations) {
        for (const auto& e : a.edits) {
            const std::string key = m2_detail::is_empty_correction(e.correction) ? std::string() : e.correction;
            auto& slot = counts[{e.start, e.end, key}];
            if (slot.first == 0) slot.second = e;
            ++slot.first;
        }
    }
    std::vector<M2Edit> out;
    for (const auto& [key, value] : counts)
        if (value.first >= min_annotators) out.push_back(value.second);
    return out;
}

}  // namespace pigec
