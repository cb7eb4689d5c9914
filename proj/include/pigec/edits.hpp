#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pigec/align.hpp"
#include "pigec/errors.hpp"
#include "pigec/text.hpp"

namespace pigec {

/// Rendering of an empty edit side.
inline constexpr std::string_view kEmptySide = "ε";
/// Separator between the two sides of an edit prompt.
inline constexpr std::string_view kEditArrow = " → ";

/// A merged correction span `src_text → tgt_text` over source token indices.
struct Edit {
    std::size_t index = 0;  // 1-based, source order
    std::size_t src_start = 0;
    std::size_t src_end = 0;
    std::string src_text;  // space-joined source tokens, or "ε"
    std::string tgt_text;  // space-joined target tokens, or "ε"

    friend bool operator==(const Edit&, const Edit&) = default;
};

inline std::string render_side(const std::vector<std::string>& tokens) {
    return tokens.empty() ? std::string(kEmptySide) : join(tokens);
}

/// Inverse of render_side.
inline std::vector<std::string> side_tokens(std::string_view side) {
    if (side == kEmptySide) return {};
    return split_ws(side);
}

/// Collapse each maximal run of non-Match ops into one Edit.
template <class SrcRange, class TgtRange>
std::vector<Edit> merge_ops(const std::vector<AlignmentOp>& ops, const SrcRange& src, const TgtRange& tgt) {
    std::vector<Edit> edits;
    std::size_t k = 0;
    while (k < ops.size()) {
        if (ops[k].kind == OpKind::Match) {
            ++k;
            continue;
        }
        const std::size_t run_begin = k;
        while (k < ops.size() && ops[k].kind != OpKind::Match) ++k;
        const AlignmentOp& first = ops[run_begin];
        const AlignmentOp& last = ops[k - 1];

        std::vector<std::string> s, t;
        for (std::size_t i = first.src_start; i < last.src_end; ++i)
            s.emplace_back(align_detail::surface_of(src[i]));
        for (std::size_t j = first.tgt_start; j < last.tgt_end; ++j)
            t.emplace_back(align_detail::surface_of(tgt[j]));
        if (s == t) continue;  // cannot come out of an optimal alignment, but never emit a no-op

        Edit e;
        e.index = edits.size() + 1;
        e.src_start = first.src_start;
        e.src_end = last.src_end;
        e.src_text = render_side(s);
        e.tgt_text = render_side(t);
        edits.push_back(std::move(e));
    }
    return edits;
}

/// Tokenize both texts, align them and merge the alignment into edits.
inline std::vector<Edit> extract_edits(std::string_view source_text, std::string_view corrected_text,
                                       const CostModel& costs = {}) {
    const auto src = tokenize_surfaces(source_text);
    const auto tgt = tokenize_surfaces(corrected_text);
    return merge_ops(align(src, tgt, costs), src, tgt);
}

/// "<index>. <src> → <tgt>:"
inline std::string format_edit(const Edit& e) {
    if (e.index == 0) throw FormatError("edit index must be 1-based");
    constexpr std::string_view arrow = "→";
    if (e.src_text.find(arrow) != std::string::npos || e.tgt_text.find(arrow) != std::string::npos)
        throw FormatError("edit text contains the arrow separator: " + e.src_text + " / " + e.tgt_text);
    std::string out = std::to_string(e.index);
    out += ". ";
    out += e.src_text.empty() ? std::string(kEmptySide) : e.src_text;
    out += kEditArrow;
    out += e.tgt_text.empty() ? std::string(kEmptySide) : e.tgt_text;
    out += ':';
    return out;
}

/// Replace each edit's source span with its target tokens.
///
/// Throws OverlapError for unordered, overlapping, or co-located insertion
/// edits and RangeError for spans outside the token sequence.
inline std::vector<std::string> apply_edits(const std::vector<std::string>& src_tokens,
                                            const std::vector<Edit>& edits) {
    std::vector<std::string> out;
    out.reserve(src_tokens.size());
    std::size_t cursor = 0;
    const Edit* prev = nullptr;
    for (const auto& e : edits) {
        if (e.src_start > e.src_end || e.src_end > src_tokens.size())
            throw RangeError("edit " + std::to_string(e.index) + " span [" + std::to_string(e.src_start) + ", " +
                             std::to_string(e.src_end) + ") outside " + std::to_string(src_tokens.size()) +
                             " tokens");
        if (prev) {
            const bool both_insert_here = e.src_start == prev->src_start && e.src_start == e.src_end &&
                                          prev->src_start == prev->src_end;
            if (e.src_start < prev->src_end || e.src_start < prev->src_start || both_insert_here)
                throw OverlapError("edits " + std::to_string(prev->index) + " and " + std::to_string(e.index) +
                                   " overlap or are out of order");
        }
        for (; cursor < e.src_start; ++cursor) out.push_back(src_tokens[cursor]);
        for (auto& t : side_tokens(e.tgt_text)) out.push_back(std::move(t));
        cursor = e.src_end;
        prev = &e;
    }
    for (; cursor < src_tokens.size(); ++cursor) out.push_back(src_tokens[cursor]);
    return out;
}

inline std::string apply_edits(std::string_view source_text, const std::vector<Edit>& edits) {
    return detokenize(apply_edits(tokenize_surfaces(source_text), edits));
}

}  // namespace pigec
