#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace pigec {

/// One whitespace/punctuation-delimited unit of a text.
///
/// `char_start`/`char_end` are UTF-8 byte offsets into the original text
/// (end exclusive), so `text.substr(char_start, char_end - char_start)`
/// always equals `surface`. Splits only ever happen at ASCII whitespace or
/// ASCII punctuation, so a token boundary never falls inside a multi-byte
/// sequence.
struct Token {
    std::string surface;
    std::size_t char_start = 0;
    std::size_t char_end = 0;

    friend bool operator==(const Token&, const Token&) = default;
};

namespace text_detail {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Characters that are peeled off the edges of a whitespace chunk.
inline bool is_edge_punct(char c) {
    switch (c) {
        case '.': case ',': case '?': case '!': case ';': case ':':
        case '"': case '\'': case '(': case ')':
            return true;
        default:
            return false;
    }
}

// No space is emitted before these.
inline bool attaches_left(std::string_view s) {
    return s == "." || s == "," || s == "?" || s == "!" || s == ";" || s == ":" || s == ")";
}

// No space is emitted after these.
inline bool attaches_right(std::string_view s) { return s == "("; }

}  // namespace text_detail

/// Split on whitespace, then peel each leading and trailing punctuation
/// character of a chunk into its own token. Internal punctuation
/// ("don't", "e.g") is left alone.
inline std::vector<Token> tokenize(std::string_view text) {
    using text_detail::is_edge_punct;
    using text_detail::is_space;

    std::vector<Token> out;
    auto emit = [&](std::size_t b, std::size_t e) {
        out.push_back(Token{std::string(text.substr(b, e - b)), b, e});
    };

    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_space(text[i])) ++i;
        if (i == n) break;
        std::size_t end = i;
        while (end < n && !is_space(text[end])) ++end;

        std::size_t lo = i, hi = end;
        while (lo < hi && is_edge_punct(text[lo])) {
            emit(lo, lo + 1);
            ++lo;
        }
        std::size_t trail = hi;
        while (trail > lo && is_edge_punct(text[trail - 1])) --trail;
        if (lo < trail) emit(lo, trail);
        for (std::size_t p = trail; p < hi; ++p) emit(p, p + 1);

        i = end;
    }
    return out;
}

inline std::vector<std::string> surfaces(const std::vector<Token>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.surface);
    return out;
}

inline std::vector<std::string> tokenize_surfaces(std::string_view text) {
    return surfaces(tokenize(text));
}

/// Join surfaces with single spaces, attaching closing punctuation to the
/// left and "(" to the right.
template <class Range>
std::string detokenize(const Range& tokens) {
    std::string out;
    bool glue_next = true;
    for (const auto& tok : tokens) {
        std::string_view s(tok);
        if (!glue_next && !text_detail::attaches_left(s)) out.push_back(' ');
        out.append(s);
        glue_next = text_detail::attaches_right(s);
    }
    return out;
}

inline std::string detokenize(std::initializer_list<std::string_view> tokens) {
    return detokenize(std::vector<std::string_view>(tokens));
}

// ---------------------------------------------------------------------------
// Small string helpers shared across modules.

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ") {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

/// Split on runs of ASCII whitespace; no empty fields.
inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && text_detail::is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !text_detail::is_space(s[j])) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && text_detail::is_space(s[b])) ++b;
    while (e > b && text_detail::is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

inline char fold_char(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c; }

/// ASCII-only case fold; other bytes pass through untouched.
inline std::string fold_case(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = fold_char(c);
    return out;
}

/// Decode UTF-8 into code points. Invalid bytes decode to themselves so the
/// function stays total.
inline std::u32string utf8_code_points(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b0 = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        char32_t cp = b0;
        if (b0 >= 0xC0 && b0 < 0xE0) { extra = 1; cp = b0 & 0x1F; }
        else if (b0 >= 0xE0 && b0 < 0xF0) { extra = 2; cp = b0 & 0x0F; }
        else if (b0 >= 0xF0 && b0 < 0xF8) { extra = 3; cp = b0 & 0x07; }

        bool ok = i + extra < s.size();
        for (std::size_t k = 1; ok && k <= extra; ++k) {
            const auto bk = static_cast<unsigned char>(s[i + k]);
            if ((bk & 0xC0) != 0x80) ok = false;
            else cp = (cp << 6) | (bk & 0x3F);
        }
        if (!ok) {
            out.push_back(b0);
            ++i;
        } else {
            out.push_back(cp);
            i += extra + 1;
        }
    }
    return out;
}

}  // namespace pigec
