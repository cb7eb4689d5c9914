#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "pigec/errors.hpp"
#include "pigec/text.hpp"

namespace pigec {

using Rational = boost::rational<std::int64_t>;

/// Parse "2", "0.1", "-3/4" style literals into an exact rational.
inline Rational parse_rational(std::string_view s) {
    s = trim(s);
    auto fail = [&]() -> Rational { throw FormatError("not a rational number: '" + std::string(s) + "'"); };
    if (s.empty()) return fail();

    auto parse_int = [&](std::string_view d, std::int64_t& out) {
        if (d.empty()) return false;
        std::int64_t v = 0;
        for (char c : d) {
            if (c < '0' || c > '9') return false;
            if (v > (std::numeric_limits<std::int64_t>::max() - 9) / 10) return false;
            v = v * 10 + (c - '0');
        }
        out = v;
        return true;
    };

    bool neg = false;
    if (s.front() == '-' || s.front() == '+') {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    Rational value;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        std::int64_t num = 0, den = 0;
        if (!parse_int(s.substr(0, slash), num) || !parse_int(s.substr(slash + 1), den) || den == 0) return fail();
        value = Rational(num, den);
    } else {
        auto dot = s.find('.');
        std::string_view whole = s.substr(0, dot);
        std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
        if (whole.empty() && frac.empty()) return fail();
        if (frac.size() > 15) return fail();
        std::int64_t w = 0, f = 0, scale = 1;
        if (!whole.empty() && !parse_int(whole, w)) return fail();
        if (!frac.empty() && !parse_int(frac, f)) return fail();
        for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
        value = Rational(w) + Rational(f, scale);
    }
    return neg ? -value : value;
}

inline std::string to_string(const Rational& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

struct CostModel {
    Rational insert_cost{1};
    Rational delete_cost{1};
    Rational match_cost{0};
    Rational case_only_substitute_cost{1, 10};
    Rational substitute_base{2};
    Rational transpose_cost_per_token{1};

    void validate() const {
        for (const auto* f : {&insert_cost, &delete_cost, &match_cost, &case_only_substitute_cost,
                              &substitute_base, &transpose_cost_per_token}) {
            if (*f < 0) throw RangeError("cost model fields must be non-negative");
        }
    }

    friend bool operator==(const CostModel&, const CostModel&) = default;
};

enum class OpKind { Match, Substitute, Insert, Delete, Transpose };

inline std::string_view to_string(OpKind k) {
    switch (k) {
        case OpKind::Match: return "Match";
        case OpKind::Substitute: return "Substitute";
        case OpKind::Insert: return "Insert";
        case OpKind::Delete: return "Delete";
        case OpKind::Transpose: return "Transpose";
    }
    return "?";
}

/// One step of an alignment. Ranges are token indices, end exclusive.
struct AlignmentOp {
    OpKind kind = OpKind::Match;
    std::size_t src_start = 0, src_end = 0;
    std::size_t tgt_start = 0, tgt_end = 0;
    Rational cost{0};

    friend bool operator==(const AlignmentOp&, const AlignmentOp&) = default;
};

namespace align_detail {

template <class Str>
std::size_t levenshtein_of(const Str& x, const Str& y) {
    constexpr std::size_t kStack = 64;
    std::size_t prev_buf[kStack + 1], cur_buf[kStack + 1];
    std::vector<std::size_t> prev_heap, cur_heap;
    std::size_t* prev = prev_buf;
    std::size_t* cur = cur_buf;
    if (y.size() > kStack) {
        prev_heap.resize(y.size() + 1);
        cur_heap.resize(y.size() + 1);
        prev = prev_heap.data();
        cur = cur_heap.data();
    }
    for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= x.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= y.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[y.size()];
}

inline bool is_ascii(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

// Edit distance and the longer length, both in code points.
inline std::pair<std::size_t, std::size_t> distance_and_length(std::string_view a, std::string_view b) {
    if (is_ascii(a) && is_ascii(b)) return {levenshtein_of(a, b), std::max(a.size(), b.size())};
    const std::u32string x = utf8_code_points(a);
    const std::u32string y = utf8_code_points(b);
    return {levenshtein_of(x, y), std::max(x.size(), y.size())};
}

}  // namespace align_detail

/// Character-level Levenshtein distance over code points.
inline std::size_t char_levenshtein(std::string_view a, std::string_view b) {
    return align_detail::distance_and_length(a, b).first;
}

/// 1 - distance / max length, in [0, 1]. Two empty strings are identical.
inline Rational char_similarity(std::string_view a, std::string_view b) {
    const auto [d, longest] = align_detail::distance_and_length(a, b);
    if (longest == 0) return Rational(1);
    return Rational(1) - Rational(static_cast<std::int64_t>(d), static_cast<std::int64_t>(longest));
}

inline Rational substitution_cost(std::string_view a, std::string_view b, const CostModel& costs = {}) {
    if (a == b) return Rational(0);
    const bool case_only = a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(),
                                                                 [](char x, char y) { return fold_char(x) == fold_char(y); });
    if (case_only) return costs.case_only_substitute_cost;
    // base * (1 - similarity) == base * distance / longest
    const auto [d, longest] = align_detail::distance_and_length(a, b);
    return costs.substitute_base * Rational(static_cast<std::int64_t>(d), static_cast<std::int64_t>(longest));
}

/// Cost of swapping a block of k >= 2 tokens: k * per_token - 1/2, floored at 0.
inline Rational transpose_cost(std::size_t k, const CostModel& costs = {}) {
    Rational c = costs.transpose_cost_per_token * static_cast<std::int64_t>(k) - Rational(1, 2);
    return c < 0 ? Rational(0) : c;
}

inline Rational total_cost(const std::vector<AlignmentOp>& ops) {
    Rational sum(0);
    for (const auto& op : ops) sum += op.cost;
    return sum;
}

namespace align_detail {

inline std::string_view surface_of(const Token& t) { return t.surface; }
inline std::string_view surface_of(const std::string& s) { return s; }
inline std::string_view surface_of(std::string_view s) { return s; }

using Wide = __int128;

inline Wide lcm_wide(Wide a, Wide b) {
    constexpr Wide kNarrow = std::numeric_limits<std::int64_t>::max();
    if (a <= kNarrow && b <= kNarrow) {
        const auto g = std::gcd(static_cast<std::int64_t>(a), static_cast<std::int64_t>(b));
        return a / g * b;
    }
    Wide x = a, y = b;
    while (y != 0) {
        Wide t = x % y;
        x = y;
        y = t;
    }
    return a / x * b;
}

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Above this common denominator the DP switches to rounded units.
constexpr Wide kMaxExactScale = Wide{1} << 40;
constexpr std::int64_t kApproxScaleFactor = 720720;  // lcm(1..16)

// Per-thread buffers reused across calls; align() is hot in batch runs.
struct Workspace {
    std::vector<std::string_view> src, tgt, vocab;
    std::vector<std::uint32_t> sid, tid, sub_slot, scratch_a, scratch_b;
    std::vector<std::int32_t> slot_of;
    std::vector<Rational> pair_cost;
    std::vector<std::int64_t> pair_u, sub_u, tr_u, dp;
    std::vector<std::uint32_t> gaps;
    std::vector<std::uint64_t> shash, thash;
};

inline Workspace& workspace() {
    thread_local Workspace ws;
    return ws;
}

}  // namespace align_detail

/// Minimum-cost alignment with Damerau-style block transpositions.
///
/// Among minimum-cost alignments the one with the fewest insertions and
/// deletions wins, so align(t, s) mirrors align(s, t). Remaining ties
/// resolve in the order
/// Match > Substitute > Transpose (shorter block first) > Delete > Insert.
/// Costs are exact whenever the common denominator of all substitution
/// costs stays below 2^40; beyond that substitutions are rounded to a
/// fixed grid for the minimisation only (reported op costs stay exact).
template <class SrcRange, class TgtRange>
std::vector<AlignmentOp> align(const SrcRange& src_range, const TgtRange& tgt_range, const CostModel& costs = {}) {
    using namespace align_detail;
    costs.validate();

    Workspace& ws = workspace();
    auto& src = ws.src;
    auto& tgt = ws.tgt;
    src.clear();
    tgt.clear();
    for (const auto& t : src_range) src.push_back(surface_of(t));
    for (const auto& t : tgt_range) tgt.push_back(surface_of(t));
    const std::size_t n = src.size(), m = tgt.size();
    const std::size_t W = m + 1;

    // Token ids, shared by the cost cache and the block-permutation test.
    auto& sid = ws.sid;
    auto& tid = ws.tid;
    auto& vocab = ws.vocab;
    sid.assign(n, 0);
    tid.assign(m, 0);
    vocab.clear();
    {
        auto intern = [&](std::string_view s) {
            for (std::size_t v = 0; v < vocab.size(); ++v)
                if (vocab[v] == s) return static_cast<std::uint32_t>(v);
            vocab.push_back(s);
            return static_cast<std::uint32_t>(vocab.size() - 1);
        };
        for (std::size_t i = 0; i < n; ++i) sid[i] = intern(src[i]);
        for (std::size_t j = 0; j < m; ++j) tid[j] = intern(tgt[j]);
    }

    // Exact substitution cost for each distinct (source, target) surface pair.
    const std::size_t V = vocab.size();
    auto& slot_of = ws.slot_of;
    auto& pair_cost = ws.pair_cost;
    auto& sub_slot = ws.sub_slot;
    slot_of.assign(V * V, -1);
    pair_cost.clear();
    sub_slot.assign(n * m, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            auto& slot = slot_of[sid[i] * V + tid[j]];
            if (slot < 0) {
                slot = static_cast<std::int32_t>(pair_cost.size());
                pair_cost.push_back(sid[i] == tid[j] ? costs.match_cost : substitution_cost(src[i], tgt[j], costs));
            }
            sub_slot[i * m + j] = static_cast<std::uint32_t>(slot);
        }
    }
    auto sub = [&](std::size_t i, std::size_t j) -> const Rational& { return pair_cost[sub_slot[i * m + j]]; };

    // Common denominator for integer DP.
    Wide scale = 2;
    for (const auto* f : {&costs.insert_cost, &costs.delete_cost, &costs.match_cost,
                          &costs.transpose_cost_per_token})
        scale = lcm_wide(scale, f->denominator());
    const Wide model_scale = scale;
    bool exact = true;
    for (const auto& r : pair_cost) {
        scale = lcm_wide(scale, r.denominator());
        if (scale > kMaxExactScale) {
            exact = false;
            break;
        }
    }
    if (!exact) scale = lcm_wide(model_scale, kApproxScaleFactor);

    const std::int64_t limit = std::numeric_limits<std::int64_t>::max() / 4 / static_cast<std::int64_t>(n + m + 1);
    const auto scale64 = static_cast<std::int64_t>(scale);  // <= 2^40 * 720720 < 2^63
    auto units = [&](const Rational& r) -> std::int64_t {
        const std::int64_t den = r.denominator();
        std::int64_t num;
        std::int64_t q;
        if (!__builtin_mul_overflow(r.numerator(), scale64, &num)) {
            q = exact ? num / den : (num + den / 2) / den;
        } else {
            const Wide wide = static_cast<Wide>(r.numerator()) * scale;
            const Wide wq = exact ? wide / den : (wide + den / 2) / den;
            if (wq > limit) throw RangeError("alignment costs too large to represent");
            q = static_cast<std::int64_t>(wq);
        }
        if (q > limit) throw RangeError("alignment costs too large to represent");
        return q;
    };

    const std::int64_t ins_u = units(costs.insert_cost);
    const std::int64_t del_u = units(costs.delete_cost);
    auto& pair_u = ws.pair_u;
    pair_u.resize(pair_cost.size());
    for (std::size_t k = 0; k < pair_cost.size(); ++k) pair_u[k] = units(pair_cost[k]);
    auto& sub_u = ws.sub_u;
    sub_u.resize(n * m);
    for (std::size_t k = 0; k < sub_u.size(); ++k) sub_u[k] = pair_u[sub_slot[k]];
    auto& tr_u = ws.tr_u;
    tr_u.assign(std::min(n, m) + 1, 0);
    for (std::size_t k = 2; k < tr_u.size(); ++k) tr_u[k] = units(transpose_cost(k, costs));

    auto& shash = ws.shash;
    auto& thash = ws.thash;
    shash.assign(n + 1, 0);
    thash.assign(m + 1, 0);
    for (std::size_t i = 0; i < n; ++i) shash[i + 1] = shash[i] + mix64(sid[i]);
    for (std::size_t j = 0; j < m; ++j) thash[j + 1] = thash[j] + mix64(tid[j]);

    // Blocks src[i-k, i) and tgt[j-k, j) are a non-identical permutation of each other.
    auto& scratch_a = ws.scratch_a;
    auto& scratch_b = ws.scratch_b;
    auto is_transposition = [&](std::size_t i, std::size_t j, std::size_t k) {
        if (shash[i] - shash[i - k] != thash[j] - thash[j - k]) return false;
        scratch_a.assign(sid.begin() + static_cast<std::ptrdiff_t>(i - k), sid.begin() + static_cast<std::ptrdiff_t>(i));
        scratch_b.assign(tid.begin() + static_cast<std::ptrdiff_t>(j - k), tid.begin() + static_cast<std::ptrdiff_t>(j));
        if (scratch_a == scratch_b) return false;
        std::sort(scratch_a.begin(), scratch_a.end());
        std::sort(scratch_b.begin(), scratch_b.end());
        return scratch_a == scratch_b;
    };

    // dp holds the cost, gaps the insert/delete count of the chosen path.
    auto& dp = ws.dp;
    auto& gaps = ws.gaps;
    dp.assign((n + 1) * W, 0);
    gaps.assign((n + 1) * W, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        dp[i * W] = dp[(i - 1) * W] + del_u;
        gaps[i * W] = static_cast<std::uint32_t>(i);
    }
    for (std::size_t j = 1; j <= m; ++j) {
        dp[j] = dp[j - 1] + ins_u;
        gaps[j] = static_cast<std::uint32_t>(j);
    }
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t from = (i - 1) * W + (j - 1);
            std::int64_t best = dp[from] + sub_u[(i - 1) * m + (j - 1)];
            std::uint32_t best_gaps = gaps[from];
            auto offer = [&](std::int64_t cost, std::uint32_t g) {
                if (cost < best || (cost == best && g < best_gaps)) {
                    best = cost;
                    best_gaps = g;
                }
            };
            for (std::size_t k = 2; k <= std::min(i, j); ++k) {
                from = (i - k) * W + (j - k);
                if (is_transposition(i, j, k)) offer(dp[from] + tr_u[k], gaps[from]);
            }
            from = (i - 1) * W + j;
            offer(dp[from] + del_u, gaps[from] + 1);
            from = i * W + (j - 1);
            offer(dp[from] + ins_u, gaps[from] + 1);
            dp[i * W + j] = best;
            gaps[i * W + j] = best_gaps;
        }
    }

    std::vector<AlignmentOp> ops;
    ops.reserve(n + m);
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        const std::int64_t here = dp[i * W + j];
        const std::uint32_t here_gaps = gaps[i * W + j];
        auto reaches = [&](std::size_t from, std::int64_t cost, std::uint32_t g) {
            return dp[from] + cost == here && gaps[from] + g == here_gaps;
        };
        if (i > 0 && j > 0 && reaches((i - 1) * W + (j - 1), sub_u[(i - 1) * m + (j - 1)], 0)) {
            const bool same = src[i - 1] == tgt[j - 1];
            ops.push_back({same ? OpKind::Match : OpKind::Substitute, i - 1, i, j - 1, j, sub(i - 1, j - 1)});
            --i;
            --j;
            continue;
        }
        bool moved = false;
        for (std::size_t k = 2; i > 0 && j > 0 && k <= std::min(i, j); ++k) {
            if (is_transposition(i, j, k) && reaches((i - k) * W + (j - k), tr_u[k], 0)) {
                ops.push_back({OpKind::Transpose, i - k, i, j - k, j, transpose_cost(k, costs)});
                i -= k;
                j -= k;
                moved = true;
                break;
            }
        }
        if (moved) continue;
        if (i > 0 && reaches((i - 1) * W + j, del_u, 1)) {
            ops.push_back({OpKind::Delete, i - 1, i, j, j, costs.delete_cost});
            --i;
            continue;
        }
        // Only Insert remains.
        ops.push_back({OpKind::Insert, i, i, j - 1, j, costs.insert_cost});
        --j;
    }
    std::reverse(ops.begin(), ops.end());
    return ops;
}

}  // namespace pigec
