#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "pigec/text.hpp"

using pigec::detokenize;
using pigec::tokenize;
using pigec::tokenize_surfaces;
using Strings = std::vector<std::string>;

TEST(Tokenize, SplitsFinalPeriod) {
    EXPECT_EQ(tokenize_surfaces("other disorders ."), (Strings{"other", "disorders", "."}));
}

TEST(Tokenize, EmptyInput) {
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_TRUE(tokenize("  \t\n").empty());
}

TEST(Tokenize, InternalApostropheStays) {
    EXPECT_EQ(tokenize_surfaces("don't stop."), (Strings{"don't", "stop", "."}));
}

TEST(Tokenize, PeelsEveryEdgeCharacter) {
    EXPECT_EQ(tokenize_surfaces("(\"Hi!\")"), (Strings{"(", "\"", "Hi", "!", "\"", ")"}));
    EXPECT_EQ(tokenize_surfaces("e.g. this"), (Strings{"e.g", ".", "this"}));
    EXPECT_EQ(tokenize_surfaces("...?"), (Strings{".", ".", ".", "?"}));
}

TEST(Tokenize, OffsetsSliceTheOriginal) {
    const std::string text = "  Le café (très) bon. ";
    const auto toks = tokenize(text);
    ASSERT_EQ(toks.size(), 7u);
    std::size_t last_end = 0;
    for (const auto& t : toks) {
        EXPECT_EQ(text.substr(t.char_start, t.char_end - t.char_start), t.surface);
        EXPECT_GE(t.char_start, last_end);
        EXPECT_LT(t.char_start, t.char_end);
        last_end = t.char_end;
    }
    EXPECT_EQ(toks[1].surface, "café");
}

TEST(Detokenize, AttachesPunctuation) {
    EXPECT_EQ(detokenize({"other", "disorders", "?"}), "other disorders?");
    EXPECT_EQ(detokenize(Strings{}), "");
    EXPECT_EQ(detokenize({"a", "(", "b", ")"}), "a (b)");
    EXPECT_EQ(detokenize({"x", ",", "y", ";", "z", ":", "w", "!"}), "x, y; z: w!");
}

TEST(Detokenize, LeadingPunctuationHasNoSpace) {
    EXPECT_EQ(detokenize({".", "a"}), ". a");
    EXPECT_EQ(detokenize({"?"}), "?");
}

// Surfaces plus the gaps between them rebuild the text, and a single-spaced
// join tokenizes back to the same surfaces.
TEST(Tokenize, RandomRoundTrips) {
    const std::string alphabet = "ab .,?!;:\"'()\tZé";
    std::mt19937_64 rng(7);
    for (int iter = 0; iter < 2000; ++iter) {
        std::string text;
        const int len = static_cast<int>(rng() % 20);
        for (int i = 0; i < len; ++i) {
            const auto pos = rng() % 15;
            text += pos == 14 ? std::string("é") : std::string(1, alphabet[pos]);
        }
        const auto toks = tokenize(text);
        std::string rebuilt;
        std::size_t cursor = 0;
        for (const auto& t : toks) {
            rebuilt += text.substr(cursor, t.char_start - cursor);
            rebuilt += t.surface;
            cursor = t.char_end;
        }
        rebuilt += text.substr(cursor);
        ASSERT_EQ(rebuilt, text);

        const auto surf = pigec::surfaces(toks);
        ASSERT_EQ(tokenize_surfaces(pigec::join(surf)), surf) << text;
        ASSERT_EQ(tokenize_surfaces(detokenize(surf)), surf) << text;
    }
}

TEST(Helpers, FoldAndCodePoints) {
    EXPECT_EQ(pigec::fold_case("The ÉCOLE"), "the École");
    EXPECT_EQ(pigec::utf8_code_points("aé€").size(), 3u);
    EXPECT_EQ(pigec::trim("  x y \n"), "x y");
    EXPECT_EQ(pigec::split_ws(" a  b\tc "), (Strings{"a", "b", "c"}));
}
