#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "pigec/m2.hpp"

using pigec::M2Edit;
using pigec::parse_m2;
using Strings = std::vector<std::string>;

namespace {

std::string read_fixture(const std::string& name) {
    std::ifstream in(std::string(PIGEC_TEST_DATA) + "/" + name, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t error_line(const std::string& text) {
    try {
        parse_m2(text);
    } catch (const pigec::ParseError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST(ParseM2, MinimalEntry) {
    const auto entries = parse_m2("S a b .\nA 1 2|||R:X|||c|||REQUIRED|||-NONE-|||0\n\n");
    ASSERT_EQ(entries.size(), 1u);
    EXPECT_EQ(entries[0].source_tokens, (Strings{"a", "b", "."}));
    ASSERT_EQ(entries[0].annotations.size(), 1u);
    EXPECT_EQ(entries[0].annotations[0].annotator_id, 0);
    EXPECT_EQ(entries[0].annotations[0].edits, (std::vector<M2Edit>{{1, 2, "R:X", "c"}}));
    EXPECT_EQ(pigec::apply_m2(entries[0], 0), "a c.");
    EXPECT_EQ(pigec::apply_m2_tokens(entries[0], 0), (Strings{"a", "c", "."}));
}

TEST(ParseM2, NoopAnnotator) {
    const auto entries = parse_m2("S a b .\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n\n");
    ASSERT_EQ(entries.size(), 1u);
    ASSERT_EQ(entries[0].annotations.size(), 1u);
    EXPECT_TRUE(entries[0].annotations[0].edits.empty());
    EXPECT_EQ(pigec::apply_m2(entries[0], 0), "a b.");
    EXPECT_THROW(pigec::apply_m2(entries[0], 3), pigec::UnknownAnnotator);
}

TEST(ParseM2, MissingTrailingBlankLine) {
    const auto entries = parse_m2("S a\n\nS b\nA 0 1|||R|||c|||REQUIRED|||-NONE-|||0");
    ASSERT_EQ(entries.size(), 2u);
    EXPECT_EQ(pigec::apply_m2(entries[1], 0), "c");
}

TEST(ParseM2, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line("S a b\nA 0 1|||R|||c|||REQUIRED|||-NONE-\n"), 2u);
    EXPECT_EQ(error_line("S a b\nA 0 3|||R|||c|||REQUIRED|||-NONE-|||0\n"), 2u);
    EXPECT_EQ(error_line("S a b\nA 1 0|||R|||c|||REQUIRED|||-NONE-|||0\n"), 2u);
    EXPECT_EQ(error_line("S a b\nA x 1|||R|||c|||REQUIRED|||-NONE-|||0\n"), 2u);
    EXPECT_EQ(error_line("S a b\nA 0 1|||R|||c|||REQUIRED|||-NONE-|||z\n"), 2u);
    EXPECT_EQ(error_line("A 0 1|||R|||c|||REQUIRED|||-NONE-|||0\n"), 1u);
    EXPECT_EQ(error_line("S a b\n\nhello\n"), 3u);
    EXPECT_EQ(error_line("S a\nS b\n"), 2u);
    EXPECT_EQ(error_line("S a b\nA 0 1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n"), 2u);
}

TEST(ParseM2, OverlappingEditsRejected) {
    const std::string text =
        "S a b c\nA 0 2|||R|||x|||REQUIRED|||-NONE-|||0\nA 1 3|||R|||y|||REQUIRED|||-NONE-|||0\n\n";
    EXPECT_EQ(error_line(text), 3u);
    // Different annotators may overlap.
    EXPECT_NO_THROW(parse_m2("S a b c\nA 0 2|||R|||x|||REQUIRED|||-NONE-|||0\nA 1 3|||R|||y|||REQUIRED|||-NONE-|||1\n\n"));
}

TEST(ParseM2, NoopAndEditsDoNotMix) {
    EXPECT_EQ(error_line("S a\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\nA 0 1|||R|||b|||REQUIRED|||-NONE-|||0\n"),
              3u);
    EXPECT_EQ(error_line("S a\nA 0 1|||R|||b|||REQUIRED|||-NONE-|||0\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n"),
              3u);
}

TEST(WriteM2, FixtureRoundTripsByteForByte) {
    const auto text = read_fixture("conll14_style.m2");
    ASSERT_FALSE(text.empty());
    const auto entries = parse_m2(text);
    EXPECT_EQ(entries.size(), 8u);
    EXPECT_EQ(pigec::write_m2(entries), text);
    EXPECT_EQ(parse_m2(pigec::write_m2(entries)), entries);
}

TEST(ApplyM2, FixtureCorrections) {
    const auto entries = parse_m2(read_fixture("conll14_style.m2"));
    EXPECT_EQ(pigec::apply_m2(entries[0], 0),
              "Keeping the genetic testing results private is important for every patient.");
    EXPECT_EQ(pigec::apply_m2(entries[3], 0), "Some diseases are passed down from parents to children.");
    EXPECT_EQ(pigec::apply_m2(entries[3], 1), pigec::apply_m2(entries[3], 0));
    EXPECT_EQ(pigec::apply_m2(entries[5], 0), "Family members have the right to know such information.");
    EXPECT_EQ(pigec::apply_m2(entries[6], 1), "The patient should decide whether to tell relatives.");
    EXPECT_EQ(pigec::apply_m2(entries[2], 1), pigec::detokenize(entries[2].source_tokens));
}

// Token count after applying annotator 0 = source count + inserted - deleted.
TEST(ApplyM2, TokenArithmetic) {
    for (const auto& entry : parse_m2(read_fixture("conll14_style.m2"))) {
        const auto* ann = entry.find(0);
        ASSERT_NE(ann, nullptr);
        long expected = static_cast<long>(entry.source_tokens.size());
        for (const auto& e : ann->edits) {
            const bool empty = e.correction.empty() || e.correction == "-NONE-";
            expected += empty ? 0 : static_cast<long>(pigec::split_ws(e.correction).size());
            expected -= static_cast<long>(e.end - e.start);
        }
        EXPECT_EQ(static_cast<long>(pigec::apply_m2_tokens(entry, 0).size()), expected);
    }
}

TEST(EditsWithSupport, CountsAnnotators) {
    const auto entries = parse_m2(read_fixture("conll14_style.m2"));
    EXPECT_EQ(pigec::edits_with_support(entries[1], 2).size(), 1u);
    EXPECT_EQ(pigec::edits_with_support(entries[0], 2).size(), 0u);
    EXPECT_EQ(pigec::edits_with_support(entries[0], 1).size(), 2u);
    // "" and "-NONE-" both spell a deletion.
    EXPECT_EQ(pigec::edits_with_support(entries[3], 2).size(), 1u);
}
