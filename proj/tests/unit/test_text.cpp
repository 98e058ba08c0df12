#include <gtest/gtest.h>

#include "reqqa/text.hpp"

using namespace reqqa;

namespace {

std::vector<std::string> texts(const std::vector<Token>& toks) {
    std::vector<std::string> out;
    for (const auto& t : toks) out.push_back(t.text);
    return out;
}

}  // namespace

TEST(Tokenize, EmptyInput) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, WordsAndPunctuation) {
    EXPECT_EQ(texts(tokenize("wet mass.")), (std::vector<std::string>{"wet", "mass", "."}));
}

TEST(Tokenize, NumeralsStayWhole) {
    EXPECT_EQ(texts(tokenize("3004 kg")), (std::vector<std::string>{"3004", "kg"}));
}

TEST(Tokenize, OffsetsAreBytesIntoSource) {
    const std::string s = "  Überwachung of DR-27";
    for (const auto& t : tokenize(s)) {
        EXPECT_EQ(s.substr(t.start, t.end - t.start), t.text);
    }
    const auto toks = tokenize(s);
    ASSERT_FALSE(toks.empty());
    EXPECT_EQ(toks.front().text, "Überwachung");
    EXPECT_EQ(toks.front().start, 2u);
}

TEST(Tokenize, HyphenIsItsOwnToken) {
    const auto toks = tokenize("DR-27");
    ASSERT_EQ(toks.size(), 3u);
    EXPECT_EQ(toks[1].kind, TokenKind::Punct);
}

TEST(Terms, WordTermsLowercaseAndDropPunct) {
    EXPECT_EQ(word_terms("The Wet, mass!"), (std::vector<std::string>{"the", "wet", "mass"}));
}

TEST(Terms, ContentTermsDropStopwords) {
    EXPECT_EQ(content_terms("What is the wet mass?"), (std::vector<std::string>{"wet", "mass"}));
}

TEST(WordList, ParseSkipsCommentsAndBlanks) {
    const auto wl = WordList::parse("# header\nalpha\n\n  Beta  \n");
    EXPECT_EQ(wl.size(), 2u);
    EXPECT_TRUE(wl.contains("alpha"));
    EXPECT_TRUE(wl.contains("beta"));
    EXPECT_FALSE(wl.contains("# header"));
}

TEST(WordList, ShippedListsLoad) {
    EXPECT_TRUE(default_stopwords().contains("the"));
    EXPECT_TRUE(default_generic_lexicon().contains("camera"));
    EXPECT_GT(default_abbreviations().size(), 0u);
}

TEST(Hash, FnvKnownValues) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Trim, StripsAsciiWhitespace) {
    EXPECT_EQ(trim("  x y \n"), "x y");
    EXPECT_EQ(trim("   "), "");
}
