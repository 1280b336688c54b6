#include <gtest/gtest.h>

#include "afec/text.hpp"

using namespace afec;

namespace {

std::string kept(const Validated& v) { return std::holds_alternative<std::string>(v) ? std::get<std::string>(v) : "<rejected>"; }

RejectReason reason(const Validated& v) {
    EXPECT_TRUE(std::holds_alternative<RejectReason>(v));
    return std::holds_alternative<RejectReason>(v) ? std::get<RejectReason>(v) : RejectReason::Empty;
}

}  // namespace

TEST(Rewrite, DecodesEntities) {
    EXPECT_EQ(rewrite("I agree &gt; you"), "I agree > you");
    EXPECT_EQ(decode_entities("&#x41;&#66;"), "AB");
    EXPECT_EQ(decode_entities("a &unknown; b"), "a &unknown; b");
    EXPECT_EQ(decode_entities("trailing &amp"), "trailing &amp");
}

TEST(Rewrite, DropsBracketsAndSpaces) {
    EXPECT_EQ(rewrite("great day (really great)  today"), "great day today");
    EXPECT_EQ(remove_bracketed("a (b [c] d) e"), "a  e");
    EXPECT_EQ(remove_bracketed("a (b] c"), "a (b] c");
    EXPECT_EQ(collapse_whitespace(" a \n\t b  "), "a b");
}

TEST(Rewrite, Idempotent) {
    for (const char* s : {"&amp;lt;x&amp;gt; y", "((a) b) c", "  x   (y)  z ", "&lt;(gone)&gt; here"}) {
        const std::string once = rewrite(s);
        EXPECT_EQ(rewrite(once), once) << s;
    }
}

TEST(Validate, RuleOrderFirstFailureWins) {
    EXPECT_EQ(reason(validate("https://reddit.com r/x 1")), RejectReason::ContainsUrl);
    EXPECT_EQ(reason(validate("r/x 123456789")), RejectReason::ContainsForumMeta);
    EXPECT_EQ(reason(validate("9")), RejectReason::LowAlphaRatio);
    EXPECT_EQ(reason(validate("word")), RejectReason::TooShort);
    EXPECT_EQ(reason(validate("  ")), RejectReason::Empty);
}

TEST(Validate, CustomOptions) {
    ValidationOptions o;
    o.url_patterns = {"ftp://"};
    o.min_tokens = 3;
    EXPECT_EQ(kept(validate("see https://x.org now", o)), "see https://x.org now");
    EXPECT_EQ(reason(validate("ftp://x here ok", o)), RejectReason::ContainsUrl);
    EXPECT_EQ(reason(validate("two words", o)), RejectReason::TooShort);
}

TEST(Clean, RawDeletedMarkerBeatsRewrite) {
    EXPECT_EQ(reason(clean("[deleted]")), RejectReason::DeletedOrRemoved);
    EXPECT_EQ(reason(clean(" [Removed] ")), RejectReason::DeletedOrRemoved);
    EXPECT_EQ(reason(clean("[other]")), RejectReason::Empty);
}

TEST(Tokenize, SplitsPunctuationAndContractions) {
    EXPECT_EQ(tokenize("I'm fine, thanks!"), (std::vector<std::string>{"I", "'m", "fine", ",", "thanks", "!"}));
    EXPECT_EQ(tokenize("don't we've they'll"),
              (std::vector<std::string>{"do", "n't", "we", "'ve", "they", "'ll"}));
    EXPECT_EQ(tokenize("wait...what?!"), (std::vector<std::string>{"wait...what", "?", "!"}));
    EXPECT_EQ(tokenize("\"quoted\""), (std::vector<std::string>{"\"", "quoted", "\""}));
    EXPECT_TRUE(tokenize(" \n ").empty());
}

TEST(AlphaRatio, IgnoresWhitespaceAndCountsCodePoints) {
    EXPECT_DOUBLE_EQ(alpha_ratio("ab  12"), 0.5);
    EXPECT_DOUBLE_EQ(alpha_ratio("é1"), 0.5);
    EXPECT_DOUBLE_EQ(alpha_ratio(""), 0.0);
}

TEST(ForumMeta, WordBoundaries) {
    EXPECT_TRUE(contains_forum_meta("go to r/happy"));
    EXPECT_TRUE(contains_forum_meta("(u/someone)"));
    EXPECT_TRUE(contains_forum_meta("REDDIT"));
    EXPECT_FALSE(contains_forum_meta("redditor"));
    EXPECT_FALSE(contains_forum_meta("subreddit"));
    EXPECT_FALSE(contains_forum_meta("for/against"));
    EXPECT_FALSE(contains_forum_meta("r/ "));
}

TEST(Utterance, KeysAndTokens) {
    const auto u = make_utterance("hello there", Role::Listener, "c1", "src");
    EXPECT_EQ(u.key(), "l:c1");
    EXPECT_EQ(u.tokens.size(), 2u);
    EXPECT_EQ(utterance_key(Role::Speaker, "x"), "s:x");
    EXPECT_EQ(parse_role("listener"), Role::Listener);
    EXPECT_THROW(parse_role("reader"), std::invalid_argument);
}
