#include <gtest/gtest.h>

#include <sstream>

#include "afec/errors.hpp"
#include "afec/labeling.hpp"
#include "support.hpp"

using namespace afec;
using namespace afec::testing;

namespace {

Label baseline(std::string_view text, std::optional<std::string_view> context = std::nullopt) {
    return LexiconClassifier::bundled().classify(build_weighted_input(text, context));
}

}  // namespace

TEST(WeightedInput, UniformPrimaryDecayingContext) {
    const auto a = build_weighted_input("great job");
    EXPECT_EQ(a.tokens, (std::vector<std::string>{"great", "job"}));
    EXPECT_EQ(a.weights, (std::vector<double>{1, 1}));
    EXPECT_EQ(a.primary_count, 2u);

    const auto b = build_weighted_input("congrats", "I got promoted", 0.6);
    ASSERT_EQ(b.weights.size(), 4u);
    EXPECT_DOUBLE_EQ(b.weights[0], 1.0);
    EXPECT_NEAR(b.weights[1], 0.6, 1e-15);
    EXPECT_NEAR(b.weights[2], 0.36, 1e-15);
    EXPECT_NEAR(b.weights[3], 0.216, 1e-15);
    EXPECT_EQ(b.tokens[1], "i");

    EXPECT_THROW(build_weighted_input("  "), std::invalid_argument);
    EXPECT_THROW(build_weighted_input("x", std::nullopt, 1.0), std::invalid_argument);
    EXPECT_THROW(build_weighted_input("x", std::nullopt, 0.0), std::invalid_argument);
}

TEST(Lexicon, BaselineExamples) {
    EXPECT_EQ(baseline("I am so excited for tomorrow"), Label::Excited);
    EXPECT_EQ(baseline("the table has four legs"), Label::Neutral);
    EXPECT_EQ(baseline("why did you do that?"), Label::Questioning);
    EXPECT_EQ(baseline("the bus left?"), Label::Questioning);
    EXPECT_EQ(baseline("Good luck tomorrow!"), Label::Wishing);
    EXPECT_EQ(baseline("I am so sorry to hear that"), Label::Sympathizing);
    EXPECT_EQ(baseline("My dog passed away"), Label::Devastated);
}

TEST(Lexicon, ContextWeighsLess) {
    // Primary "thanks" (grateful) outweighs a context full of sadness words at decayed weight.
    EXPECT_EQ(baseline("thanks", "sad"), Label::Grateful);
    EXPECT_EQ(baseline("hmm then", "I am so sad and depressed"), Label::Sad);
}

TEST(Lexicon, EveryLabelOwnsItsName) {
    for (Label l : all_labels()) {
        bool found = false;
        for (const auto& kw : LexiconClassifier::bundled().keywords(l))
            found = found || (kw.tokens.size() == 1 && kw.tokens[0] == label_name(l));
        EXPECT_TRUE(found) << label_name(l);
    }
}

TEST(Lexicon, TiesGoToTaxonomyOrder) {
    std::istringstream in("sad\tblue\nproud\tblue\n");
    const auto lex = LexiconClassifier::parse(in);
    EXPECT_EQ(lex.classify(build_weighted_input("so blue")), Label::Proud);
}

TEST(Lexicon, ParseErrors) {
    std::istringstream unknown("bored\tmeh\n");
    EXPECT_THROW(LexiconClassifier::parse(unknown), std::invalid_argument);
    std::istringstream weight("sad\tblue:heavy\n");
    EXPECT_THROW(LexiconClassifier::parse(weight), std::invalid_argument);
    std::istringstream ok("# comment\n\nsad\tblue:2.5\tfeeling down\n");
    const auto lex = LexiconClassifier::parse(ok, "v9");
    EXPECT_EQ(lex.keywords(Label::Sad).size(), 2u);
    EXPECT_EQ(lex.keywords(Label::Sad)[0].weight, 2.5);
    EXPECT_EQ(lex.describe(), "lexicon/v9");
}

TEST(Classifier, Factory) {
    EXPECT_EQ(make_classifier("baseline")->describe(), LexiconClassifier::bundled().describe());
    EXPECT_THROW(make_classifier("roberta"), std::invalid_argument);
    TempDir dir("lex");
    std::ofstream(dir / "l.tsv") << "joyful\tyippee\n";
    const auto c = make_classifier("lexicon:" + (dir / "l.tsv").string());
    EXPECT_EQ(c->classify(build_weighted_input("yippee")), Label::Joyful);
    EXPECT_NE(c->version(), "1");
}

TEST(Classifier, ExternalProtocol) {
    auto c = make_classifier("external:while read -r l; do echo consoling; done");
    EXPECT_EQ(c->classify(build_weighted_input("anything")), Label::Consoling);
    auto bad = make_classifier("external:while read -r l; do echo bored; done");
    EXPECT_THROW(bad->classify(build_weighted_input("x")), ClassificationError);
    auto dead = make_classifier("external:true");
    EXPECT_THROW(dead->classify(build_weighted_input("x")), ClassificationError);
}

TEST(LabelGraph, LabelsEveryNodeDeterministically) {
    KnowledgeGraph g({speaker_node("S1", "I am so excited for my trip"), speaker_node("S2", "My dog passed away")},
                     {listener_node("L1", "oh no"), listener_node("L2", "the weather")},
                     {{SpeakerId("S1"), ListenerId("L1"), 1}, {SpeakerId("S2"), ListenerId("L1"), 3}});
    label_graph(g, LexiconClassifier::bundled(), {0.6, 2});
    EXPECT_TRUE(g.fully_labeled());
    EXPECT_EQ(g.speaker(SpeakerId("S1")).label, Label::Excited);
    // Context comes from the highest-support speaker.
    EXPECT_EQ(g.listener(ListenerId("L1")).label, Label::Devastated);
    // Unlinked listener: own text only.
    EXPECT_EQ(g.listener(ListenerId("L2")).label, Label::Neutral);
    EXPECT_EQ(g.manifest().labeler, LexiconClassifier::bundled().describe());

    auto again = g;
    label_graph(again, LexiconClassifier::bundled(), {0.6, 1});
    EXPECT_EQ(again, g);
}

TEST(LabelDistribution, CountsAndState) {
    KnowledgeGraph g({speaker_node("S1", "a", Label::Joyful), speaker_node("S2", "b", Label::Joyful)},
                     {listener_node("L1", "c")}, {});
    const auto d = label_distribution(g, Role::Speaker);
    EXPECT_EQ(d.total, 2u);
    EXPECT_DOUBLE_EQ(d.fractions[label_index(Label::Joyful)], 1.0);
    EXPECT_NE(format_distribution(d).find("joyful\temotion\t2\t1"), std::string::npos);
    EXPECT_THROW(label_distribution(g, Role::Listener), StateError);
}
