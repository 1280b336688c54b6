#include <gtest/gtest.h>

#include <map>

#include "afec/errors.hpp"
#include "afec/retrieval.hpp"
#include "support.hpp"

using namespace afec;
using namespace afec::testing;

namespace {

// Speakers about jobs and pets; listener labels chosen to exercise every strategy.
KnowledgeGraph chat_graph() {
    std::vector<SpeakerNode> s{speaker_node("S1", "I got a new job today", Label::Excited),
                               speaker_node("S2", "my dog passed away last night", Label::Sad),
                               speaker_node("S3", "nobody replied to this post", Label::Neutral)};
    std::vector<ListenerNode> l{listener_node("L1", "Congrats on the job!", Label::Wishing),
                                listener_node("L2", "So happy for you", Label::Joyful),
                                listener_node("L3", "That is so cool", Label::Impressed),
                                listener_node("L4", "Sorry for your loss", Label::Consoling),
                                listener_node("L5", "the weather is nice", Label::Neutral)};
    std::vector<Edge> e{{SpeakerId("S1"), ListenerId("L1"), 1}, {SpeakerId("S1"), ListenerId("L2"), 1},
                        {SpeakerId("S1"), ListenerId("L3"), 1}, {SpeakerId("S2"), ListenerId("L2"), 1},
                        {SpeakerId("S2"), ListenerId("L4"), 2}, {SpeakerId("S2"), ListenerId("L5"), 1}};
    GraphManifest m;
    m.encoder = HashingEncoder(64).binding();
    // S3 has no listeners; keep it out of the index for chat.
    s.pop_back();
    return KnowledgeGraph(std::move(s), std::move(l), std::move(e), m);
}

// Plain index without the int8 codes, so scans take the full-precision path.
RetrievalIndex index_of(VectorMatrix m) {
    RetrievalIndex idx;
    idx.encoder = {"synthetic", "1", m.dim()};
    for (std::size_t i = 0; i < m.size(); ++i) idx.norms.push_back(std::sqrt(dot(m.row(i), m.row(i))));
    idx.vectors = std::move(m);
    return idx;
}

}  // namespace

TEST(Nearest, MatchesLinearScan) {
    const auto idx = index_of(random_unit_matrix(3000, 24, 4));
    Rng rng(8);
    for (int q = 0; q < 50; ++q) {
        const EmbeddingVector v(gaussian(rng, 24));
        std::size_t best = 0;
        double best_sim = -2;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const double s = cosine(v.values(), idx.vectors.row(i));
            if (s > best_sim) best_sim = s, best = i;
        }
        const auto m = nearest_speaker(idx, v, 1 + q % 3);
        EXPECT_EQ(m.id.value, idx.vectors.id(best));
        EXPECT_NEAR(m.similarity, best_sim, 1e-12);
    }
}

TEST(Nearest, ParallelScanAgreesWithSerial) {
    const auto idx = index_of(random_unit_matrix(20000, 8, 9));
    Rng rng(10);
    for (int q = 0; q < 10; ++q) {
        const EmbeddingVector v(gaussian(rng, 8));
        EXPECT_EQ(nearest_speaker(idx, v, 1), nearest_speaker(idx, v, 4));
    }
}

TEST(Nearest, PrefilterMatchesPlainScan) {
    // Many near-duplicates and exact duplicates make the bounds overlap.
    const auto m = clustered_matrix(4000, 48, 3, 0.05, 12);
    const auto plain = index_of(m);
    const auto coded = make_index({"synthetic", "1", 48}, m);
    ASSERT_EQ(coded.codes.size(), 4000u * 48u);
    Rng rng(13);
    for (int q = 0; q < 200; ++q) {
        std::vector<float> v = gaussian(rng, 48);
        if (q % 2) {
            const auto r = m.row(rng.uniform_index(m.size()));
            for (std::size_t k = 0; k < 48; ++k) v[k] = r[k] + 1e-4f * v[k];
        }
        const EmbeddingVector e(v);
        EXPECT_EQ(nearest_speaker(coded, e), nearest_speaker(plain, e));
        EXPECT_EQ(search(coded, e, 7), search(plain, e, 7));
    }
    EXPECT_EQ(search(coded, EmbeddingVector(gaussian(rng, 48)), 5000).size(), 4000u);
}

TEST(Nearest, TiesGoToLowestId) {
    VectorMatrix m(2);
    m.add("a", std::vector<float>{0, 1});
    m.add("b", std::vector<float>{1, 0});
    m.add("c", std::vector<float>{1, 0});
    const auto idx = index_of(m);
    EXPECT_EQ(nearest_speaker(idx, EmbeddingVector({2, 0})).id.value, "b");
    const auto top = search(idx, EmbeddingVector({1, 0}), 5);
    ASSERT_EQ(top.size(), 3u);
    EXPECT_EQ(top[0].id.value, "b");
    EXPECT_EQ(top[1].id.value, "c");
    EXPECT_EQ(top[2].id.value, "a");
    EXPECT_TRUE(search(idx, EmbeddingVector({1, 0}), 0).empty());
    EXPECT_THROW(nearest_speaker(idx, EmbeddingVector({1, 0, 0})), std::invalid_argument);
}

TEST(Index, BindingExclusionAndEmpty) {
    const auto g = chat_graph();
    HashingEncoder enc(64);
    const auto idx = build_index(g, enc);
    EXPECT_EQ(idx.size(), 2u);
    EXPECT_EQ(build_index(g, enc, {"S1"}).size(), 1u);
    EXPECT_THROW(build_index(g, enc, {"S1", "S2"}), IndexError);
    EXPECT_THROW(build_index(g, HashingEncoder(32)), IndexError);
    EXPECT_THROW(nearest_speaker(idx, HashingEncoder(32), "hello"), IndexError);
    EXPECT_THROW(nearest_speaker(idx, enc, "  "), std::invalid_argument);
    EXPECT_EQ(nearest_speaker(idx, enc, "I got a new job").id.value, "S1");
}

TEST(Strategy, Names) {
    for (Strategy s : all_strategies()) EXPECT_EQ(parse_strategy(strategy_name(s)), s);
    EXPECT_EQ(parse_strategy("highest_degree"), Strategy::HighestDegree);
    EXPECT_EQ(parse_strategy("empathetic_intent"), Strategy::EmpatheticIntent);
    EXPECT_THROW(parse_strategy("best"), std::invalid_argument);
}

TEST(Strategy, Pools) {
    const auto g = chat_graph();
    const SpeakerId s1("S1"), s2("S2");
    bool fb = true;
    EXPECT_EQ(candidate_pool(g, s1, Strategy::Random, std::nullopt, &fb).size(), 3u);
    EXPECT_FALSE(fb);

    const auto hd = candidate_pool(g, s1, Strategy::HighestDegree, std::nullopt);
    ASSERT_EQ(hd.size(), 1u);
    EXPECT_EQ(hd[0]->id.value, "L2");  // in-degree 2

    const auto fe = candidate_pool(g, s1, Strategy::FollowEmotion, Label::Excited, &fb);
    ASSERT_EQ(fe.size(), 1u);  // joyful is excited's group-mate
    EXPECT_EQ(fe[0]->id.value, "L2");

    const auto none = candidate_pool(g, s1, Strategy::FollowEmotion, Label::Furious, &fb);
    EXPECT_TRUE(fb);
    EXPECT_EQ(none.size(), 3u);

    const auto ei = candidate_pool(g, s2, Strategy::EmpatheticIntent, std::nullopt, &fb);
    ASSERT_EQ(ei.size(), 1u);
    EXPECT_EQ(ei[0]->id.value, "L4");  // neutral L5 is not an empathetic intent
    EXPECT_FALSE(fb);
}

TEST(Strategy, NoNeighborsIsAnError) {
    KnowledgeGraph g({speaker_node("S1", "alone here")}, {listener_node("L1", "x")}, {});
    EXPECT_THROW(candidate_pool(g, SpeakerId("S1"), Strategy::Random, std::nullopt), NoReplyError);
}

TEST(Reply, SeedDeterminesChoice) {
    const auto g = chat_graph();
    std::map<std::string, int> seen;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const auto a = select_reply(g, SpeakerId("S1"), Strategy::Random, std::nullopt, seed);
        EXPECT_EQ(a, select_reply(g, SpeakerId("S1"), Strategy::Random, std::nullopt, seed));
        EXPECT_EQ(a.candidates, 3u);
        EXPECT_EQ(a.text, g.listener(a.listener).representative);
        ++seen[a.listener.value];
    }
    EXPECT_EQ(seen.size(), 3u);
}

TEST(Reply, SampleMemberSpeaksAMember) {
    auto l = listener_node("L1", "first");
    l.utterances.push_back(make_utterance("second", Role::Listener, "x2"));
    KnowledgeGraph g({speaker_node("S1", "post")}, {l}, {{SpeakerId("S1"), ListenerId("L1"), 1}});
    std::map<std::string, int> texts;
    for (std::uint64_t seed = 0; seed < 40; ++seed)
        ++texts[select_reply(g, SpeakerId("S1"), Strategy::Random, std::nullopt, seed, {true}).text];
    EXPECT_EQ(texts.size(), 2u);
}

TEST(Chat, EndToEnd) {
    const auto g = chat_graph();
    HashingEncoder enc(64);
    const auto idx = build_index(g, enc);
    const auto& lex = LexiconClassifier::bundled();

    const auto r = chat(idx, g, enc, &lex, "I got a job", Strategy::HighestDegree, 1);
    EXPECT_EQ(r.speaker.value, "S1");
    EXPECT_EQ(r.listener.value, "L2");
    EXPECT_GT(r.similarity, 0.0);

    const auto f = chat(idx, g, enc, &lex, "my dog passed away", Strategy::FollowEmotion, 1);
    EXPECT_EQ(f.input_label, Label::Devastated);
    EXPECT_EQ(f.speaker.value, "S2");

    ChatConfig by_node;
    by_node.use_node_label = true;
    const auto n = chat(idx, g, enc, nullptr, "I got a new job", Strategy::FollowEmotion, 3, by_node);
    EXPECT_EQ(n.input_label, Label::Excited);
    EXPECT_EQ(n.listener.value, "L2");

    EXPECT_THROW(chat(idx, g, enc, nullptr, "hello there", Strategy::FollowEmotion, 1), std::invalid_argument);
    EXPECT_NO_THROW(chat(idx, g, enc, nullptr, "hello there", Strategy::Random, 1));
}
