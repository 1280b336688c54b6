#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "afec/clustering.hpp"
#include "afec/errors.hpp"
#include "support.hpp"

using namespace afec;
using namespace afec::testing;

namespace {

VectorMatrix from_rows(const std::vector<std::vector<float>>& rows) {
    VectorMatrix m(rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) m.add(row_id(i), unit(rows[i]));
    return m;
}

void expect_partition(const std::vector<Cluster>& clusters, const VectorMatrix& m) {
    std::multiset<std::string> seen;
    for (const auto& c : clusters) seen.insert(c.member_ids.begin(), c.member_ids.end());
    EXPECT_EQ(seen, std::multiset<std::string>(m.ids().begin(), m.ids().end()));
}

std::size_t largest(const std::vector<Cluster>& clusters) {
    std::size_t best = 0;
    for (const auto& c : clusters) best = std::max(best, c.member_ids.size());
    return best;
}

}  // namespace

TEST(Cluster, TwoIdenticalOneCluster) {
    const auto m = from_rows({{1, 0}, {1, 0}});
    const auto c = fast_community_detect(m, {});
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].member_ids.size(), 2u);
}

TEST(Cluster, OrthogonalStaySingletons) {
    const auto m = from_rows({{1, 0}, {0, 1}});
    EXPECT_EQ(fast_community_detect(m, {}).size(), 2u);
    EXPECT_TRUE(fast_community_detect(VectorMatrix(4), {}).empty());
}

TEST(Cluster, ExtractionOrderAndClaiming) {
    // u0..u2 near each other, u3 near u2 only. Largest community first, then
    // claimed members drop out of later ones.
    const auto m = from_rows({{1, 0, 0}, {1, 0.1f, 0}, {1, 0.3f, 0}, {1, 0.9f, 0}});
    ClusterParams p;
    p.threshold = 0.95;
    const auto c = fast_community_detect(m, p);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c[0].member_ids, (std::vector<std::string>{"u000000", "u000001", "u000002"}));
    EXPECT_EQ(c[0].id, "c00000000");
    EXPECT_EQ(c[0].representative_id, "u000001");
    EXPECT_EQ(c[1].member_ids, (std::vector<std::string>{"u000003"}));
    EXPECT_EQ(c, brute_force_cluster(m, p));
}

TEST(Cluster, MinCommunitySizeDissolves) {
    const auto m = from_rows({{1, 0}, {1, 0.05f}, {0, 1}});
    ClusterParams p;
    p.min_community_size = 3;
    const auto c = fast_community_detect(m, p);
    EXPECT_EQ(c.size(), 3u);
    expect_partition(c, m);
}

TEST(Cluster, FastMatchesBruteOnRandomInputs) {
    Rng rng(5);
    for (int t = 0; t < 25; ++t) {
        const auto m = clustered_matrix(1 + rng.uniform_index(150), t % 2 ? 48 : 7, 1 + rng.uniform_index(8),
                                        0.1 + 1.5 * rng.uniform_real(), rng.next());
        ClusterParams p;
        p.threshold = 0.5 + 0.45 * rng.uniform_real();
        p.min_community_size = 1 + rng.uniform_index(2);
        p.workers = 1 + rng.uniform_index(3);
        const auto fast = fast_community_detect(m, p);
        EXPECT_EQ(fast, brute_force_cluster(m, p)) << "case " << t;
        expect_partition(fast, m);
    }
}

TEST(Cluster, InputOrderDoesNotMatter) {
    const auto m = clustered_matrix(80, 16, 4, 0.6, 11);
    VectorMatrix reversed(m.dim());
    for (std::size_t i = m.size(); i-- > 0;) reversed.add(m.id(i), m.row(i));
    EXPECT_EQ(fast_community_detect(m, {}), fast_community_detect(reversed, {}));
}

TEST(Cluster, ThresholdMonotone) {
    const auto m = clustered_matrix(200, 24, 6, 0.9, 13);
    std::size_t prev = m.size() + 1;
    for (double t : {0.5, 0.6, 0.7, 0.8, 0.9, 0.99}) {
        ClusterParams p;
        p.threshold = t;
        const std::size_t big = largest(fast_community_detect(m, p));
        EXPECT_LE(big, prev) << t;
        prev = big;
    }
}

TEST(Cluster, RejectsBadInput) {
    ClusterParams bad;
    bad.threshold = 0;
    EXPECT_THROW(fast_community_detect(from_rows({{1, 0}}), bad), std::invalid_argument);
    VectorMatrix dup(2);
    dup.add("a", std::vector<float>{1, 0});
    dup.add("a", std::vector<float>{0, 1});
    EXPECT_THROW(fast_community_detect(dup, {}), std::invalid_argument);
    VectorMatrix loose(2);
    loose.add("a", std::vector<float>{3, 0});
    EXPECT_THROW(fast_community_detect(loose, {}), std::invalid_argument);
    EXPECT_THROW(brute_force_cluster(random_unit_matrix(kBruteForceLimit + 1, 2, 1), {}), std::invalid_argument);
}

TEST(TwoPhase, MergesDuplicatesAcrossHalves) {
    // u0 and u3 are the same text but land in different halves.
    const auto m = from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
    const auto c = two_phase_cluster(m, {});
    expect_partition(c, m);
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c[0].member_ids, (std::vector<std::string>{"u000000", "u000003"}));
}

TEST(TwoPhase, RecoversPlantedGroups) {
    const auto planted = planted_partition(5, 40, 32, 7);
    ClusterParams p;
    p.threshold = 0.8;
    auto c = two_phase_cluster(planted.vectors, p);
    ASSERT_EQ(c.size(), 5u);
    std::set<std::vector<std::string>> got, want(planted.groups.begin(), planted.groups.end());
    for (const auto& x : c) got.insert(x.member_ids);
    EXPECT_EQ(got, want);
}

TEST(LengthGuard, SplitsAtLimit) {
    std::vector<Utterance> u;
    u.push_back(make_utterance("one two three", Role::Speaker, "a"));
    u.push_back(make_utterance("one two three four", Role::Speaker, "b"));
    const auto r = apply_length_guard(u, 3);
    ASSERT_EQ(r.kept.size(), 1u);
    EXPECT_EQ(r.kept[0].source_id, "a");
    EXPECT_EQ(r.dropped.size(), 1u);
}

TEST(ClusterFile, RoundTrip) {
    const auto c = fast_community_detect(clustered_matrix(30, 8, 3, 0.3, 2), {});
    std::stringstream buf;
    write_clusters(buf, c);
    const auto back = read_clusters(buf);
    ASSERT_EQ(back.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_EQ(back[i].id, c[i].id);
        EXPECT_EQ(back[i].member_ids, c[i].member_ids);
        EXPECT_EQ(back[i].representative_id, c[i].representative_id);
    }
    std::istringstream bad("{\"id\":\"x\"}\n");
    EXPECT_THROW(read_clusters(bad), LoadError);
}
