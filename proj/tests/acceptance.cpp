// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "afec/clustering.hpp"
#include "afec/metrics.hpp"
#include "afec/pipeline.hpp"
#include "afec/retrieval.hpp"
#include "afec/taxonomy.hpp"
#include "support.hpp"

using namespace afec;
using namespace afec::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string unescape(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out.push_back(s[i]);
            continue;
        }
        switch (s[++i]) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            default: out.push_back(s[i]);
        }
    }
    return out;
}

// --- preprocessing ----------------------------------------------------------

Outcome preprocessing() {
    std::ifstream in(data_path("preprocess_cases.tsv"));
    std::vector<std::array<std::string, 4>> cases;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        std::array<std::string, 4> f;
        std::size_t pos = 0;
        for (int k = 0; k < 4; ++k) {
            const std::size_t tab = k == 3 ? std::string::npos : line.find('\t', pos);
            f[k] = line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos);
            pos = tab + 1;
        }
        cases.push_back(f);
    }
    const auto t0 = Clock::now();
    std::size_t ok = 0;
    std::set<int> rules;
    std::string first_bad;
    for (const auto& c : cases) {
        const auto got = clean(unescape(c[2]));
        const std::string shown = std::holds_alternative<std::string>(got)
                                      ? "=" + std::get<std::string>(got)
                                      : "!" + std::string(reject_reason_name(std::get<RejectReason>(got)));
        if (shown == c[3]) {
            ++ok;
            rules.insert(std::stoi(c[0]));
        } else if (first_bad.empty()) {
            first_bad = "; first mismatch '" + c[2] + "' -> " + shown + " (want " + c[3] + ")";
        }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = cases.size() == 60 && ok == 60 && rules.size() == 9 && secs < 1.0;
    o.detail = std::to_string(ok) + "/" + std::to_string(cases.size()) + " cases, rules covered " +
               std::to_string(rules.size()) + "/9, " + fmt("%.3f", secs) + " s (limit 1 s)" + first_bad;
    return o;
}

// --- clustering -------------------------------------------------------------

std::string serialized(const std::vector<Cluster>& clusters) {
    std::ostringstream out;
    write_clusters(out, clusters);
    return out.str();
}

Outcome clustering() {
    const auto t0 = Clock::now();
    Rng rng(20240611);
    std::size_t same = 0, multi = 0;
    constexpr std::size_t kInputs = 200;
    for (std::size_t t = 0; t < kInputs; ++t) {
        const std::size_t dim = t % 2 == 0 ? 32 : 768;
        const std::size_t n = 1 + rng.uniform_index(1000);
        VectorMatrix m = t % 10 == 9 ? random_unit_matrix(n, dim, rng.next())
                                     : clustered_matrix(n, dim, 1 + rng.uniform_index(40),
                                                        0.2 + 1.6 * rng.uniform_real(), rng.next());
        ClusterParams p;
        p.threshold = 0.55 + 0.4 * rng.uniform_real();
        p.min_community_size = 1 + rng.uniform_index(3);
        p.seed = t;
        const auto fast = fast_community_detect(m, p);
        const auto brute = brute_force_cluster(m, p);
        if (fast == brute && serialized(fast) == serialized(brute)) ++same;
        if (std::any_of(fast.begin(), fast.end(), [](const Cluster& c) { return c.member_ids.size() > 1; })) ++multi;
    }

    // Planted partition for the two-phase routine.
    const Planted planted = planted_partition(5, 40, 64, 99);
    ClusterParams p;
    p.threshold = kListenerThreshold;
    const auto clusters = two_phase_cluster(planted.vectors, p);
    std::size_t recovered = 0;
    for (const auto& g : planted.groups)
        for (const auto& c : clusters)
            if (c.member_ids == g) ++recovered;
    double intra = 1.0, inter = -1.0;
    std::map<std::string, std::size_t> group_of;
    for (std::size_t g = 0; g < planted.groups.size(); ++g)
        for (const auto& id : planted.groups[g]) group_of[id] = g;
    for (std::size_t i = 0; i < planted.vectors.size(); ++i)
        for (std::size_t j = i + 1; j < planted.vectors.size(); ++j) {
            const double c = cosine(planted.vectors.row(i), planted.vectors.row(j));
            if (group_of[planted.vectors.id(i)] == group_of[planted.vectors.id(j)]) intra = std::min(intra, c);
            else inter = std::max(inter, c);
        }

    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = same == kInputs && recovered == 5 && clusters.size() == 5 && intra >= 0.95 && inter <= 0.3 &&
             secs < 120.0;
    o.detail = "fast==brute " + std::to_string(same) + "/" + std::to_string(kInputs) + " (" + std::to_string(multi) +
               " with merged clusters), two-phase planted " + std::to_string(recovered) + "/5 in " +
               std::to_string(clusters.size()) + " clusters (intra min " + fmt("%.3f", intra) + ", inter max " +
               fmt("%.3f", inter) + "), " + fmt("%.1f", secs) + " s (limit 120 s)";
    return o;
}

// --- metrics ----------------------------------------------------------------

Outcome metric_goldens() {
    Outcome o;
    std::ostringstream d;
    auto check = [&](const char* what, double got, double want, double tol) {
        const bool ok = std::abs(got - want) <= tol;
        if (!ok) {
            o.pass = false;
            d << what << "=" << fmt("%.9f", got) << " want " << fmt("%.9f", want) << "; ";
        }
    };
    check("BLEU-2", bleu("a b c", {"a b d"}, 2), 0.57735, 1e-5);
    check("ROUGE-2", rouge2_f1("a b c", {"a b d"}), 0.5, 0.0);
    check("METEOR", meteor("a b c", {"a b c"}), 0.98148, 1e-5);
    check("Dist-1", distinct_n(std::vector<std::string>{"a b", "a b"}, 1), 0.5, 0.0);

    const auto golden = nlohmann::json::parse(slurp(data_path("metrics_golden.json")));
    std::size_t ok = 0;
    double worst = 0.0;
    for (const auto& c : golden) {
        const std::string metric = c.at("metric");
        const int n = c.at("n");
        double got = 0.0;
        if (metric == "distinct") {
            got = distinct_n(c.at("hypotheses").get<std::vector<std::string>>(), n);
        } else {
            const std::string h = c.at("hypothesis");
            const auto refs = c.at("references").get<std::vector<std::string>>();
            got = metric == "bleu" ? bleu(h, refs, n) : metric == "rouge2" ? rouge2_f1(h, refs) : meteor(h, refs);
        }
        const double err = std::abs(got - c.at("value").get<double>());
        worst = std::max(worst, err);
        if (err <= 1e-9) ++ok;
        else d << "case " << c.at("case").get<int>() << " off by " << err << "; ";
    }
    o.pass = o.pass && golden.size() == 20 && ok == 20;
    o.detail = "anchors BLEU-2/METEOR within 1e-5, ROUGE-2/Dist-1 exact; golden " + std::to_string(ok) + "/" +
               std::to_string(golden.size()) + " within 1e-9 (worst " + fmt("%.2e", worst) + ")" +
               (d.str().empty() ? "" : "; " + d.str());
    return o;
}

// --- strategies -------------------------------------------------------------

Outcome strategies() {
    Rng rng(4242);
    std::size_t checks = 0, bad = 0, fixtures = 0;
    std::size_t follow_hits = 0, intent_hits = 0;
    for (; fixtures < 1000; ++fixtures) {
        const KnowledgeGraph g = random_graph(rng);
        for (const auto& s : g.speakers()) {
            const auto nb = g.neighbors(s.id);
            const Label input = random_label(rng);
            const std::uint64_t seed = rng.next();

            std::size_t best = 0;
            for (const auto* n : nb) best = std::max(best, g.in_degree(n->id));
            const Reply hd = select_reply(g, s.id, Strategy::HighestDegree, input, seed);
            bad += g.in_degree(hd.listener) != best;

            const bool mate = std::any_of(nb.begin(), nb.end(), [&](auto* n) { return is_similar(*n->label, input); });
            const Reply fe = select_reply(g, s.id, Strategy::FollowEmotion, input, seed);
            if (mate) {
                ++follow_hits;
                bad += !is_similar(*g.listener(fe.listener).label, input);
            }

            const bool intent = std::any_of(nb.begin(), nb.end(), [](auto* n) { return is_empathetic_intent(*n->label); });
            const Reply ei = select_reply(g, s.id, Strategy::EmpatheticIntent, input, seed);
            if (intent) {
                ++intent_hits;
                bad += !is_empathetic_intent(*g.listener(ei.listener).label);
            }
            checks += 3;
        }
    }

    // Random over a node with exactly two candidates.
    KnowledgeGraph two({speaker_node("S0", "post")},
                       {listener_node("L0", "first", Label::Caring), listener_node("L1", "second", Label::Joyful)},
                       {{SpeakerId("S0"), ListenerId("L0"), 1}, {SpeakerId("S0"), ListenerId("L1"), 5}});
    std::size_t first = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        first += select_reply(two, SpeakerId("S0"), Strategy::Random, std::nullopt, seed).listener.value == "L0";
    const double freq = first / 100.0;

    Outcome o;
    o.pass = bad == 0 && freq >= 0.35 && freq <= 0.65 && follow_hits > 0 && intent_hits > 0;
    o.detail = std::to_string(fixtures) + " fixtures, " + std::to_string(checks) + " checks, " + std::to_string(bad) +
               " violations (follow exercised " + std::to_string(follow_hits) + "x, intent " +
               std::to_string(intent_hits) + "x); random 2-candidate frequency " + fmt("%.2f", freq) +
               " over 100 seeds (band [0.35, 0.65])";
    return o;
}

// --- taxonomy ---------------------------------------------------------------

Outcome taxonomy() {
    static const std::array<const char*, 41> expected = {
        "prepared", "anticipating", "hopeful", "proud", "excited", "joyful", "content", "caring", "grateful",
        "trusting", "confident", "faithful", "impressed", "surprised", "terrified", "afraid", "apprehensive",
        "anxious", "embarrassed", "ashamed", "devastated", "sad", "disappointed", "lonely", "sentimental",
        "nostalgic", "guilty", "disgusted", "furious", "angry", "annoyed", "jealous", "agreeing", "acknowledging",
        "encouraging", "consoling", "sympathizing", "suggesting", "questioning", "wishing", "neutral"};
    std::set<std::string> want(expected.begin(), expected.end()), got;
    std::size_t emotions = 0;
    for (Label l : all_labels()) {
        got.insert(std::string(label_name(l)));
        emotions += label_class(l) == LabelClass::Emotion;
    }
    std::map<Label, int> seen;
    for (const auto& g : similarity_groups())
        for (Label l : g) ++seen[l];
    const bool partition = similarity_groups().size() == 20 && seen.size() == kLabelCount &&
                           std::all_of(seen.begin(), seen.end(), [](auto& kv) { return kv.second == 1; });
    const bool yes = is_similar(Label::Joyful, Label::Excited);
    const bool no = !is_similar(Label::Joyful, Label::Sad);
    Outcome o;
    o.pass = all_labels().size() == 41 && got == want && emotions == 32 && partition && yes && no;
    o.detail = std::to_string(all_labels().size()) + " labels (" + std::to_string(emotions) + " emotions), names " +
               (got == want ? "match" : "differ") + ", 20 groups " + (partition ? "partition" : "do not partition") +
               " the labels, is_similar(joyful, excited)=" + (yes ? "true" : "false") +
               ", is_similar(joyful, sad)=" + (no ? "false" : "true");
    return o;
}

// --- pipeline ---------------------------------------------------------------

std::string run_cli(const std::string& args, int* status) {
    const std::string cmd = std::string(AFEC_CLI) + " " + args + " 2>&1";
    std::string out;
    if (FILE* p = ::popen(cmd.c_str(), "r")) {
        std::array<char, 4096> buf;
        while (std::fgets(buf.data(), buf.size(), p)) out += buf.data();
        *status = ::pclose(p);
    } else {
        *status = -1;
    }
    return out;
}

std::string last_digest(const std::string& out) {
    const auto pos = out.rfind("digest ");
    return pos == std::string::npos ? "" : out.substr(pos + 7, 16);
}

std::map<std::string, std::string> dir_files(const std::filesystem::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) files[e.path().filename()] = slurp(e.path());
    return files;
}

Outcome pipeline_determinism() {
    TempDir tmp("accept-pipeline");
    const auto corpus = mini_corpus_dir();
    std::string ini = slurp(corpus / "pipeline.ini");
    auto replace = [&](const std::string& key, const std::string& value) {
        const auto pos = ini.find(key + " = ");
        const auto eol = ini.find('\n', pos);
        ini.replace(pos, eol - pos, key + " = " + value);
    };
    replace("submissions", (corpus / "submissions.jsonl").string());
    replace("comments", (corpus / "comments.jsonl").string());
    std::vector<std::string> digests;
    std::vector<std::map<std::string, std::string>> trees;
    int failures = 0;
    const auto t0 = Clock::now();
    for (int run = 0; run < 2; ++run) {
        const std::string root = (tmp / ("run" + std::to_string(run))).string();
        std::string cfg = ini;
        for (const auto& [key, sub] : {std::pair{"graph_dir", "/graph"}, std::pair{"work_dir", "/work"}}) {
            const auto pos = cfg.find(std::string(key) + " = ");
            cfg.replace(pos, cfg.find('\n', pos) - pos, std::string(key) + " = " + root + sub);
        }
        std::ofstream(tmp / "pipeline.ini") << cfg;
        int status = 0;
        const std::string out = run_cli("pipeline --config " + (tmp / "pipeline.ini").string() + " --digest", &status);
        if (status != 0) {
            ++failures;
            std::cerr << out;
            continue;
        }
        digests.push_back(last_digest(out));
        trees.push_back(dir_files(root + "/graph"));
    }
    const double secs = seconds_since(t0);

    Outcome o;
    if (failures || digests.size() != 2) {
        o.pass = false;
        o.detail = "pipeline run failed";
        return o;
    }
    std::string golden = slurp(data_path("mini_corpus.digest"));
    golden.erase(golden.find_last_not_of(" \n") + 1);

    // Reconciliation, from the manifest of the first run.
    const auto manifest = nlohmann::json::parse(trees[0].at("manifest.json"));
    std::size_t stages = 0, balanced = 0;
    for (const auto& s : manifest.at("stages")) {
        ++stages;
        balanced += s.at("input").get<std::size_t>() == s.at("rejected").get<std::size_t>() + s.at("output").get<std::size_t>();
    }
    const bool identical = trees[0] == trees[1];
    o.pass = identical && digests[0] == digests[1] && digests[0] == golden && stages > 0 && balanced == stages &&
             secs < 300.0;
    o.detail = std::string("two runs ") + (identical ? "byte-identical" : "DIFFER") + " (" +
               std::to_string(trees[0].size()) + " files), digest " + digests[0] + " vs committed " + golden +
               ", reconciliation " + std::to_string(balanced) + "/" + std::to_string(stages) + " stages, " +
               fmt("%.1f", secs) + " s for both runs (limit 300 s)";
    return o;
}

// --- split ------------------------------------------------------------------

Outcome split_contract() {
    std::vector<SpeakerNode> speakers;
    for (int i = 0; i < 105; ++i)
        speakers.push_back(speaker_node("S" + std::to_string(1000 + i), "post " + std::to_string(i), std::nullopt,
                                        i % 21 == 3 ? "heldout" : "main"));
    KnowledgeGraph g(std::move(speakers), {listener_node("L0", "reply")}, {{SpeakerId("S1000"), ListenerId("L0"), 1}});
    SplitSpec spec;
    spec.reserved_origins = {"heldout"};
    spec.fraction = 0.10;
    spec.seed = 31;
    const Split a = make_split(g, spec);
    const Split b = make_split(g, spec);
    spec.seed = 32;
    const Split c = make_split(g, spec);

    std::set<SpeakerId> test(a.test.begin(), a.test.end()), train(a.train.begin(), a.train.end());
    std::size_t overlap = 0;
    for (const auto& id : a.test) overlap += train.count(id);
    std::size_t reserved_in = 0;
    for (const auto& s : g.speakers())
        if (s.utterances[0].origin == "heldout") reserved_in += test.count(s.id);
    const bool stable = a.test == b.test && a.train == b.train;
    Outcome o;
    o.pass = a.test.size() == 15 && overlap == 0 && test.size() + train.size() == 105 && reserved_in == 5 && stable;
    o.detail = "test " + std::to_string(a.test.size()) + " (want 15, reserved included " + std::to_string(reserved_in) +
               "/5), train " + std::to_string(a.train.size()) + ", overlap " + std::to_string(overlap) + ", same seed " +
               (stable ? "identical" : "DIFFERENT") + ", other seed " + (c.test != a.test ? "differs" : "same");
    return o;
}

// --- retrieval --------------------------------------------------------------

RetrievalIndex synthetic_index(VectorMatrix vectors) {
    const std::size_t dim = vectors.dim();
    return make_index({"synthetic", "1", dim}, std::move(vectors));
}

// Plain long-double scan, written independently of the library kernel.
std::string oracle_nearest(const VectorMatrix& m, const std::vector<float>& q) {
    long double qq = 0;
    for (float x : q) qq += (long double)x * x;
    long double best = -2;
    std::string best_id;
    for (std::size_t i = 0; i < m.size(); ++i) {
        long double d = 0, vv = 0;
        const auto r = m.row(i);
        for (std::size_t k = 0; k < q.size(); ++k) {
            d += (long double)q[k] * r[k];
            vv += (long double)r[k] * r[k];
        }
        const long double sim = d / std::sqrt(qq * vv);
        if (sim > best) {
            best = sim;
            best_id = m.id(i);
        }
    }
    return best_id;
}

Outcome retrieval() {
    constexpr std::size_t kDim = 768;
    Rng rng(777);
    const RetrievalIndex small = synthetic_index(random_unit_matrix(10000, kDim, 1));
    std::size_t agree = 0;
    for (int q = 0; q < 1000; ++q) {
        // Half the queries sit near an indexed row, half are free.
        std::vector<float> v = gaussian(rng, kDim);
        if (q % 2 == 0) {
            const auto r = small.vectors.row(rng.uniform_index(small.size()));
            for (std::size_t k = 0; k < kDim; ++k) v[k] = r[k] + 0.05f * v[k] / 27.7f;
        }
        agree += nearest_speaker(small, EmbeddingVector(v), 1).id.value == oracle_nearest(small.vectors, v);
    }

    const RetrievalIndex big = synthetic_index(random_unit_matrix(134061, kDim, 2));
    std::vector<double> ms;
    for (int q = 0; q < 41; ++q) {
        const EmbeddingVector v(gaussian(rng, kDim));
        const auto t0 = Clock::now();
        volatile double sink = nearest_speaker(big, v).similarity;
        (void)sink;
        ms.push_back(seconds_since(t0) * 1000.0);
    }
    std::sort(ms.begin(), ms.end());
    const double p50 = ms[ms.size() / 2];
    Outcome o;
    o.pass = agree == 1000 && p50 < 50.0;
    o.detail = "oracle agreement " + std::to_string(agree) + "/1000 on 10000x768; P50 " + fmt("%.1f", p50) +
               " ms over 41 queries at 134061x768 (limit 50 ms)";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"preprocessing_conformance", preprocessing},
        {"clustering_oracle_equivalence", clustering},
        {"metric_golden_values", metric_goldens},
        {"strategy_invariants", strategies},
        {"taxonomy_integrity", taxonomy},
        {"pipeline_determinism", pipeline_determinism},
        {"split_contract", split_contract},
        {"retrieval_exactness", retrieval},
    };
    std::set<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && !only.count(name)) continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return failed;
}
