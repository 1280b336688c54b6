#include "afec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "afec/parallel.hpp"
#include "afec/rng.hpp"
#include "afec/text.hpp"

namespace afec {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const TokenList& tokens, std::size_t n) {
    NgramCounts out;
    if (tokens.size() < n) return out;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i)
        ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    return out;
}

std::size_t overlap(const NgramCounts& hyp, const NgramCounts& ref) {
    std::size_t m = 0;
    for (const auto& [g, c] : hyp) {
        auto it = ref.find(g);
        if (it != ref.end()) m += std::min(c, it->second);
    }
    return m;
}

void require_references(const std::vector<TokenList>& references) {
    if (references.empty()) throw std::invalid_argument("at least one reference is required");
}

template <class F>
double average(const std::vector<TokenList>& references, F&& score) {
    double sum = 0.0;
    for (const auto& r : references) sum += score(r);
    return sum / static_cast<double>(references.size());
}

double bleu_single(const TokenList& hyp, const TokenList& ref, int max_n) {
    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        const std::size_t total = hyp.size() >= static_cast<std::size_t>(n) ? hyp.size() - n + 1 : 0;
        const std::size_t m = overlap(ngrams(hyp, n), ngrams(ref, n));
        const double p = m > 0 ? static_cast<double>(m) / static_cast<double>(total) : kBleuEpsilon;
        log_sum += std::log(p);
    }
    const double c = static_cast<double>(hyp.size());
    const double r = static_cast<double>(ref.size());
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_sum / max_n);
}

double rouge2_single(const TokenList& hyp, const TokenList& ref) {
    const auto h = ngrams(hyp, 2);
    const auto r = ngrams(ref, 2);
    const std::size_t m = overlap(h, r);
    if (m == 0) return 0.0;
    const double p = static_cast<double>(m) / static_cast<double>(hyp.size() - 1);
    const double rc = static_cast<double>(m) / static_cast<double>(ref.size() - 1);
    return 2.0 * p * rc / (p + rc);
}

// Depth-first search over hypothesis positions. Each position either takes an
// unused reference slot holding the same word or stays unaligned, and only
// as many positions of a word may stay unaligned as keeps the match count
// maximal. Branches that cannot beat the best chunk count are cut.
class ChunkSearch {
public:
    ChunkSearch(const TokenList& hyp, const TokenList& ref) : hyp_(hyp) {
        std::unordered_map<std::string, std::size_t> ref_count;
        for (std::size_t j = 0; j < ref.size(); ++j) {
            slots_[ref[j]].push_back(j);
            ++ref_count[ref[j]];
        }
        std::unordered_map<std::string, std::size_t> hyp_count;
        for (const auto& w : hyp) ++hyp_count[w];
        for (const auto& [w, c] : hyp_count) {
            auto it = ref_count.find(w);
            const std::size_t r = it == ref_count.end() ? 0 : it->second;
            matches_ += std::min(c, r);
            skips_[w] = c - std::min(c, r);
        }
        used_.assign(ref.size(), 0);
    }

    Alignment run() {
        if (matches_ == 0) return {0, 0};
        best_ = matches_ + 1;
        dfs(0, kNone, 0);
        return {matches_, best_};
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    // Enough for any realistic sentence pair; past it the best alignment found so far stands.
    static constexpr std::size_t kNodeBudget = 2'000'000;

    void dfs(std::size_t i, std::size_t prev, std::size_t chunks) {
        if (chunks >= best_ || ++nodes_ > kNodeBudget) return;
        if (i == hyp_.size()) {
            best_ = chunks;
            return;
        }
        const std::string& w = hyp_[i];
        auto it = slots_.find(w);
        if (it != slots_.end()) {
            // Continuing the current chunk first finds good bounds early.
            if (prev != kNone && prev + 1 < used_.size() && !used_[prev + 1] &&
                std::binary_search(it->second.begin(), it->second.end(), prev + 1)) {
                used_[prev + 1] = 1;
                dfs(i + 1, prev + 1, chunks);
                used_[prev + 1] = 0;
            }
            for (std::size_t j : it->second) {
                if (used_[j] || (prev != kNone && j == prev + 1)) continue;
                used_[j] = 1;
                dfs(i + 1, j, chunks + 1);
                used_[j] = 0;
            }
        }
        auto& skip = skips_[w];
        if (skip > 0) {
            --skip;
            dfs(i + 1, kNone, chunks);
            ++skip;
        }
    }

    const TokenList& hyp_;
    std::unordered_map<std::string, std::vector<std::size_t>> slots_;
    std::unordered_map<std::string, std::size_t> skips_;
    std::vector<char> used_;
    std::size_t matches_ = 0;
    std::size_t best_ = 0;
    std::size_t nodes_ = 0;
};

double meteor_single(const TokenList& hyp, const TokenList& ref) {
    const Alignment a = align(hyp, ref);
    if (a.matches == 0) return 0.0;
    const double m = static_cast<double>(a.matches);
    const double p = m / static_cast<double>(hyp.size());
    const double r = m / static_cast<double>(ref.size());
    const double fmean = 10.0 * p * r / (r + 9.0 * p);
    const double frag = static_cast<double>(a.chunks) / m;
    const double penalty = 0.5 * frag * frag * frag;
    return fmean * (1.0 - penalty);
}

std::vector<TokenList> tokens_of(const std::vector<std::string>& texts) {
    std::vector<TokenList> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(metric_tokens(t));
    return out;
}

}  // namespace

TokenList metric_tokens(std::string_view text) {
    auto tokens = tokenize(text);
    for (auto& t : tokens) t = to_lower(t);
    return tokens;
}

Alignment align(const TokenList& hypothesis, const TokenList& reference) {
    return ChunkSearch(hypothesis, reference).run();
}

double bleu(const TokenList& hypothesis, const std::vector<TokenList>& references, int max_n, bool* flagged) {
    if (max_n < 1) throw std::invalid_argument("BLEU order must be positive");
    require_references(references);
    if (flagged) *flagged = false;
    if (hypothesis.empty()) {
        if (flagged) *flagged = true;
        return 0.0;
    }
    return average(references, [&](const TokenList& r) { return r.empty() ? 0.0 : bleu_single(hypothesis, r, max_n); });
}

double rouge2_f1(const TokenList& hypothesis, const std::vector<TokenList>& references, bool* flagged) {
    require_references(references);
    bool short_pair = false;
    const double v = average(references, [&](const TokenList& r) {
        if (hypothesis.size() < 2 || r.size() < 2) {
            short_pair = true;
            return 0.0;
        }
        return rouge2_single(hypothesis, r);
    });
    if (flagged) *flagged = short_pair;
    return v;
}

double meteor(const TokenList& hypothesis, const std::vector<TokenList>& references, bool* flagged) {
    require_references(references);
    if (flagged) *flagged = hypothesis.empty();
    if (hypothesis.empty()) return 0.0;
    return average(references, [&](const TokenList& r) { return r.empty() ? 0.0 : meteor_single(hypothesis, r); });
}

double distinct_n(const std::vector<TokenList>& hypotheses, int n) {
    if (n < 1) throw std::invalid_argument("distinct-n order must be positive");
    std::set<std::vector<std::string>> unique;
    std::size_t total = 0;
    for (const auto& h : hypotheses) {
        if (h.size() < static_cast<std::size_t>(n)) continue;
        for (std::size_t i = 0; i + n <= h.size(); ++i) {
            unique.emplace(h.begin() + static_cast<std::ptrdiff_t>(i), h.begin() + static_cast<std::ptrdiff_t>(i + n));
            ++total;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(unique.size()) / static_cast<double>(total);
}

double bleu(std::string_view hypothesis, const std::vector<std::string>& references, int max_n) {
    return bleu(metric_tokens(hypothesis), tokens_of(references), max_n);
}

double rouge2_f1(std::string_view hypothesis, const std::vector<std::string>& references) {
    return rouge2_f1(metric_tokens(hypothesis), tokens_of(references));
}

double meteor(std::string_view hypothesis, const std::vector<std::string>& references) {
    return meteor(metric_tokens(hypothesis), tokens_of(references));
}

double distinct_n(const std::vector<std::string>& hypotheses, int n) { return distinct_n(tokens_of(hypotheses), n); }

MetricReport evaluate(const std::vector<std::string>& replies, const std::vector<EvalItem>& items,
                      std::size_t workers) {
    if (replies.size() != items.size())
        throw std::invalid_argument("got " + std::to_string(replies.size()) + " replies for " +
                                    std::to_string(items.size()) + " items");
    if (items.empty()) throw std::invalid_argument("nothing to evaluate");
    for (const auto& item : items)
        if (item.references.empty()) throw std::invalid_argument("item " + item.speaker_id + " has no references");

    struct Row {
        double b2, b4, r2, m;
        bool flagged;
    };
    std::vector<Row> rows(items.size());
    std::vector<TokenList> hyps(items.size());
    parallel_blocks(items.size(), workers ? workers : default_workers(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            hyps[i] = metric_tokens(replies[i]);
            const auto refs = tokens_of(items[i].references);
            bool f1 = false, f2 = false, f3 = false;
            rows[i] = {bleu(hyps[i], refs, 2, &f1), bleu(hyps[i], refs, 4), rouge2_f1(hyps[i], refs, &f2),
                       meteor(hyps[i], refs, &f3), f1 || f2 || f3};
        }
    });

    MetricReport report;
    report.items = items.size();
    for (const auto& r : rows) {
        report.bleu2 += r.b2;
        report.bleu4 += r.b4;
        report.rouge2 += r.r2;
        report.meteor += r.m;
        report.flagged += r.flagged ? 1 : 0;
    }
    const double n = static_cast<double>(items.size());
    report.bleu2 /= n;
    report.bleu4 /= n;
    report.rouge2 /= n;
    report.meteor /= n;
    report.dist1 = distinct_n(hyps, 1);
    report.dist2 = distinct_n(hyps, 2);
    report.dist3 = distinct_n(hyps, 3);
    return report;
}

std::string format_report(const MetricReport& r) {
    std::ostringstream out;
    auto line = [&](const char* key, double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s\t%.6f\n", key, v);
        out << buf;
    };
    line("BLEU-2", r.bleu2);
    line("BLEU-4", r.bleu4);
    line("ROUGE-2", r.rouge2);
    line("METEOR", r.meteor);
    line("Dist-1", r.dist1);
    line("Dist-2", r.dist2);
    line("Dist-3", r.dist3);
    out << "items\t" << r.items << '\n' << "flagged\t" << r.flagged << '\n';
    return out.str();
}

SplitSpec parse_split_spec(std::string_view text) {
    SplitSpec spec;
    std::string s(text);
    std::istringstream in(s);
    std::string field;
    while (std::getline(in, field, ',')) {
        field = trim(field);
        if (field.empty()) continue;
        auto eq = field.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("split spec field needs key=value: " + field);
        const std::string key = trim(field.substr(0, eq));
        const std::string value = trim(field.substr(eq + 1));
        if (key == "fraction") {
            std::size_t used = 0;
            try {
                spec.fraction = std::stod(value, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != value.size()) throw std::invalid_argument("bad split fraction: " + value);
        } else if (key == "seed") {
            std::size_t used = 0;
            try {
                spec.seed = std::stoull(value, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != value.size()) throw std::invalid_argument("bad split seed: " + value);
        } else if (key == "reserved") {
            std::istringstream tags(value);
            std::string tag;
            while (std::getline(tags, tag, '|'))
                if (!trim(tag).empty()) spec.reserved_origins.insert(trim(tag));
        } else {
            throw std::invalid_argument("unknown split spec key: " + key);
        }
    }
    return spec;
}

Split make_split(const KnowledgeGraph& graph, const SplitSpec& spec) {
    if (!(spec.fraction > 0.0 && spec.fraction < 1.0)) throw std::invalid_argument("split fraction must lie in (0, 1)");
    Split split;
    std::vector<SpeakerId> rest;
    for (const auto& s : graph.speakers()) {
        const bool reserved = std::any_of(s.utterances.begin(), s.utterances.end(),
                                          [&](const Utterance& u) { return spec.reserved_origins.count(u.origin) > 0; });
        (reserved ? split.test : rest).push_back(s.id);
    }
    if (!rest.empty()) {
        const auto want = static_cast<std::size_t>(std::floor(spec.fraction * static_cast<double>(rest.size()) + 0.5));
        const std::size_t k = std::min(rest.size(), std::max<std::size_t>(1, want));
        // Partial Fisher-Yates: the first k slots end up a uniform sample.
        Rng rng(spec.seed);
        for (std::size_t i = 0; i < k; ++i) std::swap(rest[i], rest[i + rng.uniform_index(rest.size() - i)]);
        split.test.insert(split.test.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(k));
        split.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(k), rest.end());
    }
    std::sort(split.test.begin(), split.test.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

std::vector<EvalItem> test_items(const KnowledgeGraph& graph, const Split& split) {
    std::vector<EvalItem> items;
    for (const auto& id : split.test) {
        EvalItem item;
        item.speaker_id = id.value;
        item.speaker_text = graph.speaker(id).representative;
        for (const auto* l : graph.neighbors(id)) item.references.push_back(l->representative);
        if (!item.references.empty()) items.push_back(std::move(item));
    }
    return items;
}

}  // namespace afec
