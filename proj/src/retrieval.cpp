#include "afec/retrieval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "afec/errors.hpp"
#include "afec/parallel.hpp"
#include "afec/rng.hpp"
#include "afec/text.hpp"

namespace afec {

namespace {

// Below this many rows a single thread wins over spawning workers.
constexpr std::size_t kParallelRows = 16384;

std::size_t scan_workers(std::size_t rows, std::size_t requested) {
    if (rows < kParallelRows) return 1;
    return requested ? requested : default_workers();
}

bool better(double sim, std::size_t row, double best_sim, std::size_t best_row) {
    // Rows are in ascending id order, so the lower row wins ties.
    return sim > best_sim || (sim == best_sim && row < best_row);
}

double similarity_at(const RetrievalIndex& index, std::span<const float> q, double qn, std::size_t row) {
    const double vn = index.norms[row];
    if (qn == 0.0 || vn == 0.0) return 0.0;
    return std::clamp(dot(q, index.vectors.row(row)) / (qn * vn), -1.0, 1.0);
}

void check_query(const RetrievalIndex& index, const EmbeddingVector& query) {
    if (index.size() == 0) throw IndexError("retrieval index is empty");
    if (query.dimension() != index.vectors.dim())
        throw std::invalid_argument("query dimension " + std::to_string(query.dimension()) + " differs from index " +
                                    std::to_string(index.vectors.dim()));
}

__attribute__((target_clones("avx512f", "avx2", "default")))
float code_dot(const std::int8_t* c, const float* y, std::size_t n) {
    constexpr std::size_t kLanes = 16;
    std::array<float, kLanes> acc{};
    const std::size_t full = n - n % kLanes;
    for (std::size_t i = 0; i < full; i += kLanes)
        for (std::size_t k = 0; k < kLanes; ++k) acc[k] += static_cast<float>(c[i + k]) * y[i + k];
    for (std::size_t i = full; i < n; ++i) acc[i - full] += static_cast<float>(c[i]) * y[i];
    float sum = 0.0f;
    for (float a : acc) sum += a;
    return sum;
}

// Similarity interval for every row from the int8 codes. With x = s*c + e,
// |e| <= s/2, the code dot misses the true dot by at most s*|y|_1/2 plus the
// float rounding of the code dot itself.
struct Bounds {
    std::vector<double> lo, hi;
};

Bounds code_bounds(const RetrievalIndex& index, std::span<const float> q, double qn, std::size_t workers) {
    const std::size_t n = index.size();
    const std::size_t dim = index.vectors.dim();
    double l1 = 0.0;
    for (float v : q) l1 += std::abs(static_cast<double>(v));
    const double rounding = static_cast<double>(dim + 32) * std::ldexp(1.0, -24) * 1.01;
    const double err_unit = l1 * (0.501 + 127.0 * rounding);
    Bounds b{std::vector<double>(n), std::vector<double>(n)};
    parallel_blocks(n, scan_workers(n, workers), [&](std::size_t r0, std::size_t r1) {
        for (std::size_t i = r0; i < r1; ++i) {
            const double vn = index.norms[i];
            if (vn == 0.0) {
                b.lo[i] = b.hi[i] = 0.0;
                continue;
            }
            const double s = index.scales[i];
            const double approx = s * code_dot(index.codes.data() + i * dim, q.data(), dim);
            const double err = s * err_unit;
            const double denom = qn * vn;
            b.lo[i] = (approx - err) / denom - 1e-9;
            b.hi[i] = (approx + err) / denom + 1e-9;
        }
    });
    return b;
}

bool prefilter(const RetrievalIndex& index, double qn) {
    return qn > 0.0 && index.codes.size() == index.size() * index.vectors.dim() && index.scales.size() == index.size();
}

}  // namespace

RetrievalIndex make_index(EncoderBinding encoder, VectorMatrix vectors) {
    RetrievalIndex index;
    index.encoder = std::move(encoder);
    const std::size_t n = vectors.size(), dim = vectors.dim();
    index.norms.resize(n);
    index.scales.resize(n);
    index.codes.resize(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = vectors.row(i);
        index.norms[i] = std::sqrt(dot(row, row));
        float peak = 0.0f;
        for (float v : row) peak = std::max(peak, std::abs(v));
        const float scale = peak > 0.0f ? peak / 127.0f : 1.0f;
        index.scales[i] = scale;
        for (std::size_t k = 0; k < dim; ++k)
            index.codes[i * dim + k] = static_cast<std::int8_t>(std::clamp(std::lround(row[k] / scale), -127L, 127L));
    }
    index.vectors = std::move(vectors);
    return index;
}

RetrievalIndex build_index(const KnowledgeGraph& graph, const Encoder& encoder,
                           const std::set<std::string>& exclude_ids) {
    require_binding(graph.manifest().encoder, encoder.binding());
    VectorMatrix vectors(encoder.dimension());

    std::vector<const SpeakerNode*> nodes;
    for (const auto& s : graph.speakers())
        if (!exclude_ids.count(s.id.value)) nodes.push_back(&s);
    if (nodes.empty()) throw IndexError("no speaker nodes to index");
    vectors.reserve(nodes.size());

    if (graph.has_vectors()) {
        for (const auto* s : nodes) {
            if (s->vector.dimension() != encoder.dimension())
                throw IndexError("speaker node " + s->id.value + " vector has dimension " +
                                 std::to_string(s->vector.dimension()));
            vectors.add(s->id.value, s->vector);
        }
    } else {
        std::vector<std::string> texts;
        texts.reserve(nodes.size());
        for (const auto* s : nodes) texts.push_back(s->representative);
        auto encoded = encoder.encode_batch(texts);
        for (std::size_t i = 0; i < nodes.size(); ++i) vectors.add(nodes[i]->id.value, encoded[i]);
    }
    return make_index(encoder.binding(), std::move(vectors));
}

SpeakerMatch nearest_speaker(const RetrievalIndex& index, const EmbeddingVector& query, std::size_t workers) {
    check_query(index, query);
    const auto q = query.values();
    const double qn = std::sqrt(dot(q, q));
    const std::size_t n = index.size();
    if (prefilter(index, qn)) {
        const auto b = code_bounds(index, q, qn, workers);
        const double floor = *std::max_element(b.lo.begin(), b.lo.end());
        double best_sim = -2.0;
        std::size_t best_row = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (b.hi[i] < floor) continue;
            const double sim = similarity_at(index, q, qn, i);
            if (better(sim, i, best_sim, best_row)) best_sim = sim, best_row = i;
        }
        return {SpeakerId(index.vectors.id(best_row)), best_sim};
    }
    const std::size_t w = scan_workers(n, workers);

    struct Best {
        double sim = -2.0;
        std::size_t row = 0;
    };
    std::vector<Best> partial(w);
    const std::size_t chunk = (n + w - 1) / w;
    parallel_blocks(w, w, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            Best best;
            const std::size_t end = std::min(n, (b + 1) * chunk);
            for (std::size_t i = b * chunk; i < end; ++i) {
                const double sim = similarity_at(index, q, qn, i);
                if (better(sim, i, best.sim, best.row)) best = {sim, i};
            }
            partial[b] = best;
        }
    });
    Best best = partial[0];
    for (std::size_t b = 1; b < w; ++b)
        if (b * chunk < n && better(partial[b].sim, partial[b].row, best.sim, best.row)) best = partial[b];
    return {SpeakerId(index.vectors.id(best.row)), best.sim};
}

SpeakerMatch nearest_speaker(const RetrievalIndex& index, const Encoder& encoder, std::string_view text,
                             std::size_t workers) {
    if (trim(text).empty()) throw std::invalid_argument("empty input utterance");
    require_binding(index.encoder, encoder.binding());
    return nearest_speaker(index, encoder.encode(text), workers);
}

std::vector<SpeakerMatch> search(const RetrievalIndex& index, const EmbeddingVector& query, std::size_t k,
                                 std::size_t workers) {
    check_query(index, query);
    if (k == 0) return {};
    const auto q = query.values();
    const double qn = std::sqrt(dot(q, q));
    const std::size_t n = index.size();
    const std::size_t take = std::min(k, n);
    std::vector<double> sims(n);
    std::vector<std::size_t> rows;
    if (prefilter(index, qn)) {
        // A row whose upper bound is below the take-th best lower bound has
        // `take` rows strictly above it.
        const auto b = code_bounds(index, q, qn, workers);
        std::vector<double> lo = b.lo;
        std::nth_element(lo.begin(), lo.begin() + static_cast<std::ptrdiff_t>(take - 1), lo.end(), std::greater<>());
        const double floor = lo[take - 1];
        for (std::size_t i = 0; i < n; ++i)
            if (b.hi[i] >= floor) {
                sims[i] = similarity_at(index, q, qn, i);
                rows.push_back(i);
            }
    } else {
        parallel_blocks(n, scan_workers(n, workers), [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) sims[i] = similarity_at(index, q, qn, i);
        });
        rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    }
    std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end(),
                      [&](std::size_t a, std::size_t b) { return better(sims[a], a, sims[b], b); });
    std::vector<SpeakerMatch> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back({SpeakerId(index.vectors.id(rows[i])), sims[rows[i]]});
    return out;
}

namespace {

constexpr std::array<Strategy, 4> kStrategies{Strategy::Random, Strategy::HighestDegree, Strategy::FollowEmotion,
                                              Strategy::EmpatheticIntent};

}  // namespace

std::span<const Strategy> all_strategies() { return kStrategies; }

std::string_view strategy_name(Strategy strategy) {
    switch (strategy) {
        case Strategy::Random: return "rand";
        case Strategy::HighestDegree: return "hd";
        case Strategy::FollowEmotion: return "follow";
        case Strategy::EmpatheticIntent: return "intent";
    }
    return "?";
}

Strategy parse_strategy(std::string_view name) {
    if (name == "rand" || name == "random") return Strategy::Random;
    if (name == "hd" || name == "highest_degree") return Strategy::HighestDegree;
    if (name == "follow" || name == "follow_emotion") return Strategy::FollowEmotion;
    if (name == "intent" || name == "empathetic_intent") return Strategy::EmpatheticIntent;
    throw std::invalid_argument("unknown strategy: " + std::string(name) + " (expected rand, hd, follow or intent)");
}

std::vector<const ListenerNode*> candidate_pool(const KnowledgeGraph& graph, const SpeakerId& speaker,
                                                Strategy strategy, std::optional<Label> input_label, bool* fallback) {
    auto neighbors = graph.neighbors(speaker);
    if (neighbors.empty()) throw NoReplyError("speaker node " + speaker.value + " has no listener nodes");
    std::vector<const ListenerNode*> pool;
    switch (strategy) {
        case Strategy::Random:
            pool = neighbors;
            break;
        case Strategy::HighestDegree: {
            std::size_t best = 0;
            for (const auto* n : neighbors) best = std::max(best, graph.in_degree(n->id));
            for (const auto* n : neighbors)
                if (graph.in_degree(n->id) == best) pool.push_back(n);
            break;
        }
        case Strategy::FollowEmotion:
            if (input_label)
                for (const auto* n : neighbors)
                    if (n->label && is_similar(*n->label, *input_label)) pool.push_back(n);
            break;
        case Strategy::EmpatheticIntent:
            for (const auto* n : neighbors)
                if (n->label && is_empathetic_intent(*n->label)) pool.push_back(n);
            break;
    }
    const bool fell_back = pool.empty();
    if (fell_back) pool = std::move(neighbors);
    if (fallback) *fallback = fell_back;
    return pool;
}

Reply select_reply(const KnowledgeGraph& graph, const SpeakerId& speaker, Strategy strategy,
                   std::optional<Label> input_label, std::uint64_t seed, const ReplyOptions& options) {
    bool fallback = false;
    auto pool = candidate_pool(graph, speaker, strategy, input_label, &fallback);
    Rng rng(seed);
    const ListenerNode* chosen = pool[rng.uniform_index(pool.size())];
    Reply reply;
    reply.text = options.sample_member ? chosen->utterances[rng.uniform_index(chosen->utterances.size())].text
                                       : chosen->representative;
    reply.listener = chosen->id;
    reply.speaker = speaker;
    reply.strategy = strategy;
    reply.reply_label = chosen->label;
    reply.input_label = input_label;
    reply.seed = seed;
    reply.candidates = pool.size();
    reply.fallback = fallback;
    return reply;
}

Reply chat(const RetrievalIndex& index, const KnowledgeGraph& graph, const Encoder& encoder,
           const EmotionClassifier* classifier, std::string_view input, Strategy strategy, std::uint64_t seed,
           const ChatConfig& config) {
    const SpeakerMatch match = nearest_speaker(index, encoder, input, config.workers);
    std::optional<Label> input_label;
    if (config.use_node_label) {
        input_label = graph.speaker(match.id).label;
    } else if (classifier) {
        input_label = classifier->classify(build_weighted_input(input, std::nullopt, config.gamma));
    } else if (strategy == Strategy::FollowEmotion) {
        throw std::invalid_argument("follow strategy needs a classifier or use_node_label");
    }
    Reply reply = select_reply(graph, match.id, strategy, input_label, seed, {config.sample_member});
    reply.similarity = match.similarity;
    return reply;
}

}  // namespace afec
