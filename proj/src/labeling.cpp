#include "afec/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "afec/errors.hpp"
#include "afec/parallel.hpp"
#include "afec/subprocess.hpp"
#include "afec/text.hpp"

namespace afec {

extern const char* const kBundledLexicon;  // generated from data/lexicon.tsv

namespace {

std::vector<std::string> lower_tokens(std::string_view text) {
    auto tokens = tokenize(text);
    for (auto& t : tokens) t = to_lower(t);
    return tokens;
}

}  // namespace

WeightedInput build_weighted_input(std::string_view primary, std::optional<std::string_view> context, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("decay factor must lie in (0, 1)");
    WeightedInput in;
    in.tokens = lower_tokens(primary);
    if (in.tokens.empty()) throw std::invalid_argument("cannot classify empty text");
    in.primary_count = in.tokens.size();
    in.weights.assign(in.tokens.size(), 1.0);
    if (context) {
        double w = 1.0;
        for (auto& t : lower_tokens(*context)) {
            w *= gamma;
            if (w <= 0.0) break;  // underflow; weights must stay positive
            in.tokens.push_back(std::move(t));
            in.weights.push_back(w);
        }
    }
    return in;
}

LexiconClassifier LexiconClassifier::parse(std::istream& in, std::string version) {
    LexiconClassifier lex;
    lex.version_ = std::move(version);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        std::string field;
        std::getline(fields, field, '\t');
        auto label = parse_label(trim(field));
        if (!label) throw std::invalid_argument("lexicon line " + std::to_string(line_no) + ": unknown label " + field);
        while (std::getline(fields, field, '\t')) {
            field = trim(field);
            if (field.empty()) continue;
            Keyword kw;
            auto colon = field.rfind(':');
            if (colon != std::string::npos && colon + 1 < field.size()) {
                try {
                    std::size_t used = 0;
                    kw.weight = std::stod(field.substr(colon + 1), &used);
                    if (used != field.size() - colon - 1) throw std::invalid_argument("trailing characters");
                } catch (const std::exception&) {
                    throw std::invalid_argument("lexicon line " + std::to_string(line_no) + ": bad weight in " + field);
                }
                if (!(kw.weight > 0.0)) throw std::invalid_argument("lexicon weights must be positive: " + field);
                field.resize(colon);
            }
            kw.tokens = lower_tokens(field);
            if (kw.tokens.empty()) continue;
            lex.keywords_[label_index(*label)].push_back(std::move(kw));
        }
    }
    return lex;
}

const LexiconClassifier& LexiconClassifier::bundled() {
    static const LexiconClassifier lex = [] {
        std::istringstream in(kBundledLexicon);
        return parse(in, "1");
    }();
    return lex;
}

LexiconClassifier LexiconClassifier::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open lexicon: " + path.string());
    // The version tracks the file contents so relabeling after an edit is visible in the manifest.
    std::stringstream buf;
    buf << in.rdbuf();
    char ver[32];
    std::snprintf(ver, sizeof ver, "%016llx", static_cast<unsigned long long>(fnv1a64(buf.str())));
    buf.seekg(0);
    return parse(buf, ver);
}

std::array<double, kLabelCount> LexiconClassifier::scores(const WeightedInput& input) const {
    std::array<double, kLabelCount> out{};
    const auto& toks = input.tokens;
    for (std::size_t l = 0; l < kLabelCount; ++l) {
        for (const auto& kw : keywords_[l]) {
            const std::size_t k = kw.tokens.size();
            for (std::size_t i = 0; i + k <= toks.size(); ++i) {
                if (std::equal(kw.tokens.begin(), kw.tokens.end(), toks.begin() + static_cast<std::ptrdiff_t>(i)))
                    out[l] += kw.weight * input.weights[i];
            }
        }
    }
    return out;
}

Label LexiconClassifier::classify(const WeightedInput& input) const {
    if (input.tokens.size() != input.weights.size() || input.primary_count == 0 ||
        input.primary_count > input.tokens.size())
        throw std::invalid_argument("malformed weighted input");
    auto s = scores(input);
    std::size_t best = 0;
    for (std::size_t l = 1; l < kLabelCount; ++l)
        if (s[l] > s[best]) best = l;
    if (s[best] > 0.0) return static_cast<Label>(best);
    const auto& last = input.tokens[input.primary_count - 1];
    return !last.empty() && last.back() == '?' ? Label::Questioning : Label::Neutral;
}

std::size_t LexiconClassifier::max_concurrency() const { return default_workers(); }

ExternalClassifier::ExternalClassifier(std::string command)
    : command_(std::move(command)), process_(std::make_unique<LineProcess>(command_)) {}

ExternalClassifier::~ExternalClassifier() = default;

Label ExternalClassifier::classify(const WeightedInput& input) const {
    const std::string request = nlohmann::json{{"tokens", input.tokens}, {"weights", input.weights}}.dump(
        -1, ' ', false, nlohmann::json::error_handler_t::replace);
    std::string reply;
    {
        std::lock_guard lock(mutex_);
        try {
            reply = process_->request(request);
        } catch (const std::exception& e) {
            throw ClassificationError(std::string("external classifier failed: ") + e.what());
        }
    }
    auto label = parse_label(to_lower(trim(reply)));
    if (!label) throw ClassificationError("external classifier answered with unknown label: " + reply);
    return *label;
}

std::unique_ptr<EmotionClassifier> make_classifier(std::string_view spec) {
    if (spec == "baseline" || spec == "lexicon") return std::make_unique<LexiconClassifier>(LexiconClassifier::bundled());
    constexpr std::string_view lexicon = "lexicon:";
    if (spec.starts_with(lexicon) && spec.size() > lexicon.size())
        return std::make_unique<LexiconClassifier>(LexiconClassifier::from_file(std::string(spec.substr(lexicon.size()))));
    constexpr std::string_view external = "external:";
    if (spec.starts_with(external) && spec.size() > external.size())
        return std::make_unique<ExternalClassifier>(std::string(spec.substr(external.size())));
    throw std::invalid_argument("unknown classifier: " + std::string(spec));
}

void label_graph(KnowledgeGraph& graph, const EmotionClassifier& classifier, const LabelOptions& options) {
    const std::size_t workers =
        std::max<std::size_t>(1, std::min(options.workers ? options.workers : default_workers(),
                                          classifier.max_concurrency()));
    const auto& speakers = graph.speakers();
    const auto& listeners = graph.listeners();

    std::vector<Label> speaker_labels(speakers.size());
    parallel_blocks(speakers.size(), workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            try {
                speaker_labels[i] =
                    classifier.classify(build_weighted_input(speakers[i].representative, std::nullopt, options.gamma));
            } catch (const std::exception& ex) {
                throw ClassificationError("speaker node " + speakers[i].id.value + ": " + ex.what());
            }
        }
    });

    std::vector<Label> listener_labels(listeners.size());
    parallel_blocks(listeners.size(), workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const Edge* best = nullptr;
            for (const Edge* edge : graph.in_edges(listeners[i].id))  // ascending speaker id
                if (!best || edge->support > best->support) best = edge;
            std::optional<std::string_view> context;
            if (best) context = graph.speaker(best->speaker).representative;
            try {
                listener_labels[i] =
                    classifier.classify(build_weighted_input(listeners[i].representative, context, options.gamma));
            } catch (const std::exception& ex) {
                throw ClassificationError("listener node " + listeners[i].id.value + ": " + ex.what());
            }
        }
    });

    for (std::size_t i = 0; i < speaker_labels.size(); ++i) graph.set_speaker_label(i, speaker_labels[i]);
    for (std::size_t i = 0; i < listener_labels.size(); ++i) graph.set_listener_label(i, listener_labels[i]);
    graph.manifest().labeler = classifier.describe();
}

LabelDistribution label_distribution(const KnowledgeGraph& graph, Role side) {
    LabelDistribution dist;
    dist.side = side;
    auto count = [&](const auto& nodes) {
        for (const auto& n : nodes) {
            if (!n.label) throw StateError("node " + n.id.value + " is unlabeled");
            ++dist.counts[label_index(*n.label)];
            ++dist.total;
        }
    };
    if (side == Role::Speaker)
        count(graph.speakers());
    else
        count(graph.listeners());
    if (dist.total > 0)
        for (std::size_t l = 0; l < kLabelCount; ++l)
            dist.fractions[l] = static_cast<double>(dist.counts[l]) / static_cast<double>(dist.total);
    return dist;
}

std::string format_distribution(const LabelDistribution& dist) {
    std::ostringstream out;
    out << "# " << role_name(dist.side) << " nodes: " << dist.total << (dist.empty() ? " (empty)" : "") << '\n';
    for (Label l : all_labels()) {
        char frac[32];
        std::snprintf(frac, sizeof frac, "%.6f", dist.fractions[label_index(l)]);
        out << label_name(l) << '\t' << (label_class(l) == LabelClass::Emotion ? "emotion" : "intent") << '\t'
            << dist.counts[label_index(l)] << '\t' << frac << '\n';
    }
    return out.str();
}

}  // namespace afec
