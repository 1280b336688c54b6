#include "afec/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "afec/errors.hpp"
#include "afec/labeling.hpp"
#include "afec/parallel.hpp"

using json = nlohmann::json;
namespace pt = boost::property_tree;

namespace afec {

ClusterMode parse_cluster_mode(std::string_view name) {
    if (name == "fast") return ClusterMode::Fast;
    if (name == "two_phase") return ClusterMode::TwoPhase;
    throw std::invalid_argument("unknown cluster mode: " + std::string(name) + " (expected fast or two_phase)");
}

std::string_view cluster_mode_name(ClusterMode mode) { return mode == ClusterMode::Fast ? "fast" : "two_phase"; }

namespace {

const std::map<std::string, std::set<std::string>> kConfigKeys{
    {"input", {"submissions", "comments", "from", "to", "strip_type_prefixes", "default_source"}},
    {"curate",
     {"min_alpha_ratio", "min_tokens", "url_patterns", "analyzer", "summarize_listeners", "listener_root_filter",
      "max_tokens"}},
    {"embed", {"encoder", "dimension"}},
    {"cluster", {"speaker_threshold", "listener_threshold", "speaker_mode", "listener_mode", "min_community_size"}},
    {"label", {"classifier", "gamma"}},
    {"output", {"graph_dir", "work_dir", "build_timestamp"}},
    {"run", {"seed", "workers"}},
};

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> get(const std::string& key) const {
        auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
        if (!v) return std::nullopt;
        return trim(*v);
    }

    void str(const std::string& key, std::string& out) const {
        if (auto v = get(key)) out = *v;
    }

    void path(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) const {
        if (auto v = get(key)) {
            std::filesystem::path p(*v);
            out = p.is_relative() && !base.empty() ? base / p : p;
        }
    }

    template <class T>
    void number(const std::string& key, T& out) const {
        auto v = get(key);
        if (!v) return;
        std::istringstream in(*v);
        T value{};
        in >> value;
        if (!in || !in.eof()) throw std::invalid_argument("config " + key + ": bad number '" + *v + "'");
        out = value;
    }

    void flag(const std::string& key, bool& out) const {
        auto v = get(key);
        if (!v) return;
        const std::string s = to_lower(*v);
        if (s == "true" || s == "yes" || s == "1" || s == "on")
            out = true;
        else if (s == "false" || s == "no" || s == "0" || s == "off")
            out = false;
        else
            throw std::invalid_argument("config " + key + ": expected a boolean, got '" + *v + "'");
    }

private:
    const pt::ptree& tree_;
};

}  // namespace

PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
        auto known = kConfigKeys.find(section);
        if (known == kConfigKeys.end()) throw std::invalid_argument("config: unknown section [" + section + "]");
        for (const auto& [key, value] : body)
            if (!known->second.count(key))
                throw std::invalid_argument("config: unknown key " + key + " in [" + section + "]");
    }

    PipelineConfig c;
    Reader r(tree);
    r.path("input.submissions", c.input.submissions, base);
    r.path("input.comments", c.input.comments, base);
    r.str("input.from", c.input.from);
    r.str("input.to", c.input.to);
    r.flag("input.strip_type_prefixes", c.input.strip_type_prefixes);
    r.str("input.default_source", c.input.default_source);

    r.number("curate.min_alpha_ratio", c.curate.validation.min_alpha_ratio);
    r.number("curate.min_tokens", c.curate.validation.min_tokens);
    if (auto v = r.get("curate.url_patterns")) {
        c.curate.validation.url_patterns.clear();
        std::istringstream parts(*v);
        std::string p;
        while (std::getline(parts, p, ','))
            if (!trim(p).empty()) c.curate.validation.url_patterns.push_back(trim(p));
    }
    r.str("curate.analyzer", c.curate.analyzer);
    r.flag("curate.summarize_listeners", c.curate.summarize_listeners);
    r.flag("curate.listener_root_filter", c.curate.listener_root_filter);
    r.number("curate.max_tokens", c.curate.max_tokens);

    r.str("embed.encoder", c.embed.encoder);
    r.number("embed.dimension", c.embed.dimension);

    r.number("cluster.speaker_threshold", c.cluster.speaker_threshold);
    r.number("cluster.listener_threshold", c.cluster.listener_threshold);
    if (auto v = r.get("cluster.speaker_mode")) c.cluster.speaker_mode = parse_cluster_mode(*v);
    if (auto v = r.get("cluster.listener_mode")) c.cluster.listener_mode = parse_cluster_mode(*v);
    r.number("cluster.min_community_size", c.cluster.min_community_size);

    r.str("label.classifier", c.label.classifier);
    r.number("label.gamma", c.label.gamma);

    r.path("output.graph_dir", c.output.graph_dir, base);
    r.path("output.work_dir", c.output.work_dir, base);
    if (r.get("output.build_timestamp")) {
        std::int64_t ts = 0;
        r.number("output.build_timestamp", ts);
        c.output.build_timestamp = ts;
    }

    r.number("run.seed", c.seed);
    r.number("run.workers", c.workers);
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path.string());
    return parse_config(in, path.parent_path());
}

IngestResult ingest(const InputConfig& config) {
    const IngestOptions options{config.strip_type_prefixes, config.default_source};
    LoadStats sub_stats, com_stats;
    auto submissions = load_submissions(config.submissions, &sub_stats, options);
    auto comments = load_comments(config.comments, &com_stats, options);

    const std::int64_t start = config.from.empty() ? INT64_MIN : parse_time_bound(config.from, false);
    const std::int64_t end = config.to.empty() ? INT64_MAX : parse_time_bound(config.to, true);
    submissions = filter_time_window(std::move(submissions), start, end);
    comments = filter_time_window(std::move(comments), start, end);

    PairStats pair_stats;
    auto pairs = pair_direct_replies(submissions, comments, &pair_stats);

    IngestResult result;
    result.threads = group_threads(submissions, pairs);
    const std::size_t sub_lines = sub_stats.records + sub_stats.malformed;
    result.stages.push_back({"ingest_submissions", sub_lines, sub_lines - submissions.size(), submissions.size()});
    const std::size_t com_lines = com_stats.records + com_stats.malformed;
    result.stages.push_back({"ingest_comments", com_lines, com_lines - pairs.size(), pairs.size()});
    return result;
}

namespace {

struct ThreadOutcome {
    std::optional<Utterance> speaker;
    std::vector<Utterance> listeners;
    std::vector<RejectRecord> rejects;
};

std::string cleaned_or_empty(const Validated& v) {
    return std::holds_alternative<std::string>(v) ? std::get<std::string>(v) : std::string{};
}

ThreadOutcome curate_thread(const Thread& t, const CurateConfig& config, const SyntaxAnalyzer& analyzer) {
    ThreadOutcome out;
    const auto& sub = t.submission;
    const Validated title = clean(sub.title, config.validation);
    const Validated body = clean(sub.body, config.validation);
    if (std::holds_alternative<RejectReason>(title) && std::holds_alternative<RejectReason>(body)) {
        out.rejects.push_back({sub.id, Role::Speaker, std::string(reject_reason_name(std::get<RejectReason>(title))),
                               sub.title});
    } else if (auto d = derive_speaker_utterance(cleaned_or_empty(title), cleaned_or_empty(body), analyzer,
                                                 config.validation)) {
        out.speaker = make_utterance(d->text, Role::Speaker, sub.id, sub.source);
    } else {
        out.rejects.push_back({sub.id, Role::Speaker, "NominalRoot", sub.title});
    }

    for (const auto& c : t.comments) {
        Validated v = clean(c.body, config.validation);
        if (auto* reason = std::get_if<RejectReason>(&v)) {
            out.rejects.push_back({c.id, Role::Listener, std::string(reject_reason_name(*reason)), c.body});
            continue;
        }
        std::string text = std::get<std::string>(v);
        if (config.summarize_listeners && split_sentences(text).size() > 1) {
            Validated s = validate(summarize_one(text), config.validation);
            if (auto* reason = std::get_if<RejectReason>(&s)) {
                out.rejects.push_back({c.id, Role::Listener, std::string(reject_reason_name(*reason)), c.body});
                continue;
            }
            text = std::get<std::string>(s);
        }
        if (config.listener_root_filter && !root_is_verb(text, analyzer)) {
            out.rejects.push_back({c.id, Role::Listener, "NominalRoot", c.body});
            continue;
        }
        out.listeners.push_back(make_utterance(std::move(text), Role::Listener, c.id, sub.source));
    }
    return out;
}

}  // namespace

CurateResult curate(const std::vector<Thread>& threads, const CurateConfig& config, const SyntaxAnalyzer& analyzer,
                    std::size_t workers) {
    std::vector<ThreadOutcome> outcomes(threads.size());
    parallel_blocks(threads.size(), workers ? workers : default_workers(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) outcomes[i] = curate_thread(threads[i], config, analyzer);
    });

    CurateResult result;
    std::vector<Utterance> speakers, listeners;
    std::size_t comment_count = 0;
    for (std::size_t i = 0; i < threads.size(); ++i) {
        comment_count += threads[i].comments.size();
        auto& o = outcomes[i];
        if (o.speaker) speakers.push_back(std::move(*o.speaker));
        for (auto& l : o.listeners) listeners.push_back(std::move(l));
        for (auto& r : o.rejects) result.rejects.push_back(std::move(r));
    }
    result.stages.push_back({"curate_speakers", threads.size(), threads.size() - speakers.size(), speakers.size()});
    result.stages.push_back({"curate_listeners", comment_count, comment_count - listeners.size(), listeners.size()});

    auto guard = [&](std::vector<Utterance> side, const char* stage) {
        const std::size_t n = side.size();
        auto g = apply_length_guard(std::move(side), config.max_tokens);
        for (const auto& u : g.dropped) result.rejects.push_back({u.source_id, u.role, "TooLong", u.text});
        result.stages.push_back({stage, n, g.dropped.size(), g.kept.size()});
        return std::move(g.kept);
    };
    speakers = guard(std::move(speakers), "length_guard_speakers");
    listeners = guard(std::move(listeners), "length_guard_listeners");

    result.utterances = std::move(speakers);
    for (auto& l : listeners) result.utterances.push_back(std::move(l));
    return result;
}

std::vector<UtterancePair> utterance_pairs(const std::vector<Thread>& threads) {
    std::vector<UtterancePair> out;
    for (const auto& t : threads)
        for (const auto& c : t.comments)
            out.push_back({utterance_key(Role::Speaker, t.submission.id), utterance_key(Role::Listener, c.id)});
    return out;
}

VectorMatrix embed_utterances(const std::vector<Utterance>& utterances, const Encoder& encoder) {
    std::vector<std::string> texts;
    texts.reserve(utterances.size());
    for (const auto& u : utterances) texts.push_back(u.text);
    auto vectors = encoder.encode_batch(texts);
    VectorMatrix m(encoder.dimension());
    m.reserve(utterances.size());
    for (std::size_t i = 0; i < utterances.size(); ++i) m.add(utterances[i].key(), vectors[i]);
    return m;
}

std::vector<Cluster> cluster_role(const VectorMatrix& vectors, Role role, double threshold, ClusterMode mode,
                                  std::size_t min_community_size, std::uint64_t seed, std::size_t workers) {
    const std::string prefix = utterance_key(role, "");
    VectorMatrix side(vectors.dim());
    for (std::size_t i = 0; i < vectors.size(); ++i)
        if (vectors.id(i).starts_with(prefix)) side.add(vectors.id(i), vectors.row(i));
    ClusterParams params;
    params.threshold = threshold;
    params.min_community_size = min_community_size;
    params.seed = seed;
    params.id_prefix = role == Role::Speaker ? "cs" : "cl";
    params.workers = workers;
    return mode == ClusterMode::Fast ? fast_community_detect(side, params) : two_phase_cluster(side, params);
}

namespace {

std::string dump_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

}  // namespace

void write_utterances(const std::filesystem::path& path, const std::vector<Utterance>& utterances) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& u : utterances)
        out << dump_line({{"id", u.source_id}, {"origin", u.origin}, {"role", role_name(u.role)}, {"text", u.text}})
            << '\n';
}

std::vector<Utterance> read_utterances(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path.string());
    std::vector<Utterance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        try {
            if (obj.is_discarded()) throw std::invalid_argument("not JSON");
            out.push_back(make_utterance(obj.at("text").get<std::string>(),
                                         parse_role(obj.at("role").get<std::string>()),
                                         obj.at("id").get<std::string>(), obj.value("origin", std::string{})));
        } catch (const std::exception& e) {
            throw LoadError(path.filename().string() + ": bad utterance at line " + std::to_string(line_no) + ": " +
                            e.what());
        }
    }
    return out;
}

void write_rejects(const std::filesystem::path& path, const std::vector<RejectRecord>& rejects) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& r : rejects)
        out << dump_line({{"role", role_name(r.role)}, {"rule", r.rule}, {"source_id", r.source_id}, {"text", r.text}})
            << '\n';
}

namespace {

template <class F>
auto run_stage(const char* stage, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(stage, e.what());
    }
}

std::int64_t newest_record(const std::vector<Thread>& threads) {
    std::int64_t ts = 0;
    for (const auto& t : threads) {
        ts = std::max(ts, t.submission.created_utc);
        for (const auto& c : t.comments) ts = std::max(ts, c.created_utc);
    }
    return ts;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    const auto& work = config.output.work_dir;
    std::filesystem::create_directories(work);
    std::vector<StageCount> stages;

    auto threads = run_stage("ingest", [&] {
        auto r = ingest(config.input);
        if (r.threads.empty()) throw std::runtime_error("empty graph: no submissions in the input window");
        write_threads(work / "threads.jsonl", r.threads);
        stages.insert(stages.end(), r.stages.begin(), r.stages.end());
        return std::move(r.threads);
    });

    auto utterances = run_stage("curate", [&] {
        auto analyzer = make_analyzer(config.curate.analyzer);
        auto r = curate(threads, config.curate, *analyzer, config.workers);
        write_utterances(work / "utterances.jsonl", r.utterances);
        write_rejects(work / "rejects.jsonl", r.rejects);
        stages.insert(stages.end(), r.stages.begin(), r.stages.end());
        const bool any_speaker = std::any_of(r.utterances.begin(), r.utterances.end(),
                                             [](const Utterance& u) { return u.role == Role::Speaker; });
        if (!any_speaker) throw std::runtime_error("empty graph: no speaker utterance survived curation");
        return std::move(r.utterances);
    });

    auto encoder = run_stage("embed", [&] { return make_encoder(config.embed.encoder, config.embed.dimension); });
    auto vectors = run_stage("embed", [&] {
        auto m = embed_utterances(utterances, *encoder);
        write_vector_cache(work / "vectors.bin", encoder->binding(), m);
        stages.push_back({"embed", utterances.size(), 0, m.size()});
        return m;
    });

    auto [speaker_clusters, listener_clusters] = run_stage("cluster", [&] {
        const auto& c = config.cluster;
        auto s = cluster_role(vectors, Role::Speaker, c.speaker_threshold, c.speaker_mode, c.min_community_size,
                              config.seed, config.workers);
        auto l = cluster_role(vectors, Role::Listener, c.listener_threshold, c.listener_mode, c.min_community_size,
                              config.seed, config.workers);
        write_clusters(work / "speaker_clusters.jsonl", s);
        write_clusters(work / "listener_clusters.jsonl", l);
        std::size_t sm = 0, lm = 0;
        for (const auto& x : s) sm += x.member_ids.size();
        for (const auto& x : l) lm += x.member_ids.size();
        stages.push_back({"cluster_speakers", sm, 0, sm});
        stages.push_back({"cluster_listeners", lm, 0, lm});
        return std::pair{std::move(s), std::move(l)};
    });

    auto graph = run_stage("build", [&] {
        GraphManifest m;
        m.encoder = encoder->binding();
        m.speaker_threshold = config.cluster.speaker_threshold;
        m.listener_threshold = config.cluster.listener_threshold;
        m.build_timestamp = config.output.build_timestamp.value_or(newest_record(threads));
        m.seed = config.seed;
        BuildStats bs;
        auto g = build_graph(speaker_clusters, listener_clusters, utterances, utterance_pairs(threads), vectors,
                             std::move(m), &bs);
        stages.push_back({"link", bs.pairs, bs.dropped, bs.linked});
        return g;
    });

    run_stage("label", [&] {
        auto classifier = make_classifier(config.label.classifier);
        label_graph(graph, *classifier, {config.label.gamma, config.workers});
        const std::size_t nodes = graph.speakers().size() + graph.listeners().size();
        stages.push_back({"label", nodes, 0, nodes});
    });

    for (const auto& s : stages)
        if (s.input != s.rejected + s.output)
            throw PipelineError(s.stage, "stage counts do not reconcile: " + std::to_string(s.input) +
                                             " != " + std::to_string(s.rejected) + " + " + std::to_string(s.output));
    graph.manifest().stages = stages;

    run_stage("save", [&] { save_graph(graph, config.output.graph_dir); });
    return {config.output.graph_dir, stages, graph_stats(graph)};
}

std::string directory_digest(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = fnv1a64("");
    for (const auto& f : files) {
        const std::string name = f.filename().string();
        h = fnv1a64(name, h);
        h = fnv1a64(std::string_view("\0", 1), h);
        std::ifstream in(f, std::ios::binary);
        std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        h = fnv1a64(data, h);
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace afec
