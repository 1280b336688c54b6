#include "afec/kgraph.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "afec/errors.hpp"

using json = nlohmann::json;

namespace afec {

namespace {

std::string node_id(char prefix, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%08zu", prefix, index);
    return buf;
}

template <Role R>
void check_node(const Node<R>& node) {
    if (node.id.value.empty()) throw GraphError("node with empty id");
    if (node.utterances.empty()) throw GraphError("node " + node.id.value + " has no utterances");
    for (const auto& u : node.utterances)
        if (u.role != R)
            throw GraphError("node " + node.id.value + " holds a " + std::string(role_name(u.role)) + " utterance");
}

template <Role R>
std::unordered_map<std::string, std::size_t> index_nodes(std::vector<Node<R>>& nodes) {
    std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        check_node(nodes[i]);
        if (!index.emplace(nodes[i].id.value, i).second) throw GraphError("duplicate node id " + nodes[i].id.value);
    }
    return index;
}

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

}  // namespace

json manifest_to_json(const GraphManifest& m) {
    json stages = json::array();
    for (const auto& s : m.stages)
        stages.push_back({{"stage", s.stage}, {"input", s.input}, {"rejected", s.rejected}, {"output", s.output}});
    return {
        {"format_version", m.format_version},
        {"encoder", {{"name", m.encoder.name}, {"version", m.encoder.version}, {"dimension", m.encoder.dimension}}},
        {"speaker_threshold", m.speaker_threshold},
        {"listener_threshold", m.listener_threshold},
        {"build_timestamp", m.build_timestamp},
        {"seed", m.seed},
        {"labeler", m.labeler},
        {"stages", stages},
        {"counts", {{"speakers", m.speaker_count}, {"listeners", m.listener_count}, {"edges", m.edge_count}}},
    };
}

GraphManifest manifest_from_json(const json& obj) {
    GraphManifest m;
    m.format_version = obj.at("format_version").get<int>();
    const auto& enc = obj.at("encoder");
    m.encoder = {enc.at("name").get<std::string>(), enc.at("version").get<std::string>(),
                 enc.at("dimension").get<std::size_t>()};
    m.speaker_threshold = obj.at("speaker_threshold").get<double>();
    m.listener_threshold = obj.at("listener_threshold").get<double>();
    m.build_timestamp = obj.at("build_timestamp").get<std::int64_t>();
    m.seed = obj.value("seed", std::uint64_t{0});
    m.labeler = obj.value("labeler", std::string{});
    for (const auto& s : obj.value("stages", json::array()))
        m.stages.push_back({s.at("stage").get<std::string>(), s.at("input").get<std::size_t>(),
                            s.at("rejected").get<std::size_t>(), s.at("output").get<std::size_t>()});
    const auto& counts = obj.at("counts");
    m.speaker_count = counts.at("speakers").get<std::size_t>();
    m.listener_count = counts.at("listeners").get<std::size_t>();
    m.edge_count = counts.at("edges").get<std::size_t>();
    return m;
}

KnowledgeGraph::KnowledgeGraph(std::vector<SpeakerNode> speakers, std::vector<ListenerNode> listeners,
                               std::vector<Edge> edges, GraphManifest manifest)
    : speakers_(std::move(speakers)), listeners_(std::move(listeners)), edges_(std::move(edges)),
      manifest_(std::move(manifest)) {
    speaker_index_ = index_nodes(speakers_);
    listener_index_ = index_nodes(listeners_);

    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
        if (a.speaker != b.speaker) return a.speaker < b.speaker;
        return a.listener < b.listener;
    });
    out_.assign(speakers_.size(), {});
    in_.assign(listeners_.size(), {});
    in_degree_.assign(listeners_.size(), 0);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const Edge& edge = edges_[e];
        if (edge.support == 0)
            throw GraphError("edge " + edge.speaker.value + " -> " + edge.listener.value + " has zero support");
        if (e > 0 && edges_[e - 1].speaker == edge.speaker && edges_[e - 1].listener == edge.listener)
            throw GraphError("duplicate edge " + edge.speaker.value + " -> " + edge.listener.value);
        auto s = speaker_index_.find(edge.speaker.value);
        if (s == speaker_index_.end()) throw GraphError("edge from unknown speaker node " + edge.speaker.value);
        auto l = listener_index_.find(edge.listener.value);
        if (l == listener_index_.end()) throw GraphError("edge to unknown listener node " + edge.listener.value);
        out_[s->second].push_back(e);
        in_[l->second].push_back(e);
        ++in_degree_[l->second];
    }
    manifest_.speaker_count = speakers_.size();
    manifest_.listener_count = listeners_.size();
    manifest_.edge_count = edges_.size();
}

const SpeakerNode* KnowledgeGraph::find(const SpeakerId& id) const noexcept {
    auto it = speaker_index_.find(id.value);
    return it == speaker_index_.end() ? nullptr : &speakers_[it->second];
}

const ListenerNode* KnowledgeGraph::find(const ListenerId& id) const noexcept {
    auto it = listener_index_.find(id.value);
    return it == listener_index_.end() ? nullptr : &listeners_[it->second];
}

std::size_t KnowledgeGraph::index_of(const SpeakerId& id) const {
    auto it = speaker_index_.find(id.value);
    if (it == speaker_index_.end()) throw LookupError("unknown speaker node: " + id.value);
    return it->second;
}

std::size_t KnowledgeGraph::index_of(const ListenerId& id) const {
    auto it = listener_index_.find(id.value);
    if (it == listener_index_.end()) throw LookupError("unknown listener node: " + id.value);
    return it->second;
}

const SpeakerNode& KnowledgeGraph::speaker(const SpeakerId& id) const { return speakers_[index_of(id)]; }
const ListenerNode& KnowledgeGraph::listener(const ListenerId& id) const { return listeners_[index_of(id)]; }

std::size_t KnowledgeGraph::in_degree(const ListenerId& id) const { return in_degree_[index_of(id)]; }

std::vector<const ListenerNode*> KnowledgeGraph::neighbors(const SpeakerId& id) const {
    std::vector<const ListenerNode*> out;
    for (auto e : out_[index_of(id)]) out.push_back(&listeners_[listener_index_.at(edges_[e].listener.value)]);
    return out;
}

std::vector<const Edge*> KnowledgeGraph::out_edges(const SpeakerId& id) const {
    std::vector<const Edge*> out;
    for (auto e : out_[index_of(id)]) out.push_back(&edges_[e]);
    return out;
}

std::vector<const Edge*> KnowledgeGraph::in_edges(const ListenerId& id) const {
    std::vector<const Edge*> out;
    for (auto e : in_[index_of(id)]) out.push_back(&edges_[e]);
    return out;
}

void KnowledgeGraph::set_label(const SpeakerId& id, Label label) { speakers_[index_of(id)].label = label; }
void KnowledgeGraph::set_label(const ListenerId& id, Label label) { listeners_[index_of(id)].label = label; }

bool KnowledgeGraph::has_vectors() const noexcept {
    if (speakers_.empty() && listeners_.empty()) return false;
    auto has = [](const auto& n) { return !n.vector.empty(); };
    return std::all_of(speakers_.begin(), speakers_.end(), has) &&
           std::all_of(listeners_.begin(), listeners_.end(), has);
}

bool KnowledgeGraph::fully_labeled() const noexcept {
    auto labeled = [](const auto& n) { return n.label.has_value(); };
    return std::all_of(speakers_.begin(), speakers_.end(), labeled) &&
           std::all_of(listeners_.begin(), listeners_.end(), labeled);
}

namespace {

template <Role R>
std::vector<Node<R>> make_nodes(const std::vector<Cluster>& clusters, char prefix,
                                const std::unordered_map<std::string, const Utterance*>& by_key,
                                const std::unordered_map<std::string, std::size_t>& vector_row,
                                const VectorMatrix& vectors,
                                std::unordered_map<std::string, std::size_t>& owner) {
    std::vector<Node<R>> nodes;
    nodes.reserve(clusters.size());
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const Cluster& cluster = clusters[c];
        Node<R> node;
        node.id = NodeId<R>(node_id(prefix, c));
        std::vector<std::string> members = cluster.member_ids;
        std::sort(members.begin(), members.end());
        for (const auto& key : members) {
            auto it = by_key.find(key);
            if (it == by_key.end())
                throw GraphError("cluster " + cluster.id + " references unknown utterance " + key);
            if (it->second->role != R)
                throw GraphError("cluster " + cluster.id + " mixes in " + std::string(role_name(it->second->role)) +
                                 " utterance " + key);
            if (!owner.emplace(key, c).second) throw GraphError("utterance " + key + " is in more than one cluster");
            node.utterances.push_back(*it->second);
        }
        if (node.utterances.empty()) throw GraphError("cluster " + cluster.id + " is empty");
        const std::string& rep = cluster.representative_id.empty() ? members.front() : cluster.representative_id;
        if (!std::binary_search(members.begin(), members.end(), rep))
            throw GraphError("cluster " + cluster.id + " representative " + rep + " is not a member");
        node.representative = by_key.at(rep)->text;
        if (!vectors.empty()) {
            auto v = vector_row.find(rep);
            if (v == vector_row.end()) throw GraphError("no vector for representative " + rep);
            node.vector = vectors.vector(v->second);
        }
        nodes.push_back(std::move(node));
    }
    return nodes;
}

}  // namespace

KnowledgeGraph build_graph(const std::vector<Cluster>& speaker_clusters, const std::vector<Cluster>& listener_clusters,
                           const std::vector<Utterance>& utterances, const std::vector<UtterancePair>& pairs,
                           const VectorMatrix& vectors, GraphManifest manifest, BuildStats* stats) {
    std::unordered_map<std::string, const Utterance*> by_key;
    by_key.reserve(utterances.size());
    for (const auto& u : utterances) by_key.emplace(u.key(), &u);
    std::unordered_map<std::string, std::size_t> vector_row;
    vector_row.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) vector_row.emplace(vectors.id(i), i);

    std::unordered_map<std::string, std::size_t> speaker_owner, listener_owner;
    auto speakers = make_nodes<Role::Speaker>(speaker_clusters, 'S', by_key, vector_row, vectors, speaker_owner);
    auto listeners = make_nodes<Role::Listener>(listener_clusters, 'L', by_key, vector_row, vectors, listener_owner);

    BuildStats local;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> support;
    for (const auto& p : pairs) {
        ++local.pairs;
        auto s = speaker_owner.find(p.speaker_key);
        auto l = listener_owner.find(p.listener_key);
        if (s == speaker_owner.end() || l == listener_owner.end()) {
            ++local.dropped;
            continue;
        }
        ++local.linked;
        ++support[{s->second, l->second}];
    }
    std::vector<Edge> edges;
    edges.reserve(support.size());
    for (const auto& [key, n] : support) edges.push_back({speakers[key.first].id, listeners[key.second].id, n});
    if (stats) *stats = local;
    return KnowledgeGraph(std::move(speakers), std::move(listeners), std::move(edges), std::move(manifest));
}

namespace {

template <Role R>
json node_to_json(const Node<R>& node) {
    json utts = json::array();
    for (const auto& u : node.utterances) utts.push_back({{"id", u.source_id}, {"origin", u.origin}, {"text", u.text}});
    return {{"id", node.id.value},
            {"label", node.label ? json(std::string(label_name(*node.label))) : json(nullptr)},
            {"representative", node.representative},
            {"utterances", utts}};
}

template <Role R>
Node<R> node_from_json(const json& obj) {
    Node<R> node;
    node.id = NodeId<R>(obj.at("id").get<std::string>());
    const auto& label = obj.at("label");
    if (!label.is_null()) {
        auto parsed = parse_label(label.get<std::string>());
        if (!parsed) throw LoadError("node " + node.id.value + " has unknown label " + label.get<std::string>());
        node.label = *parsed;
    }
    node.representative = obj.at("representative").get<std::string>();
    for (const auto& u : obj.at("utterances"))
        node.utterances.push_back(make_utterance(u.at("text").get<std::string>(), R, u.at("id").get<std::string>(),
                                                 u.value("origin", std::string{})));
    return node;
}

template <class F>
std::size_t read_lines(const std::filesystem::path& path, F&& fn) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path.string());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++n;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            throw LoadError(path.filename().string() + ": malformed record at line " + std::to_string(n));
        try {
            fn(obj);
        } catch (const json::exception& e) {
            throw LoadError(path.filename().string() + ": bad record at line " + std::to_string(n) + ": " + e.what());
        }
    }
    return n;
}

template <Role R>
void write_vectors(const std::filesystem::path& path, const EncoderBinding& binding, const std::vector<Node<R>>& nodes) {
    VectorMatrix m(binding.dimension);
    m.reserve(nodes.size());
    for (const auto& n : nodes) m.add(n.id.value, n.vector);
    write_vector_cache(path, binding, m);
}

template <Role R>
void attach_vectors(const std::filesystem::path& path, const GraphManifest& manifest, std::vector<Node<R>>& nodes) {
    VectorCache cache = read_vector_cache(path);
    if (cache.encoder != manifest.encoder)
        throw LoadError(path.filename().string() + " was written by encoder " + describe(cache.encoder) +
                        ", manifest names " + describe(manifest.encoder));
    if (cache.vectors.size() != nodes.size())
        throw LoadError(path.filename().string() + " holds " + std::to_string(cache.vectors.size()) +
                        " vectors for " + std::to_string(nodes.size()) + " nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (cache.vectors.id(i) != nodes[i].id.value)
            throw LoadError(path.filename().string() + ": vector " + cache.vectors.id(i) + " out of order");
        nodes[i].vector = cache.vectors.vector(i);
    }
}

}  // namespace

void save_graph(const KnowledgeGraph& graph, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        return out;
    };
    {
        auto out = open("manifest.json");
        json m = manifest_to_json(graph.manifest());
        m["vectors"] = graph.has_vectors();
        out << m.dump(2, ' ', false, json::error_handler_t::replace) << '\n';
    }
    {
        auto out = open("speakers.jsonl");
        for (const auto& n : graph.speakers()) out << dump(node_to_json(n)) << '\n';
    }
    {
        auto out = open("listeners.jsonl");
        for (const auto& n : graph.listeners()) out << dump(node_to_json(n)) << '\n';
    }
    {
        auto out = open("edges.jsonl");
        for (const auto& e : graph.edges())
            out << dump({{"listener", e.listener.value}, {"speaker", e.speaker.value}, {"support", e.support}}) << '\n';
    }
    std::error_code ec;
    if (graph.has_vectors()) {
        write_vectors(dir / "speaker_vectors.bin", graph.manifest().encoder, graph.speakers());
        write_vectors(dir / "listener_vectors.bin", graph.manifest().encoder, graph.listeners());
    } else {
        std::filesystem::remove(dir / "speaker_vectors.bin", ec);
        std::filesystem::remove(dir / "listener_vectors.bin", ec);
    }
}

KnowledgeGraph load_graph(const std::filesystem::path& dir) {
    std::ifstream min(dir / "manifest.json");
    if (!min) throw LoadError("no manifest.json in " + dir.string());
    json mj = json::parse(min, nullptr, false);
    if (mj.is_discarded() || !mj.is_object()) throw LoadError("manifest.json is not valid JSON");
    const int version = mj.value("format_version", -1);
    if (version != kGraphFormatVersion)
        throw LoadError("graph format version " + std::to_string(version) + " unsupported (expected " +
                        std::to_string(kGraphFormatVersion) + ")");
    GraphManifest manifest;
    try {
        manifest = manifest_from_json(mj);
    } catch (const json::exception& e) {
        throw LoadError(std::string("bad manifest: ") + e.what());
    }

    std::vector<SpeakerNode> speakers;
    std::vector<ListenerNode> listeners;
    std::vector<Edge> edges;
    auto check = [](const char* what, std::size_t got, std::size_t want) {
        if (got != want)
            throw LoadError(std::string(what) + ": " + std::to_string(got) + " records, manifest says " +
                            std::to_string(want) + " (truncated?)");
    };
    check("speakers.jsonl",
          read_lines(dir / "speakers.jsonl", [&](const json& o) { speakers.push_back(node_from_json<Role::Speaker>(o)); }),
          manifest.speaker_count);
    check("listeners.jsonl",
          read_lines(dir / "listeners.jsonl",
                     [&](const json& o) { listeners.push_back(node_from_json<Role::Listener>(o)); }),
          manifest.listener_count);
    check("edges.jsonl", read_lines(dir / "edges.jsonl", [&](const json& o) {
              edges.push_back({SpeakerId(o.at("speaker").get<std::string>()),
                               ListenerId(o.at("listener").get<std::string>()), o.at("support").get<std::size_t>()});
          }),
          manifest.edge_count);

    if (mj.value("vectors", false)) {
        attach_vectors(dir / "speaker_vectors.bin", manifest, speakers);
        attach_vectors(dir / "listener_vectors.bin", manifest, listeners);
    }
    try {
        return KnowledgeGraph(std::move(speakers), std::move(listeners), std::move(edges), std::move(manifest));
    } catch (const GraphError& e) {
        throw LoadError(std::string("inconsistent graph: ") + e.what());
    }
}

GraphStats graph_stats(const KnowledgeGraph& graph) {
    GraphStats s;
    s.speakers = graph.speakers().size();
    s.listeners = graph.listeners().size();
    s.edges = graph.edges().size();
    for (const auto& e : graph.edges()) s.total_support += e.support;
    for (const auto& n : graph.speakers()) {
        s.utterances += n.utterances.size();
        const std::size_t d = graph.out_edges(n.id).size();
        ++s.speaker_out_degree[d];
        if (d == 0) ++s.isolated_speakers;
    }
    for (std::size_t i = 0; i < graph.listeners().size(); ++i) {
        s.utterances += graph.listeners()[i].utterances.size();
        const std::size_t d = graph.in_degree_at(i);
        ++s.listener_in_degree[d];
        if (d == 0) ++s.isolated_listeners;
    }
    return s;
}

json stats_to_json(const GraphStats& s) {
    auto hist = [](const std::map<std::size_t, std::size_t>& h) {
        json out = json::object();
        for (const auto& [k, v] : h) out[std::to_string(k)] = v;
        return out;
    };
    return {{"speakers", s.speakers},
            {"listeners", s.listeners},
            {"edges", s.edges},
            {"total_support", s.total_support},
            {"utterances", s.utterances},
            {"isolated_speakers", s.isolated_speakers},
            {"isolated_listeners", s.isolated_listeners},
            {"listener_in_degree", hist(s.listener_in_degree)},
            {"speaker_out_degree", hist(s.speaker_out_degree)}};
}

std::string format_stats(const GraphStats& s) {
    std::ostringstream out;
    out << "speakers " << s.speakers << '\n'
        << "listeners " << s.listeners << '\n'
        << "edges " << s.edges << '\n'
        << "total_support " << s.total_support << '\n'
        << "utterances " << s.utterances << '\n'
        << "isolated_speakers " << s.isolated_speakers << '\n'
        << "isolated_listeners " << s.isolated_listeners << '\n'
        << "listener in-degree histogram\n";
    for (const auto& [d, n] : s.listener_in_degree) out << "  " << d << '\t' << n << '\n';
    out << "speaker out-degree histogram\n";
    for (const auto& [d, n] : s.speaker_out_degree) out << "  " << d << '\t' << n << '\n';
    return out.str();
}

}  // namespace afec
