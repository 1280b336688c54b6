#include "afec/service.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include <httplib.h>

#include "afec/errors.hpp"
#include "afec/text.hpp"

using json = nlohmann::json;

namespace afec {

namespace {

constexpr std::size_t kMaxSearchResults = 100;

json label_json(const std::optional<Label>& label) {
    return label ? json(std::string(label_name(*label))) : json(nullptr);
}

HttpResult error(int status, const std::string& message) { return {status, {{"error", message}}}; }

template <Role R>
json node_summary(const Node<R>& node) {
    return {{"id", node.id.value}, {"representative", node.representative}, {"label", label_json(node.label)}};
}

}  // namespace

std::unique_ptr<Service> Service::open(const std::filesystem::path& graph_dir, const ServiceOptions& options) {
    KnowledgeGraph graph = load_graph(graph_dir);
    const auto& binding = graph.manifest().encoder;
    auto encoder = make_encoder(options.encoder.empty() ? binding.name : options.encoder, binding.dimension);
    std::unique_ptr<EmotionClassifier> classifier;
    if (!options.classifier.empty()) classifier = make_classifier(options.classifier);
    return std::make_unique<Service>(std::move(graph), std::move(encoder), std::move(classifier), options);
}

Service::Service(KnowledgeGraph graph, std::unique_ptr<Encoder> encoder, std::unique_ptr<EmotionClassifier> classifier,
                 ServiceOptions options)
    : graph_(std::move(graph)), encoder_(std::move(encoder)), classifier_(std::move(classifier)),
      options_(std::move(options)) {
    index_ = build_index(graph_, *encoder_);
}

json reply_to_json(const Reply& reply, const KnowledgeGraph& graph) {
    const auto& speaker = graph.speaker(reply.speaker);
    return {{"reply", reply.text},
            {"listener_node_id", reply.listener.value},
            {"speaker_node", node_summary(speaker)},
            {"similarity", reply.similarity},
            {"reply_label", label_json(reply.reply_label)},
            {"input_label", label_json(reply.input_label)},
            {"strategy", std::string(strategy_name(reply.strategy))},
            {"seed", reply.seed},
            {"candidate_count", reply.candidates},
            {"fallback", reply.fallback}};
}

HttpResult handle_chat(const Service& service, std::string_view request_body) {
    json req = json::parse(request_body, nullptr, false);
    if (req.is_discarded() || !req.is_object()) return error(400, "request body must be a JSON object");
    if (!req.contains("text") || !req["text"].is_string()) return error(400, "field 'text' (string) is required");
    const std::string text = req["text"].get<std::string>();
    if (trim(text).empty()) return error(400, "text is empty");

    Strategy strategy = Strategy::Random;
    std::uint64_t seed = service.options().default_seed;
    bool include_candidates = false;
    try {
        if (req.contains("strategy")) strategy = parse_strategy(req.at("strategy").get<std::string>());
        if (req.contains("seed") && !req["seed"].is_null()) seed = req.at("seed").get<std::uint64_t>();
        if (req.contains("include_candidates")) include_candidates = req.at("include_candidates").get<bool>();
    } catch (const json::exception&) {
        return error(400, "bad field type in request");
    } catch (const std::invalid_argument& e) {
        return error(400, e.what());
    }

    Reply reply;
    try {
        reply = chat(service.index(), service.graph(), service.encoder(), service.classifier(), text, strategy, seed,
                     service.options().chat);
    } catch (const NoReplyError& e) {
        return error(422, e.what());
    } catch (const std::invalid_argument& e) {
        return error(400, e.what());
    }
    json body = reply_to_json(reply, service.graph());
    if (include_candidates) {
        const auto pool = candidate_pool(service.graph(), reply.speaker, strategy, reply.input_label);
        json candidates = json::array();
        for (const auto* n : service.graph().neighbors(reply.speaker)) {
            json c = node_summary(*n);
            c["in_degree"] = service.graph().in_degree(n->id);
            c["eligible"] = std::find(pool.begin(), pool.end(), n) != pool.end();
            c["chosen"] = n->id == reply.listener;
            candidates.push_back(std::move(c));
        }
        body["candidates"] = std::move(candidates);
    }
    return {200, std::move(body)};
}

HttpResult handle_node(const Service& service, std::string_view id) {
    const auto& g = service.graph();
    const std::string key(id);
    auto utterances = [](const auto& node) {
        json out = json::array();
        for (const auto& u : node.utterances) out.push_back({{"id", u.source_id}, {"origin", u.origin}, {"text", u.text}});
        return out;
    };
    if (const auto* s = g.find(SpeakerId(key))) {
        json body = node_summary(*s);
        body["role"] = "speaker";
        body["out_degree"] = g.out_edges(s->id).size();
        body["utterances"] = utterances(*s);
        return {200, std::move(body)};
    }
    if (const auto* l = g.find(ListenerId(key))) {
        json body = node_summary(*l);
        body["role"] = "listener";
        body["in_degree"] = g.in_degree(l->id);
        body["utterances"] = utterances(*l);
        return {200, std::move(body)};
    }
    return error(404, "unknown node: " + key);
}

HttpResult handle_neighbors(const Service& service, std::string_view id) {
    const auto& g = service.graph();
    const std::string key(id);
    if (const auto* s = g.find(SpeakerId(key))) {
        json out = json::array();
        for (const Edge* e : g.out_edges(s->id)) {
            const auto& l = g.listener(e->listener);
            json n = node_summary(l);
            n["in_degree"] = g.in_degree(l.id);
            n["support"] = e->support;
            out.push_back(std::move(n));
        }
        json body = node_summary(*s);
        body["role"] = "speaker";
        body["neighbors"] = std::move(out);
        return {200, std::move(body)};
    }
    if (const auto* l = g.find(ListenerId(key))) {
        json out = json::array();
        for (const Edge* e : g.in_edges(l->id)) {
            json n = node_summary(g.speaker(e->speaker));
            n["support"] = e->support;
            out.push_back(std::move(n));
        }
        json body = node_summary(*l);
        body["role"] = "listener";
        body["neighbors"] = std::move(out);
        return {200, std::move(body)};
    }
    return error(404, "unknown node: " + key);
}

HttpResult handle_search(const Service& service, std::string_view q, std::string_view k) {
    if (trim(q).empty()) return error(400, "query parameter q is required");
    std::size_t count = 5;
    if (!k.empty()) {
        auto [ptr, ec] = std::from_chars(k.data(), k.data() + k.size(), count);
        if (ec != std::errc{} || ptr != k.data() + k.size() || count == 0)
            return error(400, "k must be a positive integer");
        count = std::min(count, kMaxSearchResults);
    }
    const auto query = service.encoder().encode(q);
    json results = json::array();
    for (const auto& m : search(service.index(), query, count)) {
        json r = node_summary(service.graph().speaker(m.id));
        r["similarity"] = m.similarity;
        results.push_back(std::move(r));
    }
    return {200, {{"query", std::string(q)}, {"results", std::move(results)}}};
}

HttpResult handle_stats(const Service& service) {
    json body = stats_to_json(graph_stats(service.graph()));
    const auto& m = service.graph().manifest();
    body["encoder"] = describe(m.encoder);
    body["labeler"] = m.labeler;
    return {200, std::move(body)};
}

HttpResult handle_labels() {
    json labels = json::array();
    for (Label l : all_labels())
        labels.push_back({{"name", std::string(label_name(l))},
                          {"class", label_class(l) == LabelClass::Emotion ? "emotion" : "intent"},
                          {"group", similarity_group(l)},
                          {"empathetic_intent", is_empathetic_intent(l)}});
    json groups = json::array();
    for (const auto& g : similarity_groups()) {
        json names = json::array();
        for (Label l : g) names.push_back(std::string(label_name(l)));
        groups.push_back(std::move(names));
    }
    json strategies = json::array();
    for (Strategy s : all_strategies()) strategies.push_back(std::string(strategy_name(s)));
    return {200, {{"labels", std::move(labels)}, {"groups", std::move(groups)}, {"strategies", std::move(strategies)}}};
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(const Service& service) : impl_(std::make_unique<Impl>()) {
    auto& server = impl_->server;
    auto send = [](httplib::Response& res, const HttpResult& r) {
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
    };
    server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    server.Post("/v1/chat", [&service, send](const httplib::Request& req, httplib::Response& res) {
        send(res, handle_chat(service, req.body));
    });
    server.Get(R"(/v1/nodes/([^/]+)/neighbors)", [&service, send](const httplib::Request& req, httplib::Response& res) {
        send(res, handle_neighbors(service, req.matches[1].str()));
    });
    server.Get(R"(/v1/nodes/([^/]+))", [&service, send](const httplib::Request& req, httplib::Response& res) {
        send(res, handle_node(service, req.matches[1].str()));
    });
    server.Get("/v1/search", [&service, send](const httplib::Request& req, httplib::Response& res) {
        send(res, handle_search(service, req.get_param_value("q"), req.get_param_value("k")));
    });
    server.Get("/v1/stats", [&service, send](const httplib::Request&, httplib::Response& res) { send(res, handle_stats(service)); });
    server.Get("/v1/labels", [send](const httplib::Request&, httplib::Response& res) { send(res, handle_labels()); });
    server.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send(res, error(500, what));
    });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

bool HttpServer::running() const { return impl_->server.is_running(); }

void serve(const Service& service, const std::string& host, int port) {
    HttpServer server(service);
    server.bind(host, port);
    server.run();
}

}  // namespace afec
